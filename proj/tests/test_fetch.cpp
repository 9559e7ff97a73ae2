#include <catch_amalgamated.hpp>

#include <thread>

#include "epicurve/fetch.hpp"

using namespace epicurve;

TEST_CASE("URL sources are downloaded and parsed like files", "[fetch]") {
    const std::string body =
        "data,codice_provincia,denominazione_provincia,lat,long,totale_casi\n"
        "2020-03-01,15,Milano,45.4,9.1,40\n"
        "2020-03-02,15,Milano,45.4,9.1,55\n";
    httplib::Server server;
    server.Get("/dpc.csv", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(body, "text/csv");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto base = "http://127.0.0.1:" + std::to_string(port);
    const auto ds = load_dataset(base + "/dpc.csv", Level::Province, Schema::defaults(Level::Province));
    REQUIRE(ds.rows.size() == 2);
    REQUIRE(ds.rows[1].count(ResponseKind::CumulativeCases) == 55);
    REQUIRE_THROWS_AS(load_dataset(base + "/missing.csv", Level::Province, Schema::defaults(Level::Province)),
                      SourceUnreachable);

    server.stop();
    worker.join();
}

TEST_CASE("Unreachable hosts raise SourceUnreachable", "[fetch]") {
    REQUIRE(is_url("https://example.org/x.csv"));
    REQUIRE_FALSE(is_url("data/x.csv"));
    // Port 9 on loopback: nothing listens there in the test environment.
    REQUIRE_THROWS_AS(fetch_url("http://127.0.0.1:9/x.csv"), SourceUnreachable);
}
