#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{EPICURVE_FIXTURES};

int run_cli(const std::string& args) {
    const auto cmd = fmt::format("\"{}\" {} >/dev/null 2>&1", EPICURVE_CLI, args);
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "epicurve_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string province_args(const fs::path& input, const fs::path& out) {
    return fmt::format("--input \"{}\" --population \"{}\" --out \"{}\"", input.string(),
                       (kFixtures / "population_province.csv").string(), out.string());
}

}  // namespace

TEST_CASE("Three provinces produce plots, a map and reports", "[cli]") {
    const auto out = fresh_dir("three");
    REQUIRE(run_cli(province_args(kFixtures / "province_3.csv", out)) == 0);
    std::size_t plots = 0;
    for (const auto& e : fs::directory_iterator(out / "plots")) plots += e.path().extension() == ".svg";
    REQUIRE(plots == 3);
    REQUIRE(fs::exists(out / "map.svg"));
    REQUIRE(fs::exists(out / "report.txt"));
    std::ifstream in(out / "report.json");
    const auto doc = nlohmann::json::parse(in);
    REQUIRE(doc["units"].size() == 3);

    // Re-running over an existing directory replaces it.
    REQUIRE(run_cli(province_args(kFixtures / "province_3.csv", out.string() + "/")) == 0);
    REQUIRE(fs::exists(out / "map.svg"));
}

TEST_CASE("Data errors exit 1 and leave no output directory", "[cli]") {
    const auto out = fresh_dir("nopop");
    const auto pop = fs::temp_directory_path() / "epicurve_cli_tests" / "unrelated_population.csv";
    std::ofstream(pop) << "codice,popolazione\n999,1000\n";
    REQUIRE(run_cli(fmt::format("--input \"{}\" --population \"{}\" --out \"{}\"",
                                (kFixtures / "province_3.csv").string(), pop.string(), out.string())) == 1);
    REQUIRE_FALSE(fs::exists(out));

    REQUIRE(run_cli(province_args(kFixtures / "does_not_exist.csv", out)) == 1);
    REQUIRE_FALSE(fs::exists(out));
}

TEST_CASE("Invalid flags exit 2", "[cli]") {
    const auto out = fresh_dir("flags");
    const auto base = province_args(kFixtures / "province_3.csv", out);
    REQUIRE(run_cli(base + " --p-cutoff 1.5") == 2);
    REQUIRE(run_cli(base + " --response icu") == 2);
    REQUIRE(run_cli(base + " --level county") == 2);
    REQUIRE(run_cli(base + " --jobs 0") == 2);
    REQUIRE(run_cli("--population x --out y") == 2);
    REQUIRE_FALSE(fs::exists(out));
}

TEST_CASE("Region run on an occupancy response", "[cli]") {
    const auto out = fresh_dir("region_icu");
    REQUIRE(run_cli(fmt::format("--input \"{}\" --population \"{}\" --out \"{}\" --level region --response icu "
                                "--jobs 2",
                                (kFixtures / "region_3.csv").string(),
                                (kFixtures / "population_region.csv").string(), out.string())) == 0);
    std::ifstream in(out / "report.json");
    const auto doc = nlohmann::json::parse(in);
    REQUIRE(doc["units"].size() == 3);
    for (const auto& u : doc["units"]) {
        REQUIRE(u["response"] == "icu");
        REQUIRE(u["verdict_kind"] != "logistic");
        REQUIRE(u["verdict_kind"] != "no_adequate_model");
    }
}
