#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "epicurve/ingestion.hpp"

using namespace epicurve;

namespace {

const std::filesystem::path kFixtures{EPICURVE_FIXTURES};

RawRow row(std::string date, std::string code, std::optional<std::int64_t> cases) {
    RawRow r;
    r.date = *parse_date(date);
    r.unit_code = std::move(code);
    r.unit_name = "Name " + r.unit_code;
    r.latitude = 45.0;
    r.longitude = 9.0;
    r.counts[static_cast<std::size_t>(ResponseKind::CumulativeCases)] = cases;
    return r;
}

const char* kSmallProvince =
    "data,stato,codice_regione,denominazione_regione,codice_provincia,denominazione_provincia,"
    "sigla_provincia,lat,long,totale_casi,note\n"
    "2020-02-24T18:00:00,ITA,3,Lombardia,15,Milano,MI,45.46,9.19,3,\n"
    "2020-02-24T18:00:00,ITA,3,Lombardia,16,Bergamo,BG,45.69,9.66,1,\n"
    "2020-02-25T18:00:00,ITA,3,Lombardia,15,Milano,MI,45.46,9.19,7,\n"
    "2020-02-25T18:00:00,ITA,3,Lombardia,16,Bergamo,BG,45.69,9.66,NA,\n";

}  // namespace

TEST_CASE("Province CSV rows are parsed by header name", "[ingestion]") {
    const auto ds = parse_dataset(kSmallProvince, Level::Province, Schema::defaults(Level::Province));
    REQUIRE(ds.rows.size() == 4);
    REQUIRE(ds.rows[0].unit_code == "15");
    REQUIRE(ds.rows[0].unit_name == "Milano");
    REQUIRE(format_date(ds.rows[2].date) == "2020-02-25");
    REQUIRE(ds.rows[2].count(ResponseKind::CumulativeCases) == 7);
    REQUIRE(*ds.rows[1].latitude == Catch::Approx(45.69));

    REQUIRE_FALSE(ds.rows[3].count(ResponseKind::CumulativeCases).has_value());
    REQUIRE(ds.warnings.size() == 1);
    REQUIRE(ds.warnings[0].find("'16'") != std::string::npos);
}

TEST_CASE("Column order does not matter", "[ingestion]") {
    const char* permuted =
        "totale_casi,long,lat,denominazione_provincia,codice_provincia,data\n"
        "\"12\",9.19,45.46,\"Milano, citta\",15,2020-03-01\r\n";
    const auto ds = parse_dataset(permuted, Level::Province, Schema::defaults(Level::Province));
    REQUIRE(ds.rows.size() == 1);
    REQUIRE(ds.rows[0].unit_name == "Milano, citta");
    REQUIRE(ds.rows[0].count(ResponseKind::CumulativeCases) == 12);
    REQUIRE(ds.warnings.empty());
}

TEST_CASE("Schema overrides rename columns", "[ingestion]") {
    Schema s = Schema::defaults(Level::Province);
    s.apply_overrides(nlohmann::json{{"date", "day"}, {"cases", "total"}});
    const char* text =
        "day,codice_provincia,denominazione_provincia,lat,long,total\n"
        "2020-03-01,15,Milano,45.4,9.1,40\n";
    const auto ds = parse_dataset(text, Level::Province, s);
    REQUIRE(ds.rows.at(0).count(ResponseKind::CumulativeCases) == 40);
    REQUIRE_THROWS_AS(s.apply_overrides(nlohmann::json{{"colour", "x"}}), MalformedHeader);
}

TEST_CASE("Bad headers and empty files are rejected", "[ingestion]") {
    REQUIRE_THROWS_AS(parse_dataset("data,lat,long\n2020-03-01,1,2\n", Level::Province,
                                    Schema::defaults(Level::Province)),
                      MalformedHeader);
    REQUIRE_THROWS_AS(parse_dataset("", Level::Province, Schema::defaults(Level::Province)), EmptyFile);

    const auto empty = std::filesystem::temp_directory_path() / "epicurve_empty.csv";
    std::ofstream(empty) << "\n";
    REQUIRE_THROWS_AS(read_dataset(empty, Level::Province, Schema::defaults(Level::Province)), EmptyFile);
    std::filesystem::remove(empty);
}

TEST_CASE("Unparseable dates skip the row with a warning", "[ingestion]") {
    const char* text =
        "data,codice_provincia,denominazione_provincia,lat,long,totale_casi\n"
        "yesterday,15,Milano,45.4,9.1,40\n"
        "2020-03-02,15,Milano,45.4,9.1,41\n";
    const auto ds = parse_dataset(text, Level::Province, Schema::defaults(Level::Province));
    REQUIRE(ds.rows.size() == 1);
    REQUIRE(ds.warnings.size() == 1);
}

TEST_CASE("Population tables", "[ingestion]") {
    const auto one = parse_population("codice,popolazione\n15,3250315\n");
    REQUIRE(one.size() == 1);
    REQUIRE(one.at("15") == 3250315);
    REQUIRE(parse_population("15,3250315\n16,1114590\n").size() == 2);
    REQUIRE_THROWS_AS(parse_population("15,10\n15,20\n"), DuplicateCode);
    REQUIRE_THROWS_AS(parse_population("15,0\n"), InvalidPopulation);
    REQUIRE_THROWS_AS(parse_population("codice,popolazione\n15,abc\n"), InvalidPopulation);
    REQUIRE_THROWS_AS(parse_population(""), EmptyFile);
}

TEST_CASE("Series start at the first day reaching the threshold", "[ingestion]") {
    const std::vector<RawRow> rows{row("2020-03-01", "A", 3), row("2020-03-02", "A", 7),
                                   row("2020-03-03", "A", 12), row("2020-03-04", "A", 20)};
    const auto built = build_series(rows, {{"A", 1000}}, ResponseKind::CumulativeCases, 10);
    REQUIRE(built.series.size() == 1);
    const auto& s = built.series[0];
    REQUIRE(s.counts() == std::vector<std::int64_t>{12, 20});
    REQUIRE(format_date(s.t0_date()) == "2020-03-03");
    REQUIRE_FALSE(s.sub_threshold());

    const auto low = build_series(rows, {{"A", 1000}}, ResponseKind::CumulativeCases, 50);
    REQUIRE(low.series[0].size() == 4);
    REQUIRE(low.series[0].sub_threshold());
    REQUIRE(low.warnings.size() == 1);
}

TEST_CASE("Join and alignment failures", "[ingestion]") {
    const std::vector<RawRow> rows{row("2020-03-01", "A", 10), row("2020-03-02", "A", 12),
                                   row("2020-03-01", "B", 10), row("2020-03-02", "B", 11)};
    const auto built = build_series(rows, {{"A", 1000}}, ResponseKind::CumulativeCases, 10);
    REQUIRE(built.series.size() == 1);
    REQUIRE(built.warnings.size() == 1);
    REQUIRE(built.warnings[0].find("'B'") != std::string::npos);

    REQUIRE_THROWS_AS(build_series(rows, {{"Z", 1000}}, ResponseKind::CumulativeCases, 10), NoUnits);

    const std::vector<RawRow> gap{row("2020-03-01", "A", 10), row("2020-03-03", "A", 12)};
    REQUIRE_THROWS_WITH(build_series(gap, {{"A", 1000}}, ResponseKind::CumulativeCases, 10),
                        Catch::Matchers::ContainsSubstring("2020-03-02"));

    const std::vector<RawRow> missing{row("2020-03-01", "A", 10), row("2020-03-02", "A", std::nullopt),
                                      row("2020-03-01", "B", 10), row("2020-03-02", "B", 11)};
    const auto partial = build_series(missing, {{"A", 1000}, {"B", 1000}}, ResponseKind::CumulativeCases, 10);
    REQUIRE(partial.series.size() == 1);
    REQUIRE(partial.series[0].unit_id() == "B");
}

TEST_CASE("Fixture files round-trip through the loader", "[ingestion]") {
    const auto ds = read_dataset(kFixtures / "province_6.csv", Level::Province, Schema::defaults(Level::Province));
    const auto pop = load_population(kFixtures / "population_province.csv");
    const auto built = build_series(ds.rows, pop, ResponseKind::CumulativeCases, 10);
    REQUIRE(built.series.size() == 6);

    // Reassemble the CSV rows of every unit and compare with the loaded series.
    for (const auto& s : built.series) {
        std::vector<std::int64_t> from_rows;
        for (const auto& r : ds.rows)
            if (r.unit_code == s.unit_id() &&
                std::chrono::sys_days{r.date} >= std::chrono::sys_days{s.t0_date()})
                from_rows.push_back(*r.count(ResponseKind::CumulativeCases));
        REQUIRE(from_rows == s.counts());
        REQUIRE(s.population() == pop.at(s.unit_id()));
    }

    const auto regions = read_dataset(kFixtures / "region_3.csv", Level::Region, Schema::defaults(Level::Region));
    const auto rpop = load_population(kFixtures / "population_region.csv", Level::Region);
    for (auto kind : responses_for(Level::Region)) {
        const auto built_r = build_series(regions.rows, rpop, kind, 10);
        REQUIRE(built_r.series.size() == 3);
        REQUIRE(built_r.series[0].response_kind() == kind);
    }
}
