// epicurve: fit, select and report growth models for every unit of a
// daily count dataset.
//
// Exit codes: 0 success, 1 I/O or schema error, 2 invalid flags.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bundled_outline.hpp"
#include "epicurve/epicurve.hpp"
#include "epicurve/fetch.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

struct Args {
    std::string input;
    std::string population;
    std::string level = "province";
    std::string response = "cases";
    std::string out;
    std::string schema;
    std::string outline;
    int start_threshold = 10;
    double low_prevalence = 0.00005;
    double p_cutoff = 0.05;
    int flex_guard_days = 7;
    int jobs = 1;
    std::uint64_t seed = 0;
};

int run(const Args& args) {
    using namespace epicurve;
    const Level level = args.level == "region" ? Level::Region : Level::Province;
    const std::map<std::string, ResponseKind> responses{
        {"cases", ResponseKind::CumulativeCases},
        {"deaths", ResponseKind::CumulativeDeaths},
        {"icu", ResponseKind::CurrentICU},
        {"hospitalized", ResponseKind::CurrentHospitalized}};
    const ResponseKind response = responses.at(args.response);
    if (level == Level::Province && response != ResponseKind::CumulativeCases) {
        std::cerr << fmt::format("error: --response {} is only available with --level region\n", args.response);
        return kExitUsage;
    }

    SelectionConfig selection;
    selection.start_threshold = args.start_threshold;
    selection.low_prevalence_threshold = args.low_prevalence;
    selection.p_cutoff = args.p_cutoff;
    selection.flex_guard_days = args.flex_guard_days;
    try {
        selection.validate();
        if (args.jobs < 1) throw InvalidConfig("--jobs must be >= 1");
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const Schema schema = args.schema.empty() ? Schema::defaults(level) : Schema::from_file(args.schema, level);
        PipelineOptions options;
        options.outline = args.outline.empty() ? parse_outline(epicurve_tools::kBundledOutline)
                                                : load_outline(args.outline);
        options.populations = load_population(args.population, level);
        auto dataset = load_dataset(args.input, level, schema);
        for (const auto& w : dataset.warnings) std::cerr << "warning: " << w << "\n";
        options.rows = std::move(dataset.rows);
        options.response = response;
        options.selection = selection;
        options.out_dir = args.out;
        options.jobs = args.jobs;
        options.seed = args.seed;

        const auto result = run_pipeline(options);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& r : result.reports) std::cout << summary_line(r) << "\n";
        std::cout << fmt::format("{} units written to {}\n", result.reports.size(), args.out);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fit Poisson growth models to daily counts per unit and report growth diagnostics"};
    Args args;
    app.add_option("--input", args.input, "dataset CSV: local path or http(s) URL")->required();
    app.add_option("--population", args.population, "population CSV (code, population)")->required();
    app.add_option("--level", args.level, "geographic level")
        ->check(CLI::IsMember({"province", "region"}))
        ->capture_default_str();
    app.add_option("--response", args.response, "count series to analyze")
        ->check(CLI::IsMember({"cases", "deaths", "icu", "hospitalized"}))
        ->capture_default_str();
    app.add_option("--out", args.out, "output directory")->required();
    app.add_option("--start-threshold", args.start_threshold, "series start at the first day with count >= this")
        ->capture_default_str();
    app.add_option("--low-prevalence", args.low_prevalence, "skip units whose max count/population is below this")
        ->capture_default_str();
    app.add_option("--p-cutoff", args.p_cutoff, "significance level of the selection tests")->capture_default_str();
    app.add_option("--flex-guard-days", args.flex_guard_days,
                   "logistic kept only if its inflection CI ends this many days before the last day")
        ->capture_default_str();
    app.add_option("--schema", args.schema, "JSON file overriding column names");
    app.add_option("--outline", args.outline, "GeoJSON country outline (default: bundled Italy outline)");
    app.add_option("--jobs", args.jobs, "number of worker threads")->capture_default_str();
    app.add_option("--seed", args.seed, "seed for optimizer restarts")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    return run(args);
}
