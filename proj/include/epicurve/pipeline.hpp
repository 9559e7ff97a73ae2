#pragma once

// End-to-end batch run: ingestion -> per-unit selection (worker pool) ->
// plots, map and reports, written atomically into one output directory.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "epicurve/ingestion.hpp"
#include "epicurve/reporting.hpp"
#include "epicurve/selection.hpp"

namespace epicurve {

struct PipelineOptions {
    std::vector<RawRow> rows;  // already loaded
    std::map<std::string, std::int64_t> populations;
    ResponseKind response = ResponseKind::CumulativeCases;
    SelectionConfig selection{};
    Outline outline;
    std::filesystem::path out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;
};

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Selection and report for every series, in input order. The optimizer
/// seed of each unit depends only on the base seed and the unit id.
inline std::vector<UnitReport> analyze_units(const std::vector<CountSeries>& series,
                                             const SelectionConfig& config, std::uint64_t seed, int jobs) {
    std::vector<std::optional<UnitReport>> slots(series.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < series.size(); i = next++) {
            try {
                SelectionConfig unit_config = config;
                unit_config.optimizer.seed = seed ^ stable_hash(series[i].unit_id());
                auto outcome = select(series[i], unit_config);
                slots[i] = build_unit_report(series[i], outcome);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1, jobs));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(n_workers, series.size()); ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<UnitReport> out;
    out.reserve(series.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline std::string summary_line(const UnitReport& r) {
    return fmt::format("{} {}: {}, last slope {:.6g}/day{}, prevalence {:.6g}, class {}", r.series.unit_id(),
                       r.series.unit_name(), verdict_label(r.outcome.verdict), r.last_slope,
                       r.slope_observed ? " (observed)" : "", r.prevalence, r.color_class);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SourceUnreachable(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw SourceUnreachable(fmt::format("write failed for {}", path.string()));
}

// Unit ids become file names: keep [A-Za-z0-9._-], replace the rest.
inline std::string file_stem(std::string_view unit_id) {
    std::string out;
    for (char c : unit_id) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '-' || c == '_' || c == '.';
        out += keep ? c : '_';
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

}  // namespace detail

// Writes all outputs into a sibling temporary directory and renames it
// into place, so `dir` is either complete or untouched.
inline void write_outputs(const std::filesystem::path& dir, std::span<const UnitReport> reports,
                          const Outline& outline) {
    namespace fs = std::filesystem;
    fs::path target = fs::absolute(dir).lexically_normal();
    if (target.filename().empty()) target = target.parent_path();
    const fs::path parent = target.parent_path();
    fs::create_directories(parent);
    const auto tag = stable_hash(target.string()) ^ static_cast<std::uint64_t>(
                                                        std::chrono::steady_clock::now().time_since_epoch().count());
    const fs::path staging = parent / fmt::format(".{}.tmp-{:x}", target.filename().string(), tag);
    try {
        fs::create_directories(staging / "plots");
        for (const auto& r : reports)
            detail::write_file(staging / "plots" / (detail::file_stem(r.series.unit_id()) + ".svg"), render_unit_plot(r));
        detail::write_file(staging / "map.svg", render_country_map(reports, outline));
        const auto text = write_text_report(reports);
        detail::write_file(staging / "report.txt", text.text);
        detail::write_file(staging / "report.json", text.json);

        if (fs::exists(target)) {
            const fs::path old = parent / fmt::format(".{}.old-{:x}", target.filename().string(), tag);
            fs::rename(target, old);
            fs::rename(staging, target);
            fs::remove_all(old);
        } else {
            fs::rename(staging, target);
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

struct PipelineResult {
    std::vector<UnitReport> reports;
    std::vector<std::string> warnings;
};

inline PipelineResult run_pipeline(const PipelineOptions& options) {
    options.selection.validate();
    auto built = build_series(options.rows, options.populations, options.response,
                              options.selection.start_threshold);
    PipelineResult result;
    result.warnings = std::move(built.warnings);
    result.reports = analyze_units(built.series, options.selection, options.seed, options.jobs);
    write_outputs(options.out_dir, result.reports, options.outline);
    return result;
}

}  // namespace epicurve
