#pragma once

// Reading the upstream daily CSVs and the population table, and turning the
// joined rows into one aligned CountSeries per unit.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "epicurve/csv.hpp"
#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"

namespace epicurve {

enum class Level { Province, Region };

constexpr std::string_view to_string(Level level) {
    return level == Level::Province ? "province" : "region";
}

inline constexpr std::array<ResponseKind, 4> kAllResponses{
    ResponseKind::CumulativeCases, ResponseKind::CumulativeDeaths, ResponseKind::CurrentICU,
    ResponseKind::CurrentHospitalized};

// Responses published at each level: provinces only carry cumulative cases.
inline std::vector<ResponseKind> responses_for(Level level) {
    if (level == Level::Province) return {ResponseKind::CumulativeCases};
    return {kAllResponses.begin(), kAllResponses.end()};
}

/// Header names for each semantic column.
struct Schema {
    std::string date;
    std::string unit_code;
    std::string unit_name;
    std::string latitude;
    std::string longitude;
    std::map<ResponseKind, std::string> responses;

    // Defaults follow the civil-protection repository's published headers.
    static Schema defaults(Level level) {
        Schema s;
        s.date = "data";
        s.latitude = "lat";
        s.longitude = "long";
        if (level == Level::Province) {
            s.unit_code = "codice_provincia";
            s.unit_name = "denominazione_provincia";
            s.responses[ResponseKind::CumulativeCases] = "totale_casi";
        } else {
            s.unit_code = "codice_regione";
            s.unit_name = "denominazione_regione";
            s.responses[ResponseKind::CumulativeCases] = "totale_casi";
            s.responses[ResponseKind::CumulativeDeaths] = "deceduti";
            s.responses[ResponseKind::CurrentICU] = "terapia_intensiva";
            s.responses[ResponseKind::CurrentHospitalized] = "ricoverati_con_sintomi";
        }
        return s;
    }

    // Applies overrides from a JSON object {"semantic field": "header name"}.
    void apply_overrides(const nlohmann::json& overrides) {
        if (!overrides.is_object()) throw MalformedHeader("schema file must hold a JSON object");
        for (const auto& [key, value] : overrides.items()) {
            if (!value.is_string())
                throw MalformedHeader(fmt::format("schema field '{}' must map to a string", key));
            const auto name = value.get<std::string>();
            if (key == "date") date = name;
            else if (key == "unit_code") unit_code = name;
            else if (key == "unit_name") unit_name = name;
            else if (key == "latitude") latitude = name;
            else if (key == "longitude") longitude = name;
            else {
                bool matched = false;
                for (auto kind : kAllResponses)
                    if (key == to_string(kind)) {
                        responses[kind] = name;
                        matched = true;
                    }
                if (!matched) throw MalformedHeader(fmt::format("unknown schema field '{}'", key));
            }
        }
    }

    static Schema from_file(const std::filesystem::path& path, Level level) {
        std::ifstream in(path);
        if (!in) throw SourceUnreachable(fmt::format("cannot open schema file {}", path.string()));
        Schema s = defaults(level);
        try {
            s.apply_overrides(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedHeader(fmt::format("schema file {}: {}", path.string(), e.what()));
        }
        return s;
    }
};

struct RawRow {
    Date date;
    std::string unit_code;
    std::string unit_name;
    std::optional<double> latitude;
    std::optional<double> longitude;
    // Indexed by ResponseKind; empty when absent or unparseable.
    std::array<std::optional<std::int64_t>, 4> counts;

    std::optional<std::int64_t> count(ResponseKind kind) const {
        return counts[static_cast<std::size_t>(kind)];
    }
};

struct Dataset {
    std::vector<RawRow> rows;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<std::int64_t> parse_count(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{}) return std::nullopt;
    // Accept integral values written with a zero fraction ("42.0").
    if (ptr != s.data() + s.size()) {
        std::string_view rest(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr));
        if (rest.front() != '.' || rest.find_first_not_of('0', 1) != std::string_view::npos)
            return std::nullopt;
    }
    if (v < 0) return std::nullopt;
    return v;
}

inline std::optional<double> parse_real(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const std::string str(s);
        const double v = std::stod(str, &used);
        if (used != str.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SourceUnreachable(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Parses dataset CSV text. Columns are looked up by header name.
inline Dataset parse_dataset(std::string_view text, Level level, const Schema& schema) {
    const auto table = csv::parse(text);
    if (table.empty()) throw EmptyFile("dataset is empty");

    const auto& header = table.front();
    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (csv::trim(header[i]) == name) return i;
        throw MalformedHeader(fmt::format("expected column '{}' not found in header", name));
    };
    const std::size_t c_date = column(schema.date);
    const std::size_t c_code = column(schema.unit_code);
    const std::size_t c_name = column(schema.unit_name);
    const std::size_t c_lat = column(schema.latitude);
    const std::size_t c_lon = column(schema.longitude);
    std::array<std::optional<std::size_t>, 4> c_resp;
    for (auto kind : responses_for(level)) {
        auto it = schema.responses.find(kind);
        if (it == schema.responses.end())
            throw MalformedHeader(fmt::format("schema has no column for response '{}'", to_string(kind)));
        c_resp[static_cast<std::size_t>(kind)] = column(it->second);
    }

    Dataset ds;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& fields = table[r];
        auto field = [&](std::size_t c) -> std::string_view {
            return c < fields.size() ? csv::trim(fields[c]) : std::string_view{};
        };
        const auto date = parse_date(field(c_date));
        if (!date) {
            ds.warnings.push_back(fmt::format("line {}: unparseable date '{}', row skipped", r + 1, field(c_date)));
            continue;
        }
        RawRow row;
        row.date = *date;
        row.unit_code = std::string(field(c_code));
        row.unit_name = std::string(field(c_name));
        row.latitude = detail::parse_real(field(c_lat));
        row.longitude = detail::parse_real(field(c_lon));
        for (std::size_t k = 0; k < c_resp.size(); ++k) {
            if (!c_resp[k]) continue;
            row.counts[k] = detail::parse_count(field(*c_resp[k]));
            if (!row.counts[k])
                ds.warnings.push_back(fmt::format("line {}: unit '{}' {}: count '{}' missing or invalid",
                                                  r + 1, row.unit_code, to_string(kAllResponses[k]),
                                                  field(*c_resp[k])));
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

inline Dataset read_dataset(const std::filesystem::path& path, Level level, const Schema& schema) {
    const auto text = detail::read_file(path);
    if (csv::trim(text).empty()) throw EmptyFile(fmt::format("{} is empty", path.string()));
    return parse_dataset(text, level, schema);
}

/// Two-column (code, population) table; a non-numeric first row is a header.
inline std::map<std::string, std::int64_t> parse_population(std::string_view text) {
    const auto table = csv::parse(text);
    if (table.empty()) throw EmptyFile("population file is empty");
    std::map<std::string, std::int64_t> out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& fields = table[r];
        if (fields.size() < 2)
            throw InvalidPopulation(fmt::format("population line {}: expected two columns", r + 1));
        const std::string code(csv::trim(fields[0]));
        const auto pop_text = csv::trim(fields[1]);
        std::int64_t pop = 0;
        auto [ptr, ec] = std::from_chars(pop_text.data(), pop_text.data() + pop_text.size(), pop);
        const bool numeric = ec == std::errc{} && ptr == pop_text.data() + pop_text.size();
        if (!numeric) {
            if (r == 0) continue;
            throw InvalidPopulation(fmt::format("population line {}: '{}' is not an integer", r + 1, pop_text));
        }
        if (pop < 1)
            throw InvalidPopulation(fmt::format("population for '{}' must be >= 1 (got {})", code, pop));
        if (!out.emplace(code, pop).second)
            throw DuplicateCode(fmt::format("population file lists '{}' twice", code));
    }
    return out;
}

inline std::map<std::string, std::int64_t> load_population(const std::filesystem::path& path,
                                                           Level = Level::Province) {
    return parse_population(detail::read_file(path));
}

struct SeriesBuildResult {
    std::vector<CountSeries> series;
    std::vector<std::string> warnings;
};

/// Joins rows with populations and aligns each unit's series at the first
/// day its count reached `start_threshold`. Units are ordered by code.
inline SeriesBuildResult build_series(const std::vector<RawRow>& rows,
                                      const std::map<std::string, std::int64_t>& populations,
                                      ResponseKind kind, int start_threshold) {
    if (rows.empty()) throw NoUnits("no data rows");

    std::map<std::string, std::vector<const RawRow*>> by_unit;
    Date last_date = rows.front().date;
    for (const auto& row : rows) {
        by_unit[row.unit_code].push_back(&row);
        if (std::chrono::sys_days{row.date} > std::chrono::sys_days{last_date}) last_date = row.date;
    }

    SeriesBuildResult out;
    for (auto& [code, unit_rows] : by_unit) {
        std::sort(unit_rows.begin(), unit_rows.end(), [](const RawRow* a, const RawRow* b) {
            return std::chrono::sys_days{a->date} < std::chrono::sys_days{b->date};
        });
        for (std::size_t i = 1; i < unit_rows.size(); ++i) {
            const long step = days_between(unit_rows[i - 1]->date, unit_rows[i]->date);
            if (step == 0)
                throw DateGap(fmt::format("unit '{}': date {} appears twice", code,
                                          format_date(unit_rows[i]->date)));
            if (step != 1)
                throw DateGap(fmt::format("unit '{}': no data for {}", code,
                                          format_date(add_days(unit_rows[i - 1]->date, 1))));
        }

        const auto pop = populations.find(code);
        if (pop == populations.end()) {
            out.warnings.push_back(fmt::format("unit '{}' ({}) has no population entry, excluded", code,
                                               unit_rows.front()->unit_name));
            continue;
        }
        if (unit_rows.back()->date != last_date)
            out.warnings.push_back(fmt::format("unit '{}': data end on {}, before the latest date {}", code,
                                               format_date(unit_rows.back()->date), format_date(last_date)));

        std::size_t start = unit_rows.size();
        for (std::size_t i = 0; i < unit_rows.size(); ++i) {
            const auto c = unit_rows[i]->count(kind);
            if (c && *c >= start_threshold) {
                start = i;
                break;
            }
        }
        const bool sub_threshold = start == unit_rows.size();
        if (sub_threshold) {
            start = 0;
            out.warnings.push_back(fmt::format("unit '{}': {} never reached {}, series kept whole", code,
                                               to_string(kind), start_threshold));
        }

        std::vector<std::pair<Date, std::int64_t>> observations;
        std::optional<Date> missing_on;
        for (std::size_t i = start; i < unit_rows.size(); ++i) {
            const auto c = unit_rows[i]->count(kind);
            if (!c) {
                missing_on = unit_rows[i]->date;
                break;
            }
            observations.emplace_back(unit_rows[i]->date, *c);
        }
        if (missing_on) {
            out.warnings.push_back(fmt::format("unit '{}': {} missing on {}, excluded", code,
                                               to_string(kind), format_date(*missing_on)));
            continue;
        }

        CountSeries::Location loc;
        for (const auto* r : unit_rows)
            if (r->latitude && r->longitude) {
                loc = {*r->latitude, *r->longitude};
                break;
            }
        out.series.push_back(CountSeries::from_dated(code, unit_rows.front()->unit_name, loc, pop->second,
                                                     kind, observations, sub_threshold));
    }
    if (out.series.empty()) throw NoUnits("no unit survived the population join");
    return out;
}

}  // namespace epicurve
