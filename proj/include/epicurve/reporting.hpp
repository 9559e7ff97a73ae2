#pragma once

// Per-unit reports, fitted-curve plots, the proportional-symbol country map
// and the text/JSON summary tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "epicurve/calculus.hpp"
#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"
#include "epicurve/logistic_model.hpp"
#include "epicurve/poisson_glm.hpp"
#include "epicurve/svg.hpp"

namespace epicurve {

// ---------------------------------------------------------------------------
// Growth classes
// ---------------------------------------------------------------------------

// Upper edges (new cases/day per 100,000) of classes 0..3; class 4 is open.
inline constexpr std::array<double, 4> kSlopeBinEdges{0.0, 1.0, 5.0, 15.0};
inline constexpr int kColorClassCount = 5;
inline constexpr int kNeutralClass = 5;
// Five samples of the viridis ramp, then the neutral grey.
inline constexpr std::array<std::string_view, 6> kClassColors{
    "#440154", "#3b528b", "#21918c", "#5ec962", "#fde725", "#9e9e9e"};
inline constexpr std::array<std::string_view, 6> kClassLabels{
    "<= 0", "0 - 1", "1 - 5", "5 - 15", "> 15", "no model"};

inline int slope_class(double slope_per_100k) {
    for (std::size_t i = 0; i < kSlopeBinEdges.size(); ++i)
        if (slope_per_100k <= kSlopeBinEdges[i]) return static_cast<int>(i);
    return kColorClassCount - 1;
}

// Six significant digits: the precision of every serialized report numeral.
inline double round6(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt::format("{:.6g}", v).c_str(), nullptr);
}

// ---------------------------------------------------------------------------
// UnitReport
// ---------------------------------------------------------------------------

inline UnitReport build_unit_report(const CountSeries& series, const SelectionOutcome& outcome) {
    UnitReport r{series, outcome, {}, 0.0, false, 0.0, kNeutralClass};
    const double n = static_cast<double>(series.population());
    const double last_t = static_cast<double>(series.last_t());
    const auto& y = series.counts();

    if (const auto* poly = std::get_if<PolyFit>(&outcome.verdict)) {
        for (std::size_t t = 0; t < series.size(); ++t)
            r.fitted.emplace_back(static_cast<double>(t), predict(*poly, series, static_cast<double>(t)));
        r.last_slope = poly_derivatives(*poly, series, last_t).slope;
        r.prevalence = predict(*poly, series, last_t) / n;
    } else if (const auto* logistic = std::get_if<LogisticFit>(&outcome.verdict)) {
        for (std::size_t t = 0; t < series.size(); ++t)
            r.fitted.emplace_back(static_cast<double>(t), n * logistic->hazard(static_cast<double>(t)));
        r.last_slope = n * logistic_derivatives(*logistic, last_t).slope;
        r.prevalence = logistic->hazard(last_t);
    } else {
        const std::size_t last = series.last_t();
        const double y_last = static_cast<double>(y[last]);
        const double y_prev = last > 0 ? static_cast<double>(y[last - 1]) : y_last;
        r.prevalence = 0.5 * (y_last + y_prev) / n;
        r.last_slope = y_last - y_prev;
        r.slope_observed = true;
    }
    r.prevalence = std::clamp(r.prevalence, 0.0, 1.0);
    if (!outcome.is_terminal()) r.color_class = slope_class(r.last_slope / n * 1e5);
    return r;
}

inline std::string verdict_kind(const Verdict& v) {
    constexpr std::array<std::string_view, 5> names{"poly", "logistic", "low_prevalence",
                                                    "no_convergence", "no_adequate_model"};
    return std::string(names[v.index()]);
}

// ---------------------------------------------------------------------------
// Per-unit plot
// ---------------------------------------------------------------------------

struct PlotLayout {
    double width = 640;
    double height = 420;
    double left = 70;
    double right = 20;
    double top = 60;
    double bottom = 50;
};

namespace detail {

// A "nice" tick step covering `range` with roughly `target` intervals.
inline double tick_step(double range, int target) {
    if (!(range > 0)) return 1.0;
    const double raw = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace detail

inline std::string render_unit_plot(const UnitReport& report, const PlotLayout& layout = {}) {
    const auto& s = report.series;
    const auto& y = s.counts();
    double y_max = static_cast<double>(s.max_count());
    for (const auto& [t, v] : report.fitted) y_max = std::max(y_max, v);
    y_max = y_max > 0 ? 1.05 * y_max : 1.0;
    const double t_max = std::max(1.0, static_cast<double>(s.last_t()));

    const double pw = layout.width - layout.left - layout.right;
    const double ph = layout.height - layout.top - layout.bottom;
    auto px = [&](double t) { return layout.left + pw * t / t_max; };
    auto py = [&](double v) { return layout.top + ph * (1.0 - v / y_max); };

    svg::Document doc(layout.width, layout.height);
    doc.element("rect", {{"x", "0"}, {"y", "0"}, {"width", svg::num(layout.width)},
                         {"height", svg::num(layout.height)}, {"fill", "white"}});
    doc.text(layout.left, 24,
             fmt::format("{} ({}) - last data {}", s.unit_name(), s.unit_id(), format_date(s.last_date())),
             {{"font-size", "16"}, {"font-weight", "bold"}});

    // Axes and ticks.
    const double x0 = layout.left, y0 = layout.top + ph;
    doc.element("line", {{"x1", svg::num(x0)}, {"y1", svg::num(y0)}, {"x2", svg::num(x0 + pw)},
                         {"y2", svg::num(y0)}, {"stroke", "black"}});
    doc.element("line", {{"x1", svg::num(x0)}, {"y1", svg::num(layout.top)}, {"x2", svg::num(x0)},
                         {"y2", svg::num(y0)}, {"stroke", "black"}});
    const double tx = detail::tick_step(t_max, 6);
    for (double t = 0; t <= t_max + 1e-9; t += tx) {
        doc.element("line", {{"x1", svg::num(px(t))}, {"y1", svg::num(y0)}, {"x2", svg::num(px(t))},
                             {"y2", svg::num(y0 + 5)}, {"stroke", "black"}});
        doc.text(px(t), y0 + 18, fmt::format("{:g}", t), {{"font-size", "11"}, {"text-anchor", "middle"}});
    }
    const double ty = detail::tick_step(y_max, 5);
    for (double v = 0; v <= y_max + 1e-9; v += ty) {
        doc.element("line", {{"x1", svg::num(x0 - 5)}, {"y1", svg::num(py(v))}, {"x2", svg::num(x0)},
                             {"y2", svg::num(py(v))}, {"stroke", "black"}});
        doc.text(x0 - 8, py(v) + 4, fmt::format("{:g}", v), {{"font-size", "11"}, {"text-anchor", "end"}});
    }
    doc.text(x0 + pw / 2, layout.height - 10, fmt::format("days since {}", format_date(s.t0_date())),
             {{"font-size", "12"}, {"text-anchor", "middle"}});

    // Observed counts.
    for (std::size_t t = 0; t < y.size(); ++t)
        doc.element("circle", {{"class", "observed"}, {"cx", svg::num(px(static_cast<double>(t)))},
                               {"cy", svg::num(py(static_cast<double>(y[t])))}, {"r", "2.5"},
                               {"fill", "#333333"}});

    // Fitted curve.
    if (!report.fitted.empty()) {
        std::string points;
        for (const auto& [t, v] : report.fitted)
            points += fmt::format("{}{},{}", points.empty() ? "" : " ", svg::num(px(t)), svg::num(py(v)));
        doc.element("polyline", {{"class", "fitted"}, {"points", points}, {"fill", "none"},
                                 {"stroke", "#d62728"}, {"stroke-width", "2"}});
    }

    // Annotations.
    const auto& verdict = report.outcome.verdict;
    doc.text(layout.left + 10, layout.top - 16,
             report.outcome.is_terminal() ? verdict_label(verdict)
                                          : fmt::format("model: {}", verdict_label(verdict)),
             {{"class", "annotation"}, {"font-size", "13"}});
    doc.text(layout.left + 10, layout.top - 2,
             fmt::format("{} at last day: {:.6g} per day", report.slope_observed ? "observed change" : "estimated slope",
                         report.last_slope),
             {{"class", "slope"}, {"font-size", "12"}});
    return doc.str();
}

// ---------------------------------------------------------------------------
// Country map
// ---------------------------------------------------------------------------

/// Country outline as a set of (longitude, latitude) rings.
struct Outline {
    std::vector<std::vector<std::pair<double, double>>> rings;

    struct Box {
        double min_lon, min_lat, max_lon, max_lat;
    };

    Box bounds() const {
        Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& ring : rings)
            for (const auto& [lon, lat] : ring) {
                b.min_lon = std::min(b.min_lon, lon);
                b.max_lon = std::max(b.max_lon, lon);
                b.min_lat = std::min(b.min_lat, lat);
                b.max_lat = std::max(b.max_lat, lat);
            }
        return b;
    }
};

/// Reads Polygon / MultiPolygon geometries from GeoJSON text (a bare
/// geometry, a Feature or a FeatureCollection).
inline Outline parse_outline(std::string_view geojson) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(geojson);
    } catch (const nlohmann::json::exception& e) {
        throw MissingOutline(fmt::format("outline is not valid GeoJSON: {}", e.what()));
    }
    Outline out;
    auto add_polygon = [&](const nlohmann::json& poly) {
        for (const auto& ring : poly) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : ring) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            if (pts.size() >= 3) out.rings.push_back(std::move(pts));
        }
    };
    auto visit = [&](auto&& self, const nlohmann::json& node) -> void {
        const auto type = node.value("type", std::string{});
        if (type == "FeatureCollection") {
            for (const auto& f : node.at("features")) self(self, f);
        } else if (type == "Feature") {
            self(self, node.at("geometry"));
        } else if (type == "Polygon") {
            add_polygon(node.at("coordinates"));
        } else if (type == "MultiPolygon") {
            for (const auto& poly : node.at("coordinates")) add_polygon(poly);
        }
    };
    try {
        visit(visit, doc);
    } catch (const nlohmann::json::exception& e) {
        throw MissingOutline(fmt::format("malformed outline geometry: {}", e.what()));
    }
    if (out.rings.empty()) throw MissingOutline("outline contains no polygon");
    return out;
}

inline Outline load_outline(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingOutline(fmt::format("cannot open outline {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_outline(ss.str());
}

struct MapLayout {
    double map_width = 700;     // pixels spanned by the outline's longitude range
    double margin = 40;
    double legend_width = 200;
    double max_radius = 30;     // radius of the most prevalent unit
};

// Circle radius is c * sqrt(prevalence), c shared by all units, so area is
// proportional to prevalence.
inline double radius_scale(std::span<const UnitReport> reports, double max_radius) {
    double max_prev = 0.0;
    for (const auto& r : reports) max_prev = std::max(max_prev, r.prevalence);
    return max_prev > 0 ? max_radius / std::sqrt(max_prev) : 0.0;
}

inline std::string render_country_map(std::span<const UnitReport> reports, const Outline& outline,
                                      const MapLayout& layout = {}) {
    if (outline.rings.empty()) throw MissingOutline("outline contains no polygon");
    const auto box = outline.bounds();
    // Plate carree: longitude and latitude share one pixels-per-degree scale.
    const double scale = layout.map_width / (box.max_lon - box.min_lon);
    const double map_height = (box.max_lat - box.min_lat) * scale;
    auto px = [&](double lon) { return layout.margin + (lon - box.min_lon) * scale; };
    auto py = [&](double lat) { return layout.margin + (box.max_lat - lat) * scale; };

    const double width = layout.map_width + 2 * layout.margin + layout.legend_width;
    const double height = std::max(map_height + 2 * layout.margin, 420.0);
    svg::Document doc(width, height);
    doc.element("rect", {{"x", "0"}, {"y", "0"}, {"width", svg::num(width)}, {"height", svg::num(height)},
                         {"fill", "white"}});

    for (const auto& ring : outline.rings) {
        std::string d;
        for (std::size_t i = 0; i < ring.size(); ++i)
            d += fmt::format("{}{},{}", i == 0 ? "M" : " L", svg::num(px(ring[i].first)), svg::num(py(ring[i].second)));
        doc.element("path", {{"class", "outline"}, {"d", d + " Z"}, {"fill", "#f2f2f2"}, {"stroke", "#888888"},
                             {"stroke-width", "1"}});
    }

    const double c = radius_scale(reports, layout.max_radius);
    for (const auto& r : reports) {
        const double radius = c * std::sqrt(r.prevalence);
        doc.element("circle",
                    {{"class", "unit"},
                     {"data-unit", r.series.unit_id()},
                     {"data-prevalence", fmt::format("{}", r.prevalence)},
                     {"data-class", fmt::format("{}", r.color_class)},
                     {"cx", svg::num(px(r.series.longitude()))},
                     {"cy", svg::num(py(r.series.latitude()))},
                     {"r", fmt::format("{}", radius)},
                     {"fill", "none"},
                     {"stroke", std::string(kClassColors[static_cast<std::size_t>(r.color_class)])},
                     {"stroke-width", "2"}});
    }

    // Legend: growth classes, then a size key.
    const double lx = layout.map_width + 2 * layout.margin;
    double ly = layout.margin;
    doc.text(lx, ly, "New cases/day per 100,000", {{"font-size", "13"}, {"font-weight", "bold"}});
    for (std::size_t k = 0; k < kClassColors.size(); ++k) {
        ly += 22;
        doc.element("circle", {{"class", "legend-color"}, {"cx", svg::num(lx + 8)}, {"cy", svg::num(ly - 4)},
                               {"r", "7"}, {"fill", "none"}, {"stroke", std::string(kClassColors[k])},
                               {"stroke-width", "2"}});
        doc.text(lx + 22, ly, kClassLabels[k], {{"font-size", "12"}});
    }
    ly += 40;
    doc.text(lx, ly, "Prevalence (circle area)", {{"font-size", "13"}, {"font-weight", "bold"}});
    double max_prev = 0.0;
    for (const auto& r : reports) max_prev = std::max(max_prev, r.prevalence);
    if (max_prev > 0) {
        ly += 10;
        for (double frac : {1.0, 0.25}) {
            const double p = max_prev * frac;
            const double radius = c * std::sqrt(p);
            ly += radius + 4;
            doc.element("circle", {{"class", "legend-size"}, {"cx", svg::num(lx + layout.max_radius)},
                                   {"cy", svg::num(ly)}, {"r", svg::num(radius)}, {"fill", "none"},
                                   {"stroke", "#555555"}});
            doc.text(lx + 2 * layout.max_radius + 10, ly + 4, fmt::format("{:.3g}%", 100 * p), {{"font-size", "12"}});
            ly += radius + 4;
        }
    }
    return doc.str();
}

// ---------------------------------------------------------------------------
// Text and JSON reports
// ---------------------------------------------------------------------------

inline double observed_rate(const CountSeries& s) {
    return static_cast<double>(s.counts().back()) / static_cast<double>(s.population());
}

inline nlohmann::json report_to_json(const UnitReport& r) {
    using nlohmann::json;
    const auto& s = r.series;
    json u;
    u["unit_id"] = s.unit_id();
    u["unit_name"] = s.unit_name();
    u["latitude"] = round6(s.latitude());
    u["longitude"] = round6(s.longitude());
    u["population"] = s.population();
    u["response"] = std::string(to_string(s.response_kind()));
    u["t0_date"] = format_date(s.t0_date());
    u["last_date"] = format_date(s.last_date());
    u["observations"] = s.size();
    u["sub_threshold"] = s.sub_threshold();
    u["observed_rate"] = round6(observed_rate(s));
    json dec = json::array();
    for (auto t : s.decreases()) dec.push_back(format_date(add_days(s.t0_date(), static_cast<long>(t))));
    u["decreasing_days"] = dec;

    u["verdict"] = verdict_label(r.outcome.verdict);
    u["verdict_kind"] = verdict_kind(r.outcome.verdict);
    u["last_slope"] = round6(r.last_slope);
    u["slope_observed"] = r.slope_observed;
    u["prevalence"] = round6(r.prevalence);
    u["color_class"] = r.color_class;

    json fits = json::array();
    for (const auto& f : r.outcome.poly_fits) {
        json jf{{"degree", f.degree}, {"converged", f.converged}, {"iterations", f.iterations}};
        if (f.converged) {
            json coef = json::array(), se = json::array();
            for (Eigen::Index k = 0; k < f.beta.size(); ++k) {
                coef.push_back(round6(f.beta[k]));
                se.push_back(round6(std::sqrt(f.covariance(k, k))));
            }
            jf["coefficients"] = coef;
            jf["standard_errors"] = se;
            jf["log_likelihood"] = round6(f.log_likelihood);
        }
        fits.push_back(jf);
    }
    u["fits"] = fits;

    json tests = json::array();
    for (const auto& t : r.outcome.trail)
        tests.push_back({{"name", t.name}, {"statistic", round6(t.statistic)},
                         {"df_or_se", round6(t.df_or_se)}, {"p_value", round6(t.p_value)}});
    u["tests"] = tests;

    if (const auto* poly = std::get_if<PolyFit>(&r.outcome.verdict); poly && poly->degree >= 2) {
        json pts = json::array();
        for (const auto& p : stationary_points(*poly))
            pts.push_back({{"t", round6(p.t)}, {"kind", std::string(to_string(p.kind))},
                           {"before_series", p.before_series}, {"degenerate", p.degenerate}});
        u["stationary_points"] = pts;
    }
    if (r.outcome.logistic_attempt) {
        const auto& l = *r.outcome.logistic_attempt;
        json jl{{"converged", l.converged}, {"iterations", l.iterations}};
        if (l.converged) {
            jl["K"] = round6(l.K());
            jl["gamma"] = round6(l.gamma);
            jl["beta0"] = round6(l.beta0);
            jl["beta1"] = round6(l.beta1);
            jl["log_likelihood"] = round6(l.log_likelihood);
            jl["flex_time"] = round6(l.flex_time);
            jl["flex_ci"] = {round6(l.flex_ci.first), round6(l.flex_ci.second)};
        }
        u["logistic"] = jl;
    }
    return u;
}

struct TextReports {
    std::string text;
    std::string json;
};

inline TextReports write_text_report(std::span<const UnitReport> reports) {
    nlohmann::json units = nlohmann::json::array();
    for (const auto& r : reports) units.push_back(report_to_json(r));
    nlohmann::json legend = nlohmann::json::array();
    for (std::size_t k = 0; k < kClassLabels.size(); ++k)
        legend.push_back({{"class", k}, {"label", std::string(kClassLabels[k])},
                          {"color", std::string(kClassColors[k])}});
    nlohmann::json doc{{"slope_units", "new cases/day per 100,000 for class assignment; last_slope in persons/day"},
                       {"classes", legend},
                       {"units", units}};

    std::string text;
    text += "Growth summary (last_slope in persons/day at the last observed day)\n\n";
    text += fmt::format("{:<10} {:<28} {:>13} {:<36} {:>13} {:>5}\n", "unit", "name", "observed_rate",
                        "verdict", "last_slope", "class");
    for (const auto& r : reports)
        text += fmt::format("{:<10} {:<28} {:>13.6g} {:<36} {:>13.6g} {:>5}\n", r.series.unit_id(),
                            r.series.unit_name(), round6(observed_rate(r.series)), verdict_label(r.outcome.verdict),
                            round6(r.last_slope), r.color_class);

    text += "\nClasses (new cases/day per 100,000): ";
    for (std::size_t k = 0; k < kClassLabels.size(); ++k)
        text += fmt::format("{}{}={}", k ? ", " : "", k, kClassLabels[k]);
    text += "\n";

    for (const auto& u : units) {
        text += fmt::format("\n== {} ({}) ==\n", u["unit_name"].get<std::string>(), u["unit_id"].get<std::string>());
        text += fmt::format("population {}, series {} .. {} ({} days), observed rate {:.6g}\n",
                            u["population"].get<std::int64_t>(), u["t0_date"].get<std::string>(),
                            u["last_date"].get<std::string>(), u["observations"].get<std::size_t>(),
                            u["observed_rate"].get<double>());
        if (u["sub_threshold"].get<bool>()) text += "series never reached the start threshold\n";
        if (!u["decreasing_days"].empty())
            text += fmt::format("cumulative count decreased on: {}\n",
                                fmt::join(u["decreasing_days"].get<std::vector<std::string>>(), ", "));
        for (const auto& f : u["fits"]) {
            if (!f["converged"].get<bool>()) {
                text += fmt::format("degree {}: did not converge\n", f["degree"].get<int>());
                continue;
            }
            std::vector<std::string> terms;
            const auto& coef = f["coefficients"];
            const auto& se = f["standard_errors"];
            for (std::size_t k = 0; k < coef.size(); ++k)
                terms.push_back(fmt::format("b{}={:.6g} (se {:.6g})", k, coef[k].get<double>(), se[k].get<double>()));
            text += fmt::format("degree {}: {}; loglik {:.6g}\n", f["degree"].get<int>(), fmt::join(terms, ", "),
                                f["log_likelihood"].get<double>());
        }
        for (const auto& t : u["tests"])
            text += fmt::format("test {}: statistic {:.6g}, df/se {:.6g}, p {:.6g}\n", t["name"].get<std::string>(),
                                t["statistic"].get<double>(), t["df_or_se"].get<double>(), t["p_value"].get<double>());
        if (u.contains("stationary_points")) {
            if (u["stationary_points"].empty()) text += "no stationary point\n";
            for (const auto& p : u["stationary_points"])
                text += fmt::format("stationary point: t={:.6g} ({}{})\n", p["t"].get<double>(),
                                    p["kind"].get<std::string>(),
                                    p["before_series"].get<bool>() ? ", before the series" : "");
        }
        if (u.contains("logistic")) {
            const auto& l = u["logistic"];
            if (l["converged"].get<bool>())
                text += fmt::format("logistic: K={:.6g}, b0={:.6g}, b1={:.6g}, flex t={:.6g}, 95% CI ({:.6g}, {:.6g})\n",
                                    l["K"].get<double>(), l["beta0"].get<double>(), l["beta1"].get<double>(),
                                    l["flex_time"].get<double>(), l["flex_ci"][0].get<double>(),
                                    l["flex_ci"][1].get<double>());
            else
                text += "logistic: did not converge\n";
        }
        text += fmt::format("verdict: {}; last_slope {:.6g}{}; prevalence {:.6g}; class {}\n",
                            u["verdict"].get<std::string>(), u["last_slope"].get<double>(),
                            u["slope_observed"].get<bool>() ? " (observed)" : "", u["prevalence"].get<double>(),
                            u["color_class"].get<int>());
    }
    return {text, doc.dump(2) + "\n"};
}

}  // namespace epicurve
