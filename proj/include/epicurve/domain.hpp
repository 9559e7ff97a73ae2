#pragma once

// Core value types shared across the toolkit: count series, fitted models,
// selection outcomes and the per-unit report.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "epicurve/error.hpp"

namespace epicurve {

using Date = std::chrono::year_month_day;

inline std::string format_date(Date d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                       static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

// Accepts "YYYY-MM-DD" optionally followed by a time part ("T18:00:00" or " 18:00").
inline std::optional<Date> parse_date(std::string_view text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
              std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline Date add_days(Date d, long days) {
    return Date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

inline long days_between(Date from, Date to) {
    return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

enum class ResponseKind { CumulativeCases, CumulativeDeaths, CurrentICU, CurrentHospitalized };

constexpr bool is_cumulative(ResponseKind kind) {
    return kind == ResponseKind::CumulativeCases || kind == ResponseKind::CumulativeDeaths;
}

constexpr std::string_view to_string(ResponseKind kind) {
    switch (kind) {
        case ResponseKind::CumulativeCases: return "cases";
        case ResponseKind::CumulativeDeaths: return "deaths";
        case ResponseKind::CurrentICU: return "icu";
        case ResponseKind::CurrentHospitalized: return "hospitalized";
    }
    return "unknown";
}

/// One geographic unit's daily counts, t = 0..T, aligned to t0_date.
///
/// Immutable after construction; every invariant is checked by the
/// constructor, which throws InvalidSeries naming the unit.
class CountSeries {
public:
    struct Location {
        double latitude = 0.0;
        double longitude = 0.0;
    };

    CountSeries(std::string unit_id, std::string unit_name, Location location,
                std::int64_t population, ResponseKind kind, Date t0_date,
                std::vector<std::int64_t> counts, bool sub_threshold = false)
        : unit_id_(std::move(unit_id)),
          unit_name_(std::move(unit_name)),
          location_(location),
          population_(population),
          kind_(kind),
          t0_date_(t0_date),
          counts_(std::move(counts)),
          sub_threshold_(sub_threshold) {
        if (population_ < 1)
            throw InvalidSeries(fmt::format("unit '{}': population must be >= 1 (got {})",
                                            unit_id_, population_));
        if (counts_.empty())
            throw InvalidSeries(fmt::format("unit '{}': empty count series", unit_id_));
        for (std::size_t t = 0; t < counts_.size(); ++t)
            if (counts_[t] < 0)
                throw InvalidSeries(
                    fmt::format("unit '{}': negative count at t={}", unit_id_, t));
        if (!t0_date_.ok())
            throw InvalidSeries(fmt::format("unit '{}': invalid start date", unit_id_));
    }

    // Builds a series from dated observations, which must be strictly
    // consecutive days. A gap or repeated date is an InvalidSeries error.
    static CountSeries from_dated(std::string unit_id, std::string unit_name, Location location,
                                  std::int64_t population, ResponseKind kind,
                                  const std::vector<std::pair<Date, std::int64_t>>& observations,
                                  bool sub_threshold = false) {
        if (observations.empty())
            throw InvalidSeries(fmt::format("unit '{}': empty count series", unit_id));
        std::vector<std::int64_t> counts;
        counts.reserve(observations.size());
        for (std::size_t i = 0; i < observations.size(); ++i) {
            if (i > 0 && days_between(observations[i - 1].first, observations[i].first) != 1)
                throw InvalidSeries(fmt::format("unit '{}': date gap before {}", unit_id,
                                                format_date(observations[i].first)));
            counts.push_back(observations[i].second);
        }
        return CountSeries(std::move(unit_id), std::move(unit_name), location, population, kind,
                           observations.front().first, std::move(counts), sub_threshold);
    }

    const std::string& unit_id() const noexcept { return unit_id_; }
    const std::string& unit_name() const noexcept { return unit_name_; }
    Location location() const noexcept { return location_; }
    double latitude() const noexcept { return location_.latitude; }
    double longitude() const noexcept { return location_.longitude; }
    std::int64_t population() const noexcept { return population_; }
    ResponseKind response_kind() const noexcept { return kind_; }
    bool is_cumulative() const noexcept { return epicurve::is_cumulative(kind_); }
    Date t0_date() const noexcept { return t0_date_; }
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    std::size_t size() const noexcept { return counts_.size(); }
    // Index of the last observed day.
    std::size_t last_t() const noexcept { return counts_.size() - 1; }
    Date last_date() const { return add_days(t0_date_, static_cast<long>(last_t())); }
    // The series never reached the start threshold and is kept whole.
    bool sub_threshold() const noexcept { return sub_threshold_; }

    std::int64_t max_count() const noexcept {
        std::int64_t m = 0;
        for (auto c : counts_) m = std::max(m, c);
        return m;
    }

    // Day indices where a cumulative count went down (upstream corrections).
    std::vector<std::size_t> decreases() const {
        std::vector<std::size_t> out;
        if (!is_cumulative()) return out;
        for (std::size_t t = 1; t < counts_.size(); ++t)
            if (counts_[t] < counts_[t - 1]) out.push_back(t);
        return out;
    }

private:
    std::string unit_id_;
    std::string unit_name_;
    Location location_;
    std::int64_t population_;
    ResponseKind kind_;
    Date t0_date_;
    std::vector<std::int64_t> counts_;
    bool sub_threshold_;
};

/// Degree-d log-polynomial Poisson fit. beta holds raw-time coefficients
/// (beta_0..beta_d) of log h(t); the log-likelihood omits sum(log Y_t!).
struct PolyFit {
    int degree = 1;
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;

    // Value of the coefficient polynomial (log hazard) at t.
    double eta(double t) const {
        double v = 0.0;
        for (Eigen::Index k = beta.size() - 1; k >= 0; --k) v = v * t + beta[k];
        return v;
    }
};

inline double expit(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Logistic-hazard fit h(t) = K expit(beta0 + beta1 t), K = expit(gamma).
struct LogisticFit {
    double gamma = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double flex_time = 0.0;
    std::pair<double, double> flex_ci{0.0, 0.0};

    double K() const { return expit(gamma); }
    Eigen::Vector3d theta() const { return {gamma, beta0, beta1}; }
    double hazard(double t) const { return K() * expit(beta0 + beta1 * t); }
};

struct LowPrevalence {};
struct NoConvergence {};
struct NoAdequateModel {};

using Verdict = std::variant<PolyFit, LogisticFit, LowPrevalence, NoConvergence, NoAdequateModel>;

// One significance test performed during selection.
struct TestRecord {
    std::string name;       // e.g. "wald(degree 3)" or "lrt(1 vs 3)"
    double statistic = 0;   // z or D
    double df_or_se = 0;    // standard error (Wald) or degrees of freedom (LRT)
    double p_value = 1;
};

struct SelectionOutcome {
    Verdict verdict;
    std::vector<TestRecord> trail;
    // Every polynomial fit attempted, indexed by degree-1; empty when gated.
    std::vector<PolyFit> poly_fits;
    std::optional<LogisticFit> logistic_attempt;

    bool is_terminal() const {
        return !std::holds_alternative<PolyFit>(verdict) &&
               !std::holds_alternative<LogisticFit>(verdict);
    }
};

inline std::string verdict_label(const Verdict& v) {
    struct Visitor {
        std::string operator()(const PolyFit& f) const { return fmt::format("degree {}", f.degree); }
        std::string operator()(const LogisticFit&) const { return "logistic"; }
        std::string operator()(LowPrevalence) const { return "Prevalence too low"; }
        std::string operator()(NoConvergence) const { return "Lack of convergence of all models"; }
        std::string operator()(NoAdequateModel) const { return "No adequate model found"; }
    };
    return std::visit(Visitor{}, v);
}

/// Everything the renderers need for one unit.
struct UnitReport {
    CountSeries series;
    SelectionOutcome outcome;
    std::vector<std::pair<double, double>> fitted;  // (t, predicted count)
    double last_slope = 0.0;          // persons/day at t = T
    bool slope_observed = false;      // true when last_slope is Y_T - Y_{T-1}
    double prevalence = 0.0;          // in [0, 1]
    int color_class = 0;
};

}  // namespace epicurve
