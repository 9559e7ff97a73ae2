#pragma once

// Per-unit automatic model selection: low-prevalence gate, convergence-aware
// choice among the degree 1/2/3 log-polynomials, and the logistic takeover
// for cumulative series whose selected polynomial already turns down.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "epicurve/calculus.hpp"
#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"
#include "epicurve/logistic_model.hpp"
#include "epicurve/poisson_glm.hpp"

namespace epicurve {

struct SelectionConfig {
    double p_cutoff = 0.05;
    double low_prevalence_threshold = 0.00005;
    int flex_guard_days = 7;
    int start_threshold = 10;
    IrlsConfig irls{};
    OptimizerConfig optimizer{};

    void validate() const {
        if (!(p_cutoff > 0 && p_cutoff < 1))
            throw InvalidConfig(fmt::format("p cutoff must lie in (0, 1) (got {})", p_cutoff));
        if (!(low_prevalence_threshold > 0))
            throw InvalidConfig("low-prevalence threshold must be positive");
        if (flex_guard_days <= 0) throw InvalidConfig("flex guard days must be positive");
        if (start_threshold <= 0) throw InvalidConfig("start threshold must be positive");
        irls.validate();
        optimizer.validate();
    }
};

/// Two-sided standard-normal tail probability 2 (1 - Phi(|z|)).
inline double normal_two_sided_p(double z) {
    return boost::math::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Upper-tail chi-squared probability.
inline double chi_squared_upper_p(double statistic, int df) {
    if (statistic <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

struct WaldResult {
    double z = 0.0;
    double p = 1.0;
    double standard_error = 0.0;
};

/// Wald test of the highest-degree coefficient of a converged fit.
inline WaldResult wald_test(const PolyFit& larger) {
    if (!larger.converged) throw NotConverged("wald_test: fit did not converge");
    const auto d = static_cast<Eigen::Index>(larger.degree);
    const double var = larger.covariance(d, d);
    if (!(var > 0)) throw ZeroVariance(fmt::format("wald_test: variance of beta_{} is not positive", d));
    WaldResult r;
    r.standard_error = std::sqrt(var);
    r.z = larger.beta[d] / r.standard_error;
    r.p = normal_two_sided_p(r.z);
    return r;
}

struct LrtResult {
    double statistic = 0.0;
    double p = 1.0;
    bool clamped = false;  // 2 (ll_large - ll_small) was negative
};

inline LrtResult lr_test(double ll_small, double ll_large, int df) {
    if (df < 1) throw InvalidConfig("lr_test: df must be >= 1");
    LrtResult r;
    const double raw = 2.0 * (ll_large - ll_small);
    r.clamped = raw < 0;
    r.statistic = std::max(0.0, raw);
    r.p = chi_squared_upper_p(r.statistic, df);
    return r;
}

struct PolySelection {
    std::optional<int> degree;  // empty when no polynomial converged
    std::vector<TestRecord> trail;
};

namespace detail {

// Wald test folded into a trail record; a non-positive variance counts as
// "not significant".
inline bool wald_significant(const PolyFit& larger, double p_cutoff, std::vector<TestRecord>& trail) {
    TestRecord rec;
    rec.name = fmt::format("wald(degree {} vs {})", larger.degree, larger.degree - 1);
    try {
        const auto w = wald_test(larger);
        rec.statistic = w.z;
        rec.df_or_se = w.standard_error;
        rec.p_value = w.p;
    } catch (const ZeroVariance&) {
        rec.statistic = 0.0;
        rec.df_or_se = 0.0;
        rec.p_value = 1.0;
    }
    trail.push_back(rec);
    return rec.p_value < p_cutoff;
}

}  // namespace detail

/// Convergence-aware choice among the three nested polynomials.
/// `fits[d - 1]` is the degree-d fit.
inline PolySelection choose_polynomial(std::span<const PolyFit, 3> fits, double p_cutoff) {
    PolySelection out;
    const bool c1 = fits[0].converged, c2 = fits[1].converged, c3 = fits[2].converged;
    const int n_converged = int(c1) + int(c2) + int(c3);

    if (n_converged == 0) return out;
    if (n_converged == 1) {
        out.degree = c1 ? 1 : (c2 ? 2 : 3);
        return out;
    }
    if (n_converged == 3) {
        if (detail::wald_significant(fits[2], p_cutoff, out.trail)) {
            out.degree = 3;
        } else {
            out.degree = detail::wald_significant(fits[1], p_cutoff, out.trail) ? 2 : 1;
        }
        return out;
    }
    // Exactly two converged.
    if (c1 && c3) {
        const auto lrt = lr_test(fits[0].log_likelihood, fits[2].log_likelihood, 2);
        out.trail.push_back({"lrt(degree 1 vs 3)", lrt.statistic, 2.0, lrt.p});
        out.degree = lrt.p < p_cutoff ? 3 : 1;
        return out;
    }
    const int larger = c3 ? 3 : 2;
    out.degree = detail::wald_significant(fits[static_cast<std::size_t>(larger - 1)], p_cutoff, out.trail)
                     ? larger
                     : larger - 1;
    return out;
}

/// The production fitting routines; tests substitute stubs with the same shape.
struct DefaultFitters {
    PolyFit poly(const CountSeries& series, int degree, const IrlsConfig& config) const {
        return fit_poly(series, degree, config);
    }
    LogisticFit logistic(const CountSeries& series, const OptimizerConfig& config) const {
        return fit_logistic(series, config);
    }
};

inline bool below_prevalence_gate(const CountSeries& series, double threshold) {
    return static_cast<double>(series.max_count()) / static_cast<double>(series.population()) <
           threshold;
}

template <class Fitters = DefaultFitters>
SelectionOutcome select(const CountSeries& series, const SelectionConfig& config,
                        const Fitters& fitters = {}) {
    config.validate();
    SelectionOutcome outcome{LowPrevalence{}, {}, {}, std::nullopt};

    if (below_prevalence_gate(series, config.low_prevalence_threshold)) return outcome;

    std::array<PolyFit, 3> fits;
    for (int d = 1; d <= 3; ++d) {
        auto& fit = fits[static_cast<std::size_t>(d - 1)];
        if (series.size() < static_cast<std::size_t>(d) + 2) {
            fit.degree = d;  // too short to fit: treated as non-converged
            continue;
        }
        fit = fitters.poly(series, d, config.irls);
    }
    outcome.poly_fits.assign(fits.begin(), fits.end());

    auto chosen = choose_polynomial(std::span<const PolyFit, 3>(fits), config.p_cutoff);
    outcome.trail = std::move(chosen.trail);
    if (!chosen.degree) {
        outcome.verdict = NoConvergence{};
        return outcome;
    }
    const PolyFit& best = fits[static_cast<std::size_t>(*chosen.degree - 1)];
    outcome.verdict = best;

    if (!series.is_cumulative()) return outcome;

    const double last_t = static_cast<double>(series.last_t());
    if (!(poly_derivatives(best, series, last_t).slope < 0.0)) return outcome;

    // A cumulative curve that already bends down: only the logistic is
    // adequate, and only once its inflection is safely in the past.
    outcome.verdict = NoAdequateModel{};
    if (series.size() < 5) return outcome;
    LogisticFit logistic = fitters.logistic(series, config.optimizer);
    outcome.logistic_attempt = logistic;
    if (logistic.converged && logistic.beta1 != 0.0 &&
        logistic.flex_ci.second < last_t - static_cast<double>(config.flex_guard_days)) {
        outcome.verdict = std::move(logistic);
    }
    return outcome;
}

}  // namespace epicurve
