#pragma once

// Logistic-hazard Poisson model for cumulative counts:
//   Y_t ~ Poisson(N h(t)),  h(t) = K expit(beta0 + beta1 t),  K = expit(gamma),
// maximized over the unconstrained (gamma, beta0, beta1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"
#include "epicurve/optimize.hpp"

namespace epicurve {

struct OptimizerConfig {
    int max_iterations = 500;
    // Convergence requires ||grad l|| <= gradient_tolerance * (1 + |l|).
    double gradient_tolerance = 1e-6;
    int newton_polish_steps = 10;
    // Extra randomized starts tried only when the default start fails.
    int restarts = 4;
    std::uint64_t seed = 0;
    double hessian_rel_step = 1e-5;

    void validate() const {
        if (max_iterations < 1) throw InvalidConfig("OptimizerConfig: max_iterations must be >= 1");
        if (!(gradient_tolerance > 0)) throw InvalidConfig("OptimizerConfig: tolerance must be > 0");
        if (restarts < 0) throw InvalidConfig("OptimizerConfig: restarts must be >= 0");
    }
};

inline constexpr double kNormalQuantile975 = 1.959963984540054;

namespace detail {

// log(expit(x)) without overflow.
inline double log_expit(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// Log-likelihood (without sum log Y_t!) and its gradient over (gamma, beta0, beta1).
class LogisticLikelihood {
public:
    explicit LogisticLikelihood(const CountSeries& series)
        : n_(static_cast<double>(series.population())) {
        y_.reserve(series.size());
        for (auto c : series.counts()) y_.push_back(static_cast<double>(c));
    }

    double operator()(const Eigen::Vector3d& theta, Eigen::Vector3d* grad) const {
        const double gamma = theta[0], b0 = theta[1], b1 = theta[2];
        const double k = expit(gamma);
        const double log_k = log_expit(gamma);
        double ll = 0.0, g_gamma = 0.0, g_b0 = 0.0, g_b1 = 0.0;
        for (std::size_t t = 0; t < y_.size(); ++t) {
            const double eta = b0 + b1 * static_cast<double>(t);
            const double b = expit(eta);
            const double h = k * b;
            ll += y_[t] * (log_k + log_expit(eta)) - n_ * h;
            const double resid = y_[t] - n_ * h;
            g_gamma += resid * (1.0 - k);
            g_b0 += resid * (1.0 - b);
            g_b1 += resid * (1.0 - b) * static_cast<double>(t);
        }
        if (grad) *grad = {g_gamma, g_b0, g_b1};
        return ll;
    }

private:
    double n_;
    std::vector<double> y_;
};

inline Eigen::Vector3d default_logistic_start(const CountSeries& series) {
    const double n_pop = static_cast<double>(series.population());
    const double k_init =
        std::clamp(2.0 * static_cast<double>(series.max_count()) / n_pop, 1e-9, 0.9);
    // Least-squares line through logit(Y_t / (N K)) against t.
    double st = 0, sz = 0, stt = 0, stz = 0;
    const double m = static_cast<double>(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double share = std::clamp(
            static_cast<double>(series.counts()[t]) / (n_pop * k_init), 1e-6, 1.0 - 1e-6);
        const double z = logit(share);
        const double tt = static_cast<double>(t);
        st += tt;
        sz += z;
        stt += tt * tt;
        stz += tt * z;
    }
    const double denom = m * stt - st * st;
    const double slope = denom > 0 ? (m * stz - st * sz) / denom : 0.0;
    const double intercept = (sz - slope * st) / m;
    return {logit(k_init), intercept, slope};
}

struct LogisticAttempt {
    LogisticFit fit;
    bool usable = false;  // finite optimum with a negative-definite Hessian
};

inline LogisticAttempt maximize_logistic(const LogisticLikelihood& loglik, double time_scale,
                                         const Eigen::Vector3d& start,
                                         const OptimizerConfig& config) {
    // The optimizer works on (gamma, beta0, beta1 * time_scale) so that the
    // three coordinates have comparable curvature.
    auto to_theta = [&](const Eigen::VectorXd& u) -> Eigen::Vector3d {
        return {u[0], u[1], u[2] / time_scale};
    };
    auto objective = [&](const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
        Eigen::Vector3d g;
        const double ll = loglik(to_theta(u), &g);
        grad.resize(3);
        grad << -g[0], -g[1], -g[2] / time_scale;
        return -ll;
    };
    auto theta_gradient = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        Eigen::Vector3d g;
        loglik(Eigen::Vector3d(theta), &g);
        grad = g;
    };

    Eigen::VectorXd u0(3);
    u0 << start[0], start[1], start[2] * time_scale;
    auto result = minimize_bfgs(objective, u0, config.max_iterations, config.gradient_tolerance * 1e-3);

    LogisticAttempt attempt;
    LogisticFit& fit = attempt.fit;
    fit.iterations = result.iterations;
    Eigen::Vector3d theta = to_theta(result.x);
    Eigen::Vector3d grad;
    double ll = loglik(theta, &grad);
    if (!std::isfinite(ll) || !grad.allFinite()) return attempt;

    // Newton polish with the finite-difference Hessian of the analytic gradient.
    for (int k = 0; k < config.newton_polish_steps; ++k) {
        const Eigen::MatrixXd neg_hessian =
            -finite_difference_hessian(theta_gradient, Eigen::VectorXd(theta), config.hessian_rel_step);
        Eigen::LLT<Eigen::MatrixXd> llt(neg_hessian);
        if (llt.info() != Eigen::Success) break;
        const Eigen::Vector3d step = llt.solve(Eigen::VectorXd(grad));
        bool improved = false;
        for (double scale = 1.0; scale > 1e-4; scale *= 0.5) {
            const Eigen::Vector3d candidate = theta + scale * step;
            Eigen::Vector3d cand_grad;
            const double cand_ll = loglik(candidate, &cand_grad);
            if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12 * std::abs(ll) &&
                cand_grad.norm() < grad.norm()) {
                theta = candidate;
                ll = cand_ll;
                grad = cand_grad;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        if (grad.norm() <= 1e-12 * (1.0 + std::abs(ll))) break;
    }

    fit.gamma = theta[0];
    fit.beta0 = theta[1];
    fit.beta1 = theta[2];
    fit.log_likelihood = ll;
    fit.gradient_norm = grad.norm();

    const Eigen::MatrixXd neg_hessian =
        -finite_difference_hessian(theta_gradient, Eigen::VectorXd(theta), config.hessian_rel_step);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_hessian);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0)) return attempt;
    fit.covariance = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                     eig.eigenvectors().transpose();
    if (!fit.covariance.allFinite()) return attempt;

    attempt.usable = true;
    const bool hit_cap = result.iterations >= config.max_iterations && !result.converged;
    fit.converged = !hit_cap &&
                    fit.gradient_norm <= config.gradient_tolerance * (1.0 + std::abs(ll));
    return attempt;
}

}  // namespace detail

struct Inflection {
    double flex = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    double standard_error = 0.0;
};

/// Inflection time -beta0/beta1 and its 95% delta-method interval. The
/// gradient of the flex time over (gamma, beta0, beta1) is
/// (0, -1/beta1, beta0/beta1^2).
inline Inflection inflection(const LogisticFit& fit) {
    if (!fit.converged) throw NotConverged("inflection: logistic fit did not converge");
    if (fit.beta1 == 0.0) throw DegenerateSlope("inflection: beta1 is zero");
    const Eigen::Vector3d g{0.0, -1.0 / fit.beta1, fit.beta0 / (fit.beta1 * fit.beta1)};
    const double variance = std::max(0.0, g.dot(fit.covariance * g));
    Inflection out;
    out.flex = -fit.beta0 / fit.beta1;
    out.standard_error = std::sqrt(variance);
    const double half = kNormalQuantile975 * out.standard_error;
    out.ci = {out.flex - half, out.flex + half};
    return out;
}

inline LogisticFit fit_logistic(const CountSeries& series, const OptimizerConfig& config = {}) {
    config.validate();
    if (!series.is_cumulative())
        throw NotCumulative(fmt::format("unit '{}': logistic model needs a cumulative response",
                                        series.unit_id()));
    if (series.size() < 5)
        throw SeriesTooShort(fmt::format("unit '{}': logistic model needs at least 5 observations",
                                         series.unit_id()));

    const detail::LogisticLikelihood loglik(series);
    const double time_scale = static_cast<double>(series.last_t());
    const Eigen::Vector3d start = detail::default_logistic_start(series);

    auto best = detail::maximize_logistic(loglik, time_scale, start, config);
    if (!best.fit.converged && config.restarts > 0) {
        std::mt19937_64 rng(config.seed);
        std::uniform_real_distribution<double> shift(-1.0, 1.0);
        for (int r = 0; r < config.restarts; ++r) {
            Eigen::Vector3d perturbed = start;
            perturbed[0] += 1.5 * shift(rng);
            perturbed[1] += 1.5 * shift(rng);
            perturbed[2] *= 1.0 + 0.5 * shift(rng);
            auto attempt = detail::maximize_logistic(loglik, time_scale, perturbed, config);
            const bool better =
                (attempt.fit.converged && !best.fit.converged) ||
                (attempt.fit.converged == best.fit.converged &&
                 attempt.fit.log_likelihood > best.fit.log_likelihood);
            if (better) best = std::move(attempt);
            if (best.fit.converged) break;
        }
    }

    LogisticFit fit = best.fit;
    // Report on the polynomial fits' scale, sum Y (log N + log h) - N h.
    double total = 0.0;
    for (auto c : series.counts()) total += static_cast<double>(c);
    fit.log_likelihood += total * std::log(static_cast<double>(series.population()));
    if (fit.converged && fit.beta1 != 0.0) {
        const auto inf = inflection(fit);
        fit.flex_time = inf.flex;
        fit.flex_ci = inf.ci;
    }
    return fit;
}

struct Derivatives {
    double slope = 0.0;
    double curvature = 0.0;
};

/// Hazard-scale slope and curvature of the fitted logistic at t; multiply
/// by N for counts per day.
inline Derivatives logistic_derivatives(const LogisticFit& fit, double t) {
    if (!fit.converged) throw NotConverged("logistic_derivatives: fit did not converge");
    // e^eta / (1 + e^eta)^2 = b (1 - b), (1 - e^eta) / (1 + e^eta) = 1 - 2b.
    const double eta = fit.beta0 + fit.beta1 * t;
    const double b = expit(eta);
    const double one_minus_b = expit(-eta);  // exact on the plateau, where 1 - b cancels
    const double k = fit.K();
    const double core = b * one_minus_b;
    return {k * fit.beta1 * core, k * fit.beta1 * fit.beta1 * core * (one_minus_b - b)};
}

}  // namespace epicurve
