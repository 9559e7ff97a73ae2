#pragma once

// Log-polynomial Poisson regression with a log-population offset:
//   log E[Y_t] = log N + beta_0 + beta_1 t + ... + beta_d t^d,  d in {1,2,3},
// fitted by iteratively reweighted least squares (Fisher scoring, which for
// the canonical log link coincides with Newton-Raphson).

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"

namespace epicurve {

struct IrlsConfig {
    int max_iterations = 50;
    double relative_deviance_tolerance = 1e-8;
    // |log N + eta| beyond this (or any non-finite value) is divergence.
    double linear_predictor_cap = 700.0;

    void validate() const {
        if (max_iterations < 1) throw InvalidConfig("IrlsConfig: max_iterations must be >= 1");
        if (!(relative_deviance_tolerance > 0))
            throw InvalidConfig("IrlsConfig: tolerance must be > 0");
        if (!(linear_predictor_cap > 0)) throw InvalidConfig("IrlsConfig: cap must be > 0");
    }
};

namespace detail {

inline Eigen::MatrixXd poly_design(std::size_t n, int degree) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), degree + 1);
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= static_cast<double>(t)) X(t, k) = p;
    }
    return X;
}

inline Eigen::VectorXd counts_vector(const CountSeries& series) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(series.size()));
    for (std::size_t t = 0; t < series.size(); ++t)
        y[static_cast<Eigen::Index>(t)] = static_cast<double>(series.counts()[t]);
    return y;
}

// y log(y / mu) with the 0 log 0 = 0 convention.
inline double ylogy_over(double y, double mu) { return y > 0 ? y * std::log(y / mu) : 0.0; }

// Cholesky of a symmetric positive-definite matrix after symmetric diagonal
// equilibration. Raw time powers make the information matrix badly scaled;
// equilibration keeps the factorization stable without changing the
// parameterization.
class ScaledCholesky {
public:
    explicit ScaledCholesky(const Eigen::MatrixXd& a) : scale_(a.rows()) {
        ok_ = true;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (!(a(i, i) > 0) || !std::isfinite(a(i, i))) {
                ok_ = false;
                return;
            }
            scale_[i] = 1.0 / std::sqrt(a(i, i));
        }
        const Eigen::MatrixXd scaled = scale_.asDiagonal() * a * scale_.asDiagonal();
        llt_.compute(scaled);
        if (llt_.info() != Eigen::Success) {
            ok_ = false;
            return;
        }
        // Reject factorizations that are numerically singular.
        const Eigen::VectorXd d = llt_.matrixLLT().diagonal();
        const double ratio = d.minCoeff() / d.maxCoeff();
        if (!(ratio * ratio > 1e-15)) ok_ = false;
    }

    bool ok() const { return ok_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * b);
    }

    Eigen::MatrixXd inverse() const {
        const auto n = scale_.size();
        Eigen::MatrixXd inv = scale_.asDiagonal() *
                              llt_.solve(Eigen::MatrixXd::Identity(n, n)) *
                              scale_.asDiagonal();
        return 0.5 * (inv + inv.transpose());
    }

private:
    Eigen::VectorXd scale_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    bool ok_ = false;
};

struct PoissonState {
    Eigen::VectorXd mu;
    double deviance = std::numeric_limits<double>::infinity();
    double log_likelihood = -std::numeric_limits<double>::infinity();
    bool finite = false;
};

inline PoissonState evaluate_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double log_n, const Eigen::VectorXd& beta, double cap) {
    PoissonState s;
    const Eigen::VectorXd eta = X * beta;
    s.mu.resize(y.size());
    double dev = 0.0, ll = 0.0;
    for (Eigen::Index t = 0; t < y.size(); ++t) {
        const double lp = log_n + eta[t];
        if (!std::isfinite(lp) || std::abs(lp) > cap) return s;
        s.mu[t] = std::exp(lp);
        dev += 2.0 * (ylogy_over(y[t], s.mu[t]) - (y[t] - s.mu[t]));
        ll += y[t] * lp - s.mu[t];
    }
    s.deviance = dev;
    s.log_likelihood = ll;
    s.finite = std::isfinite(dev) && std::isfinite(ll);
    return s;
}

}  // namespace detail

// Poisson log-likelihood of a raw-time coefficient vector on a series,
// omitting sum(log Y_t!).
inline double poly_log_likelihood(const CountSeries& series, const Eigen::VectorXd& beta) {
    const double log_n = std::log(static_cast<double>(series.population()));
    double ll = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        double eta = 0.0;
        for (Eigen::Index k = beta.size() - 1; k >= 0; --k)
            eta = eta * static_cast<double>(t) + beta[k];
        const double lp = log_n + eta;
        ll += static_cast<double>(series.counts()[t]) * lp - std::exp(lp);
    }
    return ll;
}

inline PolyFit fit_poly(const CountSeries& series, int degree, const IrlsConfig& config = {}) {
    config.validate();
    if (degree < 1 || degree > 3)
        throw InvalidDegree(fmt::format("degree must be 1, 2 or 3 (got {})", degree));
    if (series.size() < static_cast<std::size_t>(degree) + 2)
        throw SeriesTooShort(fmt::format("unit '{}': {} observations, degree {} needs at least {}",
                                         series.unit_id(), series.size(), degree, degree + 2));

    const Eigen::MatrixXd X = detail::poly_design(series.size(), degree);
    const Eigen::VectorXd y = detail::counts_vector(series);
    const double n_pop = static_cast<double>(series.population());
    const double log_n = std::log(n_pop);
    const auto p = static_cast<Eigen::Index>(degree + 1);

    PolyFit fit;
    fit.degree = degree;
    fit.beta = Eigen::VectorXd::Zero(p);
    fit.beta[0] = std::log((y.mean() + 0.5) / n_pop);
    fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());

    auto state = detail::evaluate_poisson(X, y, log_n, fit.beta, config.linear_predictor_cap);
    fit.log_likelihood = state.log_likelihood;

    // All-zero data: the likelihood increases without bound as beta_0 -> -inf.
    if (y.sum() == 0.0 || !state.finite) return fit;

    auto information = [&](const Eigen::VectorXd& mu) -> Eigen::MatrixXd {
        return X.transpose() * mu.asDiagonal() * X;
    };

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        fit.iterations = iter;
        const detail::ScaledCholesky chol(information(state.mu));
        if (!chol.ok()) return fit;
        const Eigen::VectorXd step = chol.solve(X.transpose() * (y - state.mu));

        // Step halving guards against overshooting into non-finite or
        // worse-deviance territory.
        double scale = 1.0;
        detail::PoissonState next;
        Eigen::VectorXd candidate;
        for (int halvings = 0; halvings < 30; ++halvings, scale *= 0.5) {
            candidate = fit.beta + scale * step;
            next = detail::evaluate_poisson(X, y, log_n, candidate, config.linear_predictor_cap);
            if (next.finite && next.deviance <= state.deviance * (1.0 + 1e-12) + 1e-12) break;
        }
        if (!next.finite) return fit;

        const double change =
            std::abs(next.deviance - state.deviance) / (std::abs(next.deviance) + 0.1);
        fit.beta = candidate;
        state = std::move(next);
        fit.log_likelihood = state.log_likelihood;

        if (change < config.relative_deviance_tolerance) {
            const Eigen::VectorXd score = X.transpose() * (y - state.mu);
            if (score.cwiseAbs().maxCoeff() <= 1e-7 * state.mu.sum()) {
                fit.converged = true;
                break;
            }
        }
    }
    if (!fit.converged) return fit;

    const detail::ScaledCholesky chol(information(state.mu));
    if (!chol.ok()) {
        fit.converged = false;
        return fit;
    }
    fit.covariance = chol.inverse();
    return fit;
}

/// Predicted count N exp(eta(t)).
inline double predict(const PolyFit& fit, const CountSeries& series, double t) {
    if (!fit.converged) throw NotConverged("predict: polynomial fit did not converge");
    return static_cast<double>(series.population()) * std::exp(fit.eta(t));
}

}  // namespace epicurve
