#pragma once

// Stubbed fitters for driving the selection cascade with chosen
// convergence flags and test p-values.

#include <array>
#include <cmath>
#include <optional>
#include <utility>

#include <boost/math/special_functions/erf.hpp>

#include "epicurve/selection.hpp"

namespace stub {

// |z| whose two-sided normal p-value is p.
inline double z_for_p(double p) { return std::sqrt(2.0) * boost::math::erfc_inv(p); }

// A converged degree-d fit whose top coefficient has Wald p-value `p`
// (positive trend everywhere, unit variances).
inline epicurve::PolyFit poly(int degree, bool converged, double p = 0.5, double log_likelihood = 0.0) {
    epicurve::PolyFit f;
    f.degree = degree;
    f.beta = Eigen::VectorXd::Zero(degree + 1);
    f.beta[0] = -9.0;
    f.beta[1] = 0.1;
    if (degree >= 2) f.beta[degree] = z_for_p(p) * (degree == 2 ? 1e-3 : 1e-5);
    if (degree == 1) f.beta[1] = std::max(0.1, z_for_p(p) * 1e-2);
    f.covariance = Eigen::MatrixXd::Identity(degree + 1, degree + 1);
    const double se = degree == 1 ? 1e-2 : (degree == 2 ? 1e-3 : 1e-5);
    f.covariance(degree, degree) = se * se;
    f.log_likelihood = log_likelihood;
    f.converged = converged;
    return f;
}

struct Fitters {
    explicit Fitters(std::array<epicurve::PolyFit, 3> f) : fits(std::move(f)) {}

    std::array<epicurve::PolyFit, 3> fits;
    std::optional<epicurve::LogisticFit> logistic_fit;
    mutable int poly_calls = 0;
    mutable int logistic_calls = 0;

    epicurve::PolyFit poly(const epicurve::CountSeries&, int degree, const epicurve::IrlsConfig&) const {
        ++poly_calls;
        return fits[static_cast<std::size_t>(degree - 1)];
    }
    epicurve::LogisticFit logistic(const epicurve::CountSeries&, const epicurve::OptimizerConfig&) const {
        ++logistic_calls;
        return logistic_fit.value_or(epicurve::LogisticFit{});
    }
};

}  // namespace stub
