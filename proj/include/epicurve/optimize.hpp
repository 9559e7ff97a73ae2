#pragma once

// Unconstrained smooth minimization: BFGS with a backtracking line search,
// plus a central finite-difference Hessian built from an analytic gradient.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace epicurve {

struct MinimizeResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;  // gradient criterion met before the iteration cap
};

/// Minimizes f. `f(x, grad)` returns f(x) and writes the gradient into
/// `grad`. Converges when ||grad|| <= gradient_tolerance * (1 + |f|).
template <class Objective>
MinimizeResult minimize_bfgs(Objective&& f, Eigen::VectorXd x0, int max_iterations,
                             double gradient_tolerance) {
    const Eigen::Index n = x0.size();
    MinimizeResult r;
    r.x = std::move(x0);
    r.gradient.resize(n);
    r.value = f(r.x, r.gradient);
    if (!std::isfinite(r.value) || !r.gradient.allFinite()) return r;

    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    Eigen::VectorXd trial_grad(n);

    for (int iter = 1; iter <= max_iterations; ++iter) {
        r.iterations = iter;
        if (r.gradient.norm() <= gradient_tolerance * (1.0 + std::abs(r.value))) {
            r.converged = true;
            return r;
        }
        Eigen::VectorXd direction = -inv_hessian * r.gradient;
        double slope = r.gradient.dot(direction);
        if (!(slope < 0)) {
            inv_hessian.setIdentity();
            direction = -r.gradient;
            slope = -r.gradient.squaredNorm();
        }

        // Armijo backtracking with quadratic interpolation.
        double step = 1.0;
        if (!scaled) step = std::min(1.0, 1.0 / std::max(1e-300, r.gradient.norm()));
        Eigen::VectorXd trial;
        double trial_value = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            trial = r.x + step * direction;
            trial_value = f(trial, trial_grad);
            if (std::isfinite(trial_value) && trial_grad.allFinite() &&
                trial_value <= r.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            double next = 0.5 * step;
            if (std::isfinite(trial_value)) {
                const double denom = 2.0 * (trial_value - r.value - slope * step);
                if (denom > 0) next = std::clamp(-slope * step * step / denom, 0.1 * step, 0.5 * step);
            }
            step = next;
        }
        if (!accepted) return r;  // stalled: no descent possible at working precision

        const Eigen::VectorXd s = trial - r.x;
        const Eigen::VectorXd y = trial_grad - r.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                inv_hessian *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            inv_hessian = (I - rho * s * y.transpose()) * inv_hessian *
                              (I - rho * y * s.transpose()) +
                          rho * s * s.transpose();
        }
        r.x = trial;
        r.value = trial_value;
        r.gradient = trial_grad;
    }
    r.converged = r.gradient.norm() <= gradient_tolerance * (1.0 + std::abs(r.value));
    return r;
}

/// Hessian by central differences of an analytic gradient, with per-
/// coordinate step rel_step * max(1, |x_i|); the result is symmetrized.
template <class Gradient>
Eigen::MatrixXd finite_difference_hessian(Gradient&& gradient, const Eigen::VectorXd& x,
                                          double rel_step = 1e-5) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd h(n, n);
    Eigen::VectorXd g_plus(n), g_minus(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double step = rel_step * std::max(1.0, std::abs(x[i]));
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        gradient(xp, g_plus);
        gradient(xm, g_minus);
        h.col(i) = (g_plus - g_minus) / (xp[i] - xm[i]);
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace epicurve
