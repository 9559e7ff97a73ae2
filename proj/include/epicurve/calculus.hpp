#pragma once

// Time derivatives and stationary points of fitted log-polynomial hazards.

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"
#include "epicurve/logistic_model.hpp"

namespace epicurve {

/// Hazard-scale slope h(t) p'(t) and curvature h(t) (p''(t) + p'(t)^2) of a
/// fitted log-polynomial, where p is the coefficient polynomial.
inline Derivatives poly_derivatives(const PolyFit& fit, double t) {
    if (!fit.converged) throw NotConverged("poly_derivatives: fit did not converge");
    double d1 = 0.0, d2 = 0.0;
    for (Eigen::Index k = 1; k < fit.beta.size(); ++k)
        d1 += static_cast<double>(k) * fit.beta[k] * std::pow(t, static_cast<double>(k - 1));
    for (Eigen::Index k = 2; k < fit.beta.size(); ++k)
        d2 += static_cast<double>(k * (k - 1)) * fit.beta[k] * std::pow(t, static_cast<double>(k - 2));
    const double h = std::exp(fit.eta(t));
    return {h * d1, h * (d2 + d1 * d1)};
}

/// Count-scale (persons/day) versions: N times the hazard-scale values.
inline Derivatives poly_derivatives(const PolyFit& fit, const CountSeries& series, double t) {
    auto d = poly_derivatives(fit, t);
    const double n = static_cast<double>(series.population());
    return {n * d.slope, n * d.curvature};
}

enum class StationaryKind { Max, Min };

struct StationaryPoint {
    double t = 0.0;
    StationaryKind kind = StationaryKind::Max;
    bool before_series = false;  // t < 0, i.e. earlier than the first observation
    bool degenerate = false;     // p''(t) == 0
};

constexpr std::string_view to_string(StationaryKind kind) {
    return kind == StationaryKind::Max ? "max" : "min";
}

/// Zeros of the slope for degree 2 and 3 fits, classified by the sign of p''.
/// Degree 3 yields two points only when 4 beta2^2 - 12 beta1 beta3 > 0.
inline std::vector<StationaryPoint> stationary_points(const PolyFit& fit) {
    if (!fit.converged) throw NotConverged("stationary_points: fit did not converge");
    if (fit.degree < 2)
        throw DegreeTooLow("stationary_points: a degree-1 hazard has no stationary point");

    const double b1 = fit.beta[1], b2 = fit.beta[2];
    const double b3 = fit.degree >= 3 ? fit.beta[3] : 0.0;
    auto second = [&](double t) { return 2.0 * b2 + 6.0 * b3 * t; };
    auto make = [&](double t) {
        StationaryPoint p;
        p.t = t;
        const double curv = second(t);
        p.kind = curv < 0 ? StationaryKind::Max : StationaryKind::Min;
        p.degenerate = curv == 0.0;
        p.before_series = t < 0.0;
        return p;
    };

    std::vector<StationaryPoint> out;
    if (fit.degree == 2 || b3 == 0.0) {
        if (b2 != 0.0) out.push_back(make(-b1 / (2.0 * b2)));
        return out;
    }

    // Roots of 3 b3 t^2 + 2 b2 t + b1; the discriminant is 4 b2^2 - 12 b1 b3.
    const double disc = 4.0 * b2 * b2 - 12.0 * b1 * b3;
    if (!(disc > 0.0)) return out;
    const double a = 3.0 * b3, b = 2.0 * b2, c = b1;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = q != 0.0 ? c / q : -r1;
    auto polish = [&](double t) {
        const double f = (a * t + b) * t + c;
        const double df = 2.0 * a * t + b;
        return df != 0.0 ? t - f / df : t;
    };
    r1 = polish(r1);
    r2 = polish(r2);
    if (r1 > r2) std::swap(r1, r2);
    out.push_back(make(r1));
    out.push_back(make(r2));
    return out;
}

}  // namespace epicurve
