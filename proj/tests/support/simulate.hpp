#pragma once

// Synthetic count series for tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epicurve/domain.hpp"

namespace sim {

inline epicurve::Date day0() {
    return epicurve::Date{std::chrono::year{2020}, std::chrono::February, std::chrono::day{24}};
}

inline epicurve::CountSeries make_series(std::vector<std::int64_t> counts, std::int64_t population,
                                         epicurve::ResponseKind kind = epicurve::ResponseKind::CumulativeCases,
                                         std::string id = "U") {
    return epicurve::CountSeries(id, "Unit " + id, {45.0, 9.0}, population, kind, day0(), std::move(counts));
}

// Y_t ~ Poisson(N exp(sum_k beta_k t^k)), t = 0..last_t.
inline epicurve::CountSeries poisson_poly(const Eigen::VectorXd& beta, std::int64_t population, int last_t,
                                          std::mt19937_64& rng,
                                          epicurve::ResponseKind kind = epicurve::ResponseKind::CurrentICU) {
    std::vector<std::int64_t> counts;
    for (int t = 0; t <= last_t; ++t) {
        double eta = 0;
        for (Eigen::Index k = beta.size() - 1; k >= 0; --k) eta = eta * t + beta[k];
        std::poisson_distribution<std::int64_t> draw(static_cast<double>(population) * std::exp(eta));
        counts.push_back(draw(rng));
    }
    return make_series(std::move(counts), population, kind);
}

inline double logistic_mean(double n, double k, double b0, double b1, double t) {
    return n * k / (1.0 + std::exp(-(b0 + b1 * t)));
}

// Y_t ~ Poisson(N K expit(b0 + b1 t)), t = 0..last_t, cumulative response.
inline epicurve::CountSeries poisson_logistic(double k, double b0, double b1, std::int64_t population, int last_t,
                                              std::mt19937_64& rng) {
    std::vector<std::int64_t> counts;
    for (int t = 0; t <= last_t; ++t) {
        std::poisson_distribution<std::int64_t> draw(logistic_mean(static_cast<double>(population), k, b0, b1, t));
        counts.push_back(draw(rng));
    }
    return make_series(std::move(counts), population);
}

inline epicurve::CountSeries noiseless_logistic(double k, double b0, double b1, std::int64_t population,
                                                int last_t) {
    std::vector<std::int64_t> counts;
    for (int t = 0; t <= last_t; ++t)
        counts.push_back(std::llround(logistic_mean(static_cast<double>(population), k, b0, b1, t)));
    return make_series(std::move(counts), population);
}

}  // namespace sim
