#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "epicurve/logistic_model.hpp"
#include "support/likelihoods.hpp"
#include "support/oracle.hpp"
#include "support/simulate.hpp"

using namespace epicurve;
using Catch::Approx;

namespace {

double oracle_logistic(const CountSeries& s) {
    // Black-box search over (logit K, b0, b1) from a crude start.
    auto f = [&](const Eigen::VectorXd& x) {
        return oracle::logistic_loglik(s, 1.0 / (1.0 + std::exp(-x[0])), x[1], x[2]);
    };
    const double max_rate = double(s.max_count()) / double(s.population());
    Eigen::VectorXd x0(3);
    x0 << std::log(max_rate / (1 - max_rate)), -2.0, 0.1;
    return oracle::maximize(f, x0, true).value;
}

LogisticFit fixed_fit(double k, double b0, double b1) {
    LogisticFit f;
    f.gamma = logit(k);
    f.beta0 = b0;
    f.beta1 = b1;
    f.converged = true;
    return f;
}

}  // namespace

TEST_CASE("Noiseless logistic parameters are recovered", "[logistic_model]") {
    const auto s = sim::noiseless_logistic(0.01, -5, 0.25, 10'000'000, 59);
    const auto fit = fit_logistic(s);
    REQUIRE(fit.converged);
    REQUIRE(fit.K() == Approx(0.01).epsilon(0.01));
    REQUIRE(fit.beta0 == Approx(-5.0).epsilon(0.01));
    REQUIRE(fit.beta1 == Approx(0.25).epsilon(0.01));
    REQUIRE(std::abs(fit.log_likelihood - oracle_logistic(s)) <= 1e-6);
    REQUIRE(fit.K() == expit(fit.gamma));
    REQUIRE(fit.flex_time == Approx(20.0).epsilon(0.01));
}

TEST_CASE("Simulated logistic fit agrees with the black-box maximizer", "[logistic_model]") {
    std::mt19937_64 rng(5);
    const auto s = sim::poisson_logistic(0.002, -4, 0.2, 1'000'000, 45, rng);
    const auto fit = fit_logistic(s);
    REQUIRE(fit.converged);
    REQUIRE(std::abs(fit.log_likelihood - oracle_logistic(s)) <= 1e-6);
    REQUIRE(fit.gradient_norm <= 1e-6 * (1 + std::abs(fit.log_likelihood)));
    REQUIRE(fit.flex_ci.first <= fit.flex_time);
    REQUIRE(fit.flex_time <= fit.flex_ci.second);
}

TEST_CASE("Unbent exponential growth leaves the plateau unidentified", "[logistic_model]") {
    std::mt19937_64 rng(9);
    // Far from the inflection: h ~ K exp(b0 + b1 t) throughout.
    const auto s = sim::poisson_logistic(0.05, -12, 0.12, 1'000'000, 30, rng);
    const auto fit = fit_logistic(s);
    if (fit.converged) REQUIRE(fit.flex_ci.second > double(s.last_t()));
}

TEST_CASE("Logistic preconditions", "[logistic_model]") {
    REQUIRE_THROWS_AS(fit_logistic(sim::make_series({10, 20, 30, 40}, 1000)), SeriesTooShort);
    REQUIRE_THROWS_AS(fit_logistic(sim::make_series({10, 20, 30, 40, 50}, 1000, ResponseKind::CurrentICU)),
                      NotCumulative);
}

TEST_CASE("Inflection point and its delta-method interval", "[logistic_model]") {
    auto fit = fixed_fit(0.01, -5, 0.25);
    fit.covariance = Eigen::Vector3d(1, 0.04, 0.0001).asDiagonal();
    const auto inf = inflection(fit);
    REQUIRE(inf.flex == Approx(20.0).epsilon(1e-15));
    REQUIRE(inf.standard_error == Approx(std::sqrt(1.28)).epsilon(1e-14));
    REQUIRE(inf.ci.first == Approx(17.7825538635496).epsilon(1e-9));
    REQUIRE(inf.ci.second == Approx(22.2174461364504).epsilon(1e-9));

    fit.beta1 = 0;
    REQUIRE_THROWS_AS(inflection(fit), DegenerateSlope);
    fit.beta1 = 0.25;
    fit.converged = false;
    REQUIRE_THROWS_AS(inflection(fit), NotConverged);
}

TEST_CASE("Logistic slope and curvature", "[logistic_model]") {
    const auto fit = fixed_fit(0.01, -5, 0.25);
    const auto at_flex = logistic_derivatives(fit, 20.0);
    REQUIRE(at_flex.slope == Approx(0.01 * 0.25 / 4).epsilon(1e-12));
    REQUIRE(at_flex.curvature == Approx(0.0).margin(1e-18));
    // 0.01 * 0.25 * e^-5 / (1 + e^-5)^2
    REQUIRE(logistic_derivatives(fit, 0.0).slope == Approx(1.66201416769754e-5).epsilon(1e-10));

    auto not_conv = fit;
    not_conv.converged = false;
    REQUIRE_THROWS_AS(logistic_derivatives(not_conv, 0.0), NotConverged);
}

TEST_CASE("Logistic derivatives match finite differences of the hazard", "[logistic_model]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 20; ++i) {
        const auto fit = fixed_fit(0.001 + 0.5 * u(rng), -8 + 6 * u(rng), 0.05 + 0.4 * u(rng));
        const long double t = 60 * u(rng);
        auto h = [&](long double x) { return fit.K() / (1 + std::exp(-(fit.beta0 + fit.beta1 * x))); };
        // Five-point stencil in extended precision.
        const long double step = 1e-2L;
        const long double fd_slope = (h(t - 2 * step) - 8 * h(t - step) + 8 * h(t + step) - h(t + 2 * step)) / (12 * step);
        const auto d = logistic_derivatives(fit, static_cast<double>(t));
        REQUIRE(std::abs(d.slope - fd_slope) <= 1e-6L * std::abs(d.slope));
    }
}

TEST_CASE("Logistic hazard shape invariants", "[logistic_model]") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 50; ++i) {
        const auto fit = fixed_fit(0.001 + 0.9 * u(rng), -8 + 6 * u(rng), 0.05 + 0.4 * u(rng));
        const double flex = -fit.beta0 / fit.beta1;
        double prev = 0;
        for (double t = 0; t <= 80; t += 0.5) {
            const double h = fit.hazard(t);
            REQUIRE(h > 0);
            REQUIRE(h < fit.K());
            REQUIRE(h >= prev);
            prev = h;
            const auto d = logistic_derivatives(fit, t);
            if (t < flex - 1e-6) REQUIRE(d.curvature > 0);
            if (t > flex + 1e-6) REQUIRE(d.curvature < 0);
        }
    }
}
