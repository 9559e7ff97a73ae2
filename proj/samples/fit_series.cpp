// Fits one hand-written cumulative series and prints the selection outcome.

#include <cstdint>
#include <iostream>
#include <vector>

#include <fmt/format.h>

#include "epicurve/epicurve.hpp"

int main() {
    using namespace epicurve;
    const std::vector<std::int64_t> counts{12,  15,  21,  27,  38,  49,  66,  84,  109, 137, 170, 206,
                                           244, 290, 331, 378, 419, 457, 492, 520, 548, 569, 588, 603,
                                           616, 627, 636, 642, 648, 652, 655, 658, 660, 662, 663, 664};
    const CountSeries series("XX", "Example", {45.0, 9.0}, 1'000'000, ResponseKind::CumulativeCases,
                             Date{std::chrono::year{2020}, std::chrono::March, std::chrono::day{1}}, counts);

    const auto outcome = select(series, SelectionConfig{});
    const auto report = build_unit_report(series, outcome);
    std::cout << summary_line(report) << "\n";
    for (const auto& test : outcome.trail)
        std::cout << fmt::format("  {}: statistic {:.4g}, p {:.4g}\n", test.name, test.statistic, test.p_value);
    if (const auto* fit = std::get_if<LogisticFit>(&outcome.verdict))
        std::cout << fmt::format("  inflection at t = {:.2f}, 95% CI ({:.2f}, {:.2f})\n", fit->flex_time,
                                 fit->flex_ci.first, fit->flex_ci.second);
    return 0;
}
