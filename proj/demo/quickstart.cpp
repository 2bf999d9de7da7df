// Solve dY = 0.5 Y dB over one Stratonovich Brownian path, compare with
// exp(0.5 B_t), then integrate B against itself in both calculi.

#include <roughpath.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

using namespace roughpath;

int main() {
    const std::size_t n = 1024;
    const DriverSample ds = simulate_driver(1, n, 1.0, 16, 2024, 0, Enhancement::Strat);

    const RDEPreset gbm = rde_preset("gbm-strat");
    const RDESolution sol = gbm.solve(gbm.problem(ds.driver));
    double worst = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double exact = gbm.exact(ds.driver.grid()[k], ds.driver.path().value(k)[0]);
        worst = std::max(worst, std::abs(sol.state(k)[0] - exact));
    }
    std::printf("gbm-strat: Y_1 = %.6f, sup error vs closed form %.2e\n", sol.terminal()[0], worst);

    const RoughPath ito = ito_enhance(ds.fine, ds.driver.grid());
    const auto b = ControlledPath::from_nodes(
        ito.grid(), 1, 1, [&](std::size_t k) { return Vec{ito.path().value(k)[0]}; }, [](std::size_t) { return Mat{{1.0}}; });
    const double bt = ito.path().value(n)[0];
    std::printf("int B dB (Ito)   = %.6f, B_1^2/2 = %.6f, bracket = %.6f\n", rough_integral(b, ito, 0, n).value[0], 0.5 * bt * bt,
                bracket_one_param(ito, n)(0, 0));
    return 0;
}
