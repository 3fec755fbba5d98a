// Residual history of V, W and FMG cycles on the 2D model problem.
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mgnets/mgsolve.hpp"

int main() {
    using namespace mgnets;
    const int n = 127;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const auto p = PoissonProblem::sampled(2, n, [pi2](double x, double y) {
        return 2 * pi2 * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    });
    const GridHierarchy H(2, n);
    SmootherConfig cfg;

    std::printf("cycle  %-12s %-12s %-12s\n", "V", "W", "FMG");
    const auto v = solve(H, p.rhs, CycleKind::V, cfg, 1e-300, 8).history;
    const auto w = solve(H, p.rhs, CycleKind::W, cfg, 1e-300, 8).history;
    const auto f = solve(H, p.rhs, CycleKind::FMG, cfg, 1e-300, 8).history;
    for (std::size_t c = 0; c < v.size(); ++c)
        std::printf("%5zu  %-12.4e %-12.4e %-12.4e\n", c, v[c].residual_l2, w[c].residual_l2, f[c].residual_l2);
    std::printf("work units after %zu cycles: V %.1f  W %.1f  FMG %.1f\n", v.size() - 1, v.back().work_units,
                w.back().work_units, f.back().work_units);
}
