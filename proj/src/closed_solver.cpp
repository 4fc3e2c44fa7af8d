#include "anneal/closed_solver.hpp"

#include <algorithm>

#include "anneal/errors.hpp"

namespace anneal {

Matrix2c Su2::matrix() const {
    using C = std::complex<double>;
    Matrix2c m;
    m(0, 0) = C(w, -z);
    m(0, 1) = C(-y, -x);
    m(1, 0) = C(y, -x);
    m(1, 1) = C(w, z);
    return m;
}

DensityMatrix apply(const Su2& u, const DensityMatrix& rho) {
    const Matrix2c m = u.matrix();
    return DensityMatrix(m * rho.matrix() * m.adjoint());
}

DensityMatrix magnus4_step(const EvolutionSpec& spec, const DensityMatrix& rho, double s0, double ds) {
    const ScheduleHamiltonian ham(spec);
    return apply(magnus::step_propagator(ham, spec.tau, s0, ds), rho);
}

DensityMatrix evolve_closed(const EvolutionSpec& spec, double s_end) {
    spec.validate();
    const auto kinks = profile_kinks(spec);
    const auto grid = make_step_grid(s_end, spec.steps, kinks);
    const ScheduleHamiltonian ham(spec);
    return apply(magnus::propagate(ham, spec.tau, grid), initial_state());
}

DensityMatrix evolve_closed_reference(const EvolutionSpec& spec, double s_end) {
    spec.validate();
    const auto kinks = profile_kinks(spec);
    const auto grid = make_step_grid(s_end, spec.steps, kinks);
    DensityMatrix rho = initial_state();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) rho = magnus4_step(spec, rho, grid[i], grid[i + 1] - grid[i]);
    return rho;
}

std::vector<DensityMatrix> closed_trajectory(const EvolutionSpec& spec, std::span<const double> samples) {
    spec.validate();
    if (samples.empty()) return {};
    std::vector<double> sorted(samples.begin(), samples.end());
    if (!std::is_sorted(sorted.begin(), sorted.end())) throw ValidationError("trajectory samples must be sorted");
    auto extra = profile_kinks(spec);
    extra.insert(extra.end(), sorted.begin(), sorted.end());
    const double s_end = sorted.back();
    const auto grid = make_step_grid(s_end, spec.steps, extra);
    const ScheduleHamiltonian ham(spec);

    std::vector<DensityMatrix> out;
    out.reserve(sorted.size());
    const DensityMatrix rho0 = initial_state();
    Su2 u;
    std::size_t next = 0;
    for (std::size_t i = 0; i < grid.size() && next < sorted.size(); ++i) {
        if (i > 0) u = magnus::step_propagator(ham, spec.tau, grid[i - 1], grid[i] - grid[i - 1]) * u;
        while (next < sorted.size() && sorted[next] == grid[i]) {
            out.push_back(apply(u, rho0));
            ++next;
        }
    }
    return out;
}

} // namespace anneal
