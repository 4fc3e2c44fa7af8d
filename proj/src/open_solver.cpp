#include "anneal/open_solver.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <string>

namespace anneal {

Matrix2c ame_rhs_dt(const Hamiltonian2x2& h, const BathParams& bath, const Matrix2c& rho) {
    using namespace std::complex_literals;
    const Matrix2c hm = h.matrix();
    Matrix2c out = -1.0i * (hm * rho - rho * hm);
    const EigenSystem es = eigendecompose(h);
    for (const auto& ch : lindblad_operators(es, default_degeneracy_tol(h))) {
        const double rate = ohmic_rate(ch.omega, bath);
        if (rate == 0.0) continue;
        const Matrix2c ld = ch.op.adjoint();
        const Matrix2c ldl = ld * ch.op;
        out += rate * (ch.op * rho * ld - 0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

Matrix2c ame_rhs(const OpenEvolutionSpec& spec, const DensityMatrix& rho, double s) {
    const Hamiltonian2x2 h = build_hamiltonian(*spec.base.schedule, spec.base.profile, spec.base.qubit, s);
    return spec.base.tau * ame_rhs_dt(h, spec.bath, rho.matrix());
}

AmeGenerator AmeGenerator::make(const Hamiltonian2x2& h, const BathParams& bath) {
    AmeGenerator g;
    g.hx = h.hx;
    g.hz = h.hz;
    const double r = std::hypot(h.hx, h.hz);
    const double gap = 2.0 * r;
    const double pref = 2.0 * std::numbers::pi * bath.g2;
    const double dephasing = pref / bath.beta;
    if (gap < default_degeneracy_tol(h)) {
        g.collapsed = true;
        g.transverse = dephasing;
        return g;
    }
    g.nx = h.hx / r;
    g.nz = h.hz / r;
    if (bath.g2 == 0.0) return g;
    const double em1 = std::expm1(-bath.beta * gap);
    const double common = pref * gap * std::exp(-gap / bath.omega_c) / (-em1);
    const double emission = common * g.nx * g.nx;
    const double absorption = common * (em1 + 1.0) * g.nx * g.nx;
    g.relax = emission + absorption;
    g.drive = emission - absorption;
    g.transverse = 0.5 * g.relax + 2.0 * dephasing * g.nz * g.nz;
    return g;
}

namespace rk4 {
void throw_unstable(double s) {
    throw SolverError("open-system integration diverged near s = " + std::to_string(s) +
                      "; step size too large, increase the step count");
}
} // namespace rk4

OpenGrids make_open_grids(const OpenEvolutionSpec& spec, double s_end, std::span<const double> extra) {
    auto points = profile_kinks(spec.base);
    points.insert(points.end(), extra.begin(), extra.end());
    const int outer = spec.dissipator_steps > 0 ? spec.dissipator_steps : default_dissipator_steps(spec);
    return {make_step_grid(s_end, outer, points), s_end / spec.base.steps};
}

DensityMatrix evolve_open(const OpenEvolutionSpec& spec, double s_end) {
    spec.validate();
    const OpenGrids g = make_open_grids(spec, s_end);
    const ScheduleHamiltonian ham(spec.base);
    AmeGenerator gen = AmeGenerator::make(ham(0.0), spec.bath);
    const BlochState y = interaction::propagate(ham, spec.bath, spec.base.tau, g.outer, g.inner_ds,
                                                BlochState::from(initial_state()), gen);
    return y.to_density();
}

DensityMatrix evolve_open_labframe(const OpenEvolutionSpec& spec, double s_end) {
    spec.validate();
    const auto kinks = profile_kinks(spec.base);
    const auto grid = make_step_grid(s_end, spec.base.steps, kinks);
    const ScheduleHamiltonian ham(spec.base);
    const BlochState y = rk4::propagate(ham, spec.bath, spec.base.tau, grid, BlochState::from(initial_state()));
    return y.to_density();
}

DensityMatrix evolve_open_reference(const OpenEvolutionSpec& spec, double s_end) {
    spec.validate();
    const auto kinks = profile_kinks(spec.base);
    const auto grid = make_step_grid(s_end, spec.base.steps, kinks);
    Matrix2c rho = initial_state().matrix();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double s0 = grid[i];
        const double ds = grid[i + 1] - s0;
        auto f = [&](double s, const Matrix2c& r) { return ame_rhs(spec, DensityMatrix(r), s); };
        const Matrix2c k1 = f(s0, rho);
        const Matrix2c k2 = f(s0 + 0.5 * ds, rho + 0.5 * ds * k1);
        const Matrix2c k3 = f(s0 + 0.5 * ds, rho + 0.5 * ds * k2);
        const Matrix2c k4 = f(s0 + ds, rho + ds * k3);
        rho += (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        if (!(rho.cwiseAbs().maxCoeff() <= 10.0)) rk4::throw_unstable(grid[i + 1]);
    }
    return DensityMatrix(rho);
}

std::vector<DensityMatrix> open_trajectory(const OpenEvolutionSpec& spec, std::span<const double> samples) {
    spec.validate();
    if (samples.empty()) return {};
    std::vector<double> sorted(samples.begin(), samples.end());
    if (!std::is_sorted(sorted.begin(), sorted.end())) throw ValidationError("trajectory samples must be sorted");
    const OpenGrids g = make_open_grids(spec, sorted.back(), sorted);
    const ScheduleHamiltonian ham(spec.base);

    std::vector<DensityMatrix> out;
    out.reserve(sorted.size());
    BlochState y = BlochState::from(initial_state());
    AmeGenerator gen = AmeGenerator::make(ham(0.0), spec.bath);
    std::size_t next = 0;
    for (std::size_t i = 0; i < g.outer.size() && next < sorted.size(); ++i) {
        if (i > 0)
            y = interaction::propagate(ham, spec.bath, spec.base.tau, std::span(g.outer).subspan(i - 1, 2), g.inner_ds,
                                       y, gen);
        while (next < sorted.size() && sorted[next] == g.outer[i]) {
            out.push_back(y.to_density());
            ++next;
        }
    }
    return out;
}

} // namespace anneal
