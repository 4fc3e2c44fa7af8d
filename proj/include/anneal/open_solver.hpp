// open_solver.hpp: adiabatic master equation with an Ohmic bath, classic RK4.
//
// Two implementations of the same right-hand side live here:
//   * ame_rhs: assembles the dissipator from lindblad_operators() with dense
//     2x2 matrices. Straightforward and used as the reference.
//   * AmeGenerator / BlochState: the same generator written out in Bloch-vector
//     form. For H = r n.sigma the sigma^z coupling gives
//         emission   rate  gamma(2r)  |<E0|sz|E1>|^2 = gamma(2r)  n_x^2
//         absorption rate  gamma(-2r) n_x^2
//         dephasing  rate  gamma(0)   n_z^2 (operator n_z n.sigma)
//     so the parallel component relaxes at G1 = down + up toward
//     -(down - up)/G1 and the perpendicular components decay at
//     G2 = G1/2 + 2 gamma(0) n_z^2.
//
// evolve_open does not step the full generator with RK4 in the lab frame:
// that needs several steps per Larmor period although the dissipator itself
// is slow. It instead runs RK4 on the dissipator in the interaction picture
// of the Magnus-4 coherent propagator (see namespace interaction). The
// lab-frame RK4 paths are kept as references.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "anneal/closed_solver.hpp"
#include "anneal/errors.hpp"
#include "anneal/evolution.hpp"

namespace anneal {

// d rho / ds = tau (-i[H, rho] + sum_w gamma(w) (L rho L^+ - {L^+ L, rho}/2))
Matrix2c ame_rhs(const OpenEvolutionSpec& spec, const DensityMatrix& rho, double s);

// Same, for an arbitrary Hamiltonian at one instant; returns d rho / dt.
Matrix2c ame_rhs_dt(const Hamiltonian2x2& h, const BathParams& bath, const Matrix2c& rho);

// rho = (t I + x sigma^x + y sigma^y + z sigma^z)/2. t is carried explicitly so
// trace drift stays observable.
struct BlochState {
    double t = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static BlochState from(const DensityMatrix& rho) {
        return {rho.trace(), rho.expectation_x(), rho.expectation_y(), rho.expectation_z()};
    }
    DensityMatrix to_density() const { return DensityMatrix::from_bloch(t, x, y, z); }
    double p_down() const { return 0.5 * (t - z); }
    double max_entry() const { return 0.5 * std::max(std::abs(t) + std::abs(z), std::hypot(x, y)); }
};

struct AmeGenerator {
    double hx = 0.0;
    double hz = 0.0;
    double nx = 0.0;         // unit field direction (x, 0, z)
    double nz = 1.0;
    double relax = 0.0;      // G1
    double drive = 0.0;      // down - up
    double transverse = 0.0; // G2, or the sigma^z dephasing rate when collapsed
    bool collapsed = false;  // near-degenerate: single omega = 0 channel, L = sigma^z

    static AmeGenerator make(const Hamiltonian2x2& h, const BathParams& bath);

    // d/dt of the state from -i[H, rho] alone, in 1/s.
    BlochState coherent(const BlochState& v) const noexcept {
        return {0.0, -2.0 * hz * v.y, 2.0 * (hz * v.x - hx * v.z), 2.0 * hx * v.y};
    }

    // d/dt of the state from the dissipator alone, in 1/s.
    BlochState dissipative(const BlochState& v) const noexcept {
        if (collapsed) return {0.0, -2.0 * transverse * v.x, -2.0 * transverse * v.y, 0.0};
        const double par = nx * v.x + nz * v.z;
        const double along = -relax * par - drive * v.t + transverse * par;
        return {0.0, along * nx - transverse * v.x, -transverse * v.y, along * nz - transverse * v.z};
    }

    BlochState derivative(const BlochState& v) const noexcept {
        const BlochState c = coherent(v);
        const BlochState d = dissipative(v);
        return {0.0, c.x + d.x, c.y + d.y, c.z + d.z};
    }
};

namespace rk4 {

inline BlochState axpy(const BlochState& y, double a, const BlochState& k) noexcept {
    return {y.t + a * k.t, y.x + a * k.x, y.y + a * k.y, y.z + a * k.z};
}

// One classic RK4 step of length dt given the generators at the step start,
// midpoint and end.
inline BlochState step(const AmeGenerator& g0, const AmeGenerator& gm, const AmeGenerator& g1, const BlochState& y,
                       double dt) noexcept {
    const BlochState k1 = g0.derivative(y);
    const BlochState k2 = gm.derivative(axpy(y, 0.5 * dt, k1));
    const BlochState k3 = gm.derivative(axpy(y, 0.5 * dt, k2));
    const BlochState k4 = g1.derivative(axpy(y, dt, k3));
    const double c = dt / 6.0;
    return {y.t + c * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t), y.x + c * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            y.y + c * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y), y.z + c * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)};
}

[[noreturn]] void throw_unstable(double s);

// Integrates over consecutive grid points. `g_start` is the generator at
// grid.front(); on return it holds the generator at grid.back(), so a caller
// can continue from there with identical arithmetic.
template <HamiltonianFn F>
BlochState propagate(const F& ham, const BathParams& bath, double tau, std::span<const double> grid, BlochState y,
                     AmeGenerator& g_start) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double s0 = grid[i];
        const double ds = grid[i + 1] - s0;
        const AmeGenerator gm = AmeGenerator::make(ham(s0 + 0.5 * ds), bath);
        const AmeGenerator g1 = AmeGenerator::make(ham(grid[i + 1]), bath);
        y = step(g_start, gm, g1, y, tau * ds);
        g_start = g1;
        if (!(y.max_entry() <= 10.0)) throw_unstable(grid[i + 1]);
    }
    return y;
}

template <HamiltonianFn F>
BlochState propagate(const F& ham, const BathParams& bath, double tau, std::span<const double> grid, BlochState y) {
    AmeGenerator g = AmeGenerator::make(ham(grid.front()), bath);
    return propagate(ham, bath, tau, grid, y, g);
}

} // namespace rk4

// Rotation of the Bloch vector induced by rho -> U rho U^dagger.
struct BlochRotation {
    double m[3][3] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};

    BlochRotation() = default;
    explicit BlochRotation(const Su2& u) noexcept {
        const double w = u.w, x = u.x, y = u.y, z = u.z;
        m[0][0] = 1.0 - 2.0 * (y * y + z * z);
        m[0][1] = 2.0 * (x * y - w * z);
        m[0][2] = 2.0 * (x * z + w * y);
        m[1][0] = 2.0 * (x * y + w * z);
        m[1][1] = 1.0 - 2.0 * (x * x + z * z);
        m[1][2] = 2.0 * (y * z - w * x);
        m[2][0] = 2.0 * (x * z - w * y);
        m[2][1] = 2.0 * (y * z + w * x);
        m[2][2] = 1.0 - 2.0 * (x * x + y * y);
    }

    BlochState apply(const BlochState& v) const noexcept {
        return {v.t, m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    BlochState apply_transpose(const BlochState& v) const noexcept {
        return {v.t, m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z, m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
                m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
    }
};

// RK4 in the interaction picture of the coherent motion. Over one outer step
// [s0, s1] the unitary part is propagated exactly (to Magnus-4 accuracy) on
// `substeps` inner steps; only the dissipator, seen from the rotating frame,
// is integrated with RK4. The dissipator varies on the slow bath and
// schedule scales, so outer steps can be far longer than a Larmor period.
namespace interaction {

// Inner step count for an outer step of length `len` given the inner
// spacing; always even so the outer midpoint is an inner grid point.
inline int substeps_for(double len, double inner_ds) noexcept {
    const double half = std::ceil(len / (2.0 * inner_ds) - 1e-9);
    return 2 * std::max(1, static_cast<int>(half));
}

// Everything one outer step needs, so the same step can be applied to
// several states (the step is linear in (t, x, y, z)).
struct StepKernel {
    AmeGenerator g0, gm, g1;
    BlochRotation rm, r1;
    double dt = 0.0;

    BlochState apply(const BlochState& y) const noexcept {
        const BlochState k1 = g0.dissipative(y);
        const BlochState k2 = rm.apply_transpose(gm.dissipative(rm.apply(rk4::axpy(y, 0.5 * dt, k1))));
        const BlochState k3 = rm.apply_transpose(gm.dissipative(rm.apply(rk4::axpy(y, 0.5 * dt, k2))));
        const BlochState k4 = r1.apply_transpose(g1.dissipative(r1.apply(rk4::axpy(y, dt, k3))));
        const double c = dt / 6.0;
        const BlochState yi{y.t, y.x + c * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                            y.y + c * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
                            y.z + c * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)};
        return r1.apply(yi);
    }
};

// `g0` is the generator at s0.
template <HamiltonianFn F>
StepKernel make_kernel(const F& ham, const BathParams& bath, double tau, double s0, double s1, int substeps,
                       const AmeGenerator& g0) {
    const double ds = (s1 - s0) / substeps;
    const int half = substeps / 2;
    StepKernel k;
    k.g0 = g0;
    Su2 u;
    for (int j = 0; j < half; ++j) u = magnus::step_propagator(ham, tau, s0 + j * ds, ds) * u;
    k.rm = BlochRotation(u);
    const double sm = s0 + half * ds;
    for (int j = half; j < substeps; ++j) u = magnus::step_propagator(ham, tau, s0 + j * ds, ds) * u;
    k.r1 = BlochRotation(u);
    k.gm = AmeGenerator::make(ham(sm), bath);
    k.g1 = AmeGenerator::make(ham(s1), bath);
    k.dt = tau * (s1 - s0);
    return k;
}

template <HamiltonianFn F>
BlochState step(const F& ham, const BathParams& bath, double tau, double s0, double s1, int substeps,
                const BlochState& y, AmeGenerator& g0) {
    const StepKernel k = make_kernel(ham, bath, tau, s0, s1, substeps, g0);
    g0 = k.g1;
    return k.apply(y);
}

// Same contract as rk4::propagate: `g_start` enters as the generator at
// outer.front() and leaves as the generator at outer.back().
template <HamiltonianFn F>
BlochState propagate(const F& ham, const BathParams& bath, double tau, std::span<const double> outer, double inner_ds,
                     BlochState y, AmeGenerator& g_start) {
    for (std::size_t i = 0; i + 1 < outer.size(); ++i) {
        const int n = substeps_for(outer[i + 1] - outer[i], inner_ds);
        y = step(ham, bath, tau, outer[i], outer[i + 1], n, y, g_start);
        if (!(y.max_entry() <= 10.0)) rk4::throw_unstable(outer[i + 1]);
    }
    return y;
}

} // namespace interaction

// Outer (dissipator) and inner (coherent) grids for an open run to s_end.
struct OpenGrids {
    std::vector<double> outer;
    double inner_ds;
};
OpenGrids make_open_grids(const OpenEvolutionSpec& spec, double s_end, std::span<const double> extra = {});

// Evolves |+><+| from 0 to s_end with the interaction-picture scheme: outer
// grid make_step_grid(s_end, dissipator steps, h-gain kinks), inner spacing
// s_end / spec.base.steps. No trace renormalization. Throws SolverError when
// any density-matrix entry exceeds 10 in magnitude.
DensityMatrix evolve_open(const OpenEvolutionSpec& spec, double s_end);

// Lab-frame RK4 on the Bloch-form generator over make_step_grid(s_end,
// spec.base.steps, kinks); must resolve every Larmor period.
DensityMatrix evolve_open_labframe(const OpenEvolutionSpec& spec, double s_end);

// RK4 on the dense ame_rhs with (rho + rho^dagger)/2 after each step, on the
// same grid as evolve_open_labframe.
DensityMatrix evolve_open_reference(const OpenEvolutionSpec& spec, double s_end);

std::vector<DensityMatrix> open_trajectory(const OpenEvolutionSpec& spec, std::span<const double> samples);

} // namespace anneal
