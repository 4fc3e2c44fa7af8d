// closed_solver.hpp: von Neumann evolution with a fourth-order Magnus integrator.
//
// Each step evaluates H at the two Gauss-Legendre nodes s0 + (1/2 -+ sqrt(3)/6) ds
// and forms
//     Omega = -i tau ds (H1 + H2)/2 - tau^2 ds^2 (sqrt(3)/12) [H2, H1].
// For H = hx sigma^x + hz sigma^z the commutator is proportional to sigma^y, so
// Omega = -i v.sigma and exp(Omega) is an SU(2) rotation in closed form.

#pragma once

#include <cmath>
#include <span>

#include "anneal/evolution.hpp"

namespace anneal {

// U = w I - i (x sigma^x + y sigma^y + z sigma^z), |U| = 1.
struct Su2 {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Su2 identity() noexcept { return {}; }

    // exp(-i v.sigma)
    static Su2 exp_minus_i(double vx, double vy, double vz) noexcept {
        const double n = std::sqrt(vx * vx + vy * vy + vz * vz);
        if (n == 0.0) return {};
        const double c = std::cos(n);
        const double f = std::sin(n) / n;
        return {c, f * vx, f * vy, f * vz};
    }

    // this * rhs
    Su2 operator*(const Su2& r) const noexcept {
        return {w * r.w - (x * r.x + y * r.y + z * r.z), w * r.x + r.w * x + (y * r.z - z * r.y),
                w * r.y + r.w * y + (z * r.x - x * r.z), w * r.z + r.w * z + (x * r.y - y * r.x)};
    }

    Matrix2c matrix() const;
};

// U rho U^dagger
DensityMatrix apply(const Su2& u, const DensityMatrix& rho);

namespace magnus {

inline constexpr double kNodeOffset = 0.28867513459481288225; // sqrt(3)/6
inline constexpr double kCommutatorWeight = 0.14433756729740644113; // sqrt(3)/12

template <HamiltonianFn F>
Su2 step_propagator(const F& ham, double tau, double s0, double ds) {
    const Hamiltonian2x2 h1 = ham(s0 + (0.5 - kNodeOffset) * ds);
    const Hamiltonian2x2 h2 = ham(s0 + (0.5 + kNodeOffset) * ds);
    const double dt = tau * ds;
    const double vx = 0.5 * dt * (h1.hx + h2.hx);
    const double vz = 0.5 * dt * (h1.hz + h2.hz);
    // [H2, H1] = (x2 z1 - z2 x1) [sigma^x, sigma^z] = -2i (x2 z1 - z2 x1) sigma^y
    const double vy = -2.0 * dt * dt * kCommutatorWeight * (h2.hx * h1.hz - h2.hz * h1.hx);
    return Su2::exp_minus_i(vx, vy, vz);
}

// Accumulates the propagator over consecutive grid points, left-multiplying
// onto `u`.
template <HamiltonianFn F>
Su2 propagate(const F& ham, double tau, std::span<const double> grid, Su2 u = Su2::identity()) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) u = step_propagator(ham, tau, grid[i], grid[i + 1] - grid[i]) * u;
    return u;
}

} // namespace magnus

// One Magnus-4 step of rho from s0 to s0 + ds.
DensityMatrix magnus4_step(const EvolutionSpec& spec, const DensityMatrix& rho, double s0, double ds);

// Evolves |+><+| from s = 0 to s_end on make_step_grid(s_end, spec.steps,
// h-gain kinks). The SU(2) propagator is accumulated and applied once.
DensityMatrix evolve_closed(const EvolutionSpec& spec, double s_end);

// Same grid, but applies magnus4_step to the density matrix at every step.
// Kept as the straightforward reference for the accumulated-propagator path.
DensityMatrix evolve_closed_reference(const EvolutionSpec& spec, double s_end);

// States at each requested sample point (the samples are forced onto the grid).
std::vector<DensityMatrix> closed_trajectory(const EvolutionSpec& spec, std::span<const double> samples);

} // namespace anneal
