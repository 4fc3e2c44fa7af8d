// evolution.hpp: pieces shared by the closed and open solvers: run
// specification, step grids and the schedule-driven Hamiltonian callable.

#pragma once

#include <concepts>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "anneal/density.hpp"
#include "anneal/hamiltonian.hpp"
#include "anneal/schedule.hpp"

namespace anneal {

template <class F>
concept HamiltonianFn = requires(const F& f, double s) {
    { f(s) } -> std::convertible_to<Hamiltonian2x2>;
};

struct EvolutionSpec {
    std::shared_ptr<const Schedule> schedule;
    std::optional<HGainProfile> profile; // none: k(s) = 1
    QubitParams qubit;
    double tau = 1e-6; // seconds
    int steps = 2000;

    void validate() const;
};

struct OpenEvolutionSpec {
    EvolutionSpec base; // base.steps sets the coherent (inner) resolution
    BathParams bath;
    int dissipator_steps = 0; // outer RK4 steps; 0 picks default_dissipator_steps

    void validate() const;
};

// H(s) for a given spec. Holds pointers into the spec, which must outlive it.
struct ScheduleHamiltonian {
    const Schedule* schedule;
    const HGainProfile* profile;
    QubitParams qubit;

    explicit ScheduleHamiltonian(const EvolutionSpec& spec)
        : schedule(spec.schedule.get()), profile(spec.profile ? &*spec.profile : nullptr), qubit(spec.qubit) {}
    ScheduleHamiltonian(const Schedule* sched, const HGainProfile* prof, const QubitParams& q)
        : schedule(sched), profile(prof), qubit(q) {}

    Hamiltonian2x2 operator()(double s) const { return build_hamiltonian(*schedule, profile, qubit, s); }
};

// k-th point of the uniform grid; every grid in the library uses this
// expression so that independently built grids agree bit for bit.
inline double uniform_point(double s_end, int k, int steps) noexcept {
    return s_end * static_cast<double>(k) / steps;
}

// Uniform grid k * s_end / steps, k = 0..steps, with the extra points
// (h-gain kinks, sample points) strictly inside (0, s_end) merged in.
std::vector<double> make_step_grid(double s_end, int steps, std::span<const double> extra = {});

// Kinks of the spec's h-gain profile, if any.
std::vector<double> profile_kinks(const EvolutionSpec& spec);

// max(2000, ceil(5 tau f_max)). Magnus-4 on this problem is converged to
// ~1e-6 in P(down) at 5 steps per period of the fastest schedule frequency;
// see the convergence tests before lowering it further.
inline constexpr double kStepsPerPeriod = 5.0;
int default_closed_steps(const Schedule& schedule, double tau);

// Outer step count of the open solver when none is given: min(base.steps,
// 2000). The dissipator only varies on bath and schedule scales.
inline constexpr int kDefaultDissipatorSteps = 2000;
int default_dissipator_steps(const OpenEvolutionSpec& spec);

} // namespace anneal
