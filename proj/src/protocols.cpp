#include "anneal/protocols.hpp"

#include <omp.h>

#include <algorithm>
#include <climits>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "anneal/errors.hpp"
#include "text_util.hpp"

namespace anneal {

std::string_view model_tag(ModelKind m) {
    switch (m) {
    case ModelKind::closed_noiseless: return "closed-noiseless";
    case ModelKind::closed_noisy: return "closed-noisy";
    case ModelKind::open_noiseless: return "open-noiseless";
    case ModelKind::open_noisy: return "open-noisy";
    }
    return "?";
}

ModelKind parse_model(std::string_view tag) {
    for (ModelKind m : kAllModels)
        if (model_tag(m) == tag) return m;
    throw ValidationError("unknown model '" + std::string(tag) +
                          "' (closed-noiseless|closed-noisy|open-noiseless|open-noisy)");
}

void ModelConfig::validate(ModelKind model) const {
    if (!schedule) throw ValidationError("model config has no schedule");
    QubitParams{xi, 0.0, 0.0}.validate();
    if (is_open(model)) bath.validate();
    if (is_noisy(model)) noise.validate();
    if (quadrature_nodes < 1) throw ValidationError("quadrature_nodes must be >= 1");
    if (steps != 0 && steps < 2) throw ValidationError("steps must be 0 (automatic) or >= 2");
    if (dissipator_steps < 0) throw ValidationError("dissipator_steps must be >= 0");
}

int ModelConfig::steps_for(double tau) const { return steps > 0 ? steps : default_closed_steps(*schedule, tau); }

int ModelConfig::dissipator_steps_for(double tau) const {
    return dissipator_steps > 0 ? dissipator_steps : std::min(steps_for(tau), kDefaultDissipatorSteps);
}

std::vector<Member> ModelConfig::members(ModelKind model) const {
    if (!is_noisy(model)) return {{0.0, 1.0}};
    return mixture_members(noise, ensemble, quadrature_nodes);
}

int ModelConfig::realizations(ModelKind model) const {
    if (!is_noisy(model) || noise.sigma == 0.0) return 1;
    return ensemble == EnsembleMode::quadrature ? quadrature_nodes : noise.realizations;
}

namespace {

void check_values(const std::vector<double>& h_values, const std::vector<double>& tau_values) {
    if (h_values.empty()) throw ValidationError("grid has no h values");
    if (tau_values.empty()) throw ValidationError("grid has no tau values");
    for (double h : h_values)
        if (!(std::abs(h) <= 1.0)) throw ValidationError("h = " + detail::format_double(h) + " outside [-1, 1]");
    for (double t : tau_values)
        if (!(t > 0.0) || !std::isfinite(t))
            throw ValidationError("tau = " + detail::format_double(t) + " must be positive");
}

} // namespace

void SweepGrid::validate() const { check_values(h_values, tau_values); }

void StopGrid::validate() const {
    check_values(h_values, tau_values);
    if (s_stop_values.empty()) throw ValidationError("grid has no s_stop values");
    for (std::size_t i = 0; i < s_stop_values.size(); ++i) {
        const double s = s_stop_values[i];
        if (!(s > 0.0 && s <= 1.0)) throw ValidationError("s_stop = " + detail::format_double(s) + " outside (0, 1]");
        if (i > 0 && !(s > s_stop_values[i - 1])) throw ValidationError("s_stop values must be strictly ascending");
    }
    if (!(ramp_duration >= kMinRampDuration))
        throw ValidationError("ramp_duration = " + detail::format_double(ramp_duration) +
                              " s is below the 2 ns hardware floor");
    for (double t : tau_values)
        for (double s : s_stop_values) HGainProfile(s, ramp_duration, t); // ramp must fit before s_stop
}

std::vector<double> published_tau_values() {
    std::vector<double> out;
    for (int us : {1, 5, 10, 25, 50, 125}) out.push_back(us / 1e6);
    return out;
}

std::vector<double> published_sweep_h_values() {
    std::vector<double> out;
    for (int k = 1; k <= 40; ++k) out.push_back((25 * k) / 1000.0);
    return out;
}

std::vector<double> published_stop_h_values() { return {0.025, 0.05, 0.125, 0.25, 0.5}; }

std::vector<double> published_s_stop_values() {
    std::vector<double> out;
    for (int k = 1; k <= 49; ++k) out.push_back((2 * k) / 100.0);
    return out;
}

SweepGrid SweepGrid::published_default(ModelKind model) { return {published_sweep_h_values(), published_tau_values(), model}; }

StopGrid StopGrid::published_default(ModelKind model) {
    return {published_s_stop_values(), published_stop_h_values(), published_tau_values(), kDefaultRampDuration, model};
}

namespace {

// Where one h-stop run leaves the uniform grid of n steps on [0, 1].
struct StopPlan {
    HGainProfile profile;
    double a = 0.0;           // ramp start
    double b = 0.0;           // s_stop
    int i_a = 0;              // last uniform index with u <= a
    int j_b = 0;              // first uniform index with u >= b
    std::vector<double> ramp; // a, uniform points inside (a, b), b
};

std::vector<StopPlan> plan_stops(const std::vector<double>& s_stops, double ramp_duration, double tau, int n) {
    auto u = [n](int k) { return uniform_point(1.0, k, n); };
    std::vector<StopPlan> plans;
    plans.reserve(s_stops.size());
    for (double s : s_stops) {
        StopPlan p{HGainProfile(s, ramp_duration, tau), 0.0, 0.0, 0, 0, {}};
        p.a = p.profile.ramp_start();
        p.b = p.profile.s_stop();
        int i = std::clamp(static_cast<int>(std::floor(p.a * n)), 0, n);
        while (i < n && u(i + 1) <= p.a) ++i;
        while (i > 0 && u(i) > p.a) --i;
        p.i_a = i;
        int j = std::clamp(static_cast<int>(std::ceil(p.b * n)), 0, n);
        while (j > 0 && u(j - 1) >= p.b) --j;
        while (j < n && u(j) < p.b) ++j;
        p.j_b = j;
        p.ramp.push_back(p.a);
        for (int k = i + 1; k <= n && u(k) < p.b; ++k)
            if (u(k) > p.a) p.ramp.push_back(u(k));
        if (p.b > p.ramp.back()) p.ramp.push_back(p.b);
        plans.push_back(std::move(p));
    }
    return plans;
}

// Hamiltonian once the gate is closed: k = 0, so h drops out.
QubitParams stopped_qubit(double xi, double dz) { return {xi, 0.0, dz}; }

// ---- closed model ----------------------------------------------------------

std::vector<Su2> closed_suffixes(const Schedule& sched, const QubitParams& q0, double tau, int n,
                                 const std::vector<StopPlan>& plans) {
    const ScheduleHamiltonian ham(&sched, nullptr, q0);
    auto u = [n](int k) { return uniform_point(1.0, k, n); };
    std::vector<Su2> out(plans.size());
    int min_j = n;
    for (const auto& p : plans) min_j = std::min(min_j, p.j_b);
    std::vector<std::size_t> order(plans.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return plans[x].j_b > plans[y].j_b; });

    Su2 s; // propagator from u(j) to 1
    std::size_t next = 0;
    for (int j = n;; --j) {
        for (; next < order.size() && plans[order[next]].j_b == j; ++next) {
            const StopPlan& p = plans[order[next]];
            out[order[next]] = p.b < u(j) ? s * magnus::step_propagator(ham, tau, p.b, u(j) - p.b) : s;
        }
        if (j <= min_j) break;
        s = s * magnus::step_propagator(ham, tau, u(j - 1), u(j) - u(j - 1));
    }
    return out;
}

// States after each plan's stop for one h; `suffix` from closed_suffixes.
std::vector<DensityMatrix> closed_prefixes(const Schedule& sched, const QubitParams& q, double tau, int n,
                                           const std::vector<StopPlan>& plans, const std::vector<Su2>& suffix) {
    const ScheduleHamiltonian ham(&sched, nullptr, q);
    auto u = [n](int k) { return uniform_point(1.0, k, n); };
    const DensityMatrix rho0 = initial_state();
    std::vector<DensityMatrix> out;
    out.reserve(plans.size());
    Su2 pre;
    int i = 0;
    for (std::size_t k = 0; k < plans.size(); ++k) {
        const StopPlan& p = plans[k];
        for (; i < p.i_a; ++i) pre = magnus::step_propagator(ham, tau, u(i), u(i + 1) - u(i)) * pre;
        Su2 v = p.a > u(i) ? magnus::step_propagator(ham, tau, u(i), p.a - u(i)) * pre : pre;
        const ScheduleHamiltonian gated(&sched, &p.profile, q);
        v = magnus::propagate(gated, tau, p.ramp, v);
        out.push_back(apply(suffix[k] * v, rho0));
    }
    return out;
}

DensityMatrix closed_sweep(const Schedule& sched, const QubitParams& q, double tau, int n) {
    const ScheduleHamiltonian ham(&sched, nullptr, q);
    const auto grid = make_step_grid(1.0, n);
    return apply(magnus::propagate(ham, tau, grid), initial_state());
}

// ---- open model -------------------------------------------------------------

using Map4 = Eigen::Matrix4d; // acts on (t, x, y, z)

Map4 kernel_matrix(const interaction::StepKernel& k) {
    Map4 m;
    const BlochState basis[4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
    for (int c = 0; c < 4; ++c) {
        const BlochState y = k.apply(basis[c]);
        m(0, c) = y.t;
        m(1, c) = y.x;
        m(2, c) = y.y;
        m(3, c) = y.z;
    }
    return m;
}

BlochState apply_map(const Map4& m, const BlochState& y) {
    const Eigen::Vector4d v = m * Eigen::Vector4d(y.t, y.x, y.y, y.z);
    return {v[0], v[1], v[2], v[3]};
}

struct OpenGrid {
    int n;          // outer uniform steps
    double inner_ds;
};

std::vector<Map4> open_suffixes(const Schedule& sched, const QubitParams& q0, const BathParams& bath, double tau,
                                const OpenGrid& g, const std::vector<StopPlan>& plans) {
    const ScheduleHamiltonian ham(&sched, nullptr, q0);
    const int n = g.n;
    auto u = [n](int k) { return uniform_point(1.0, k, n); };
    auto kernel = [&](double s0, double s1) {
        const int sub = interaction::substeps_for(s1 - s0, g.inner_ds);
        return kernel_matrix(
            interaction::make_kernel(ham, bath, tau, s0, s1, sub, AmeGenerator::make(ham(s0), bath)));
    };
    std::vector<Map4> out(plans.size());
    int min_j = n;
    for (const auto& p : plans) min_j = std::min(min_j, p.j_b);
    std::vector<std::size_t> order(plans.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return plans[x].j_b > plans[y].j_b; });

    Map4 m = Map4::Identity(); // map from u(j) to 1
    std::size_t next = 0;
    for (int j = n;; --j) {
        for (; next < order.size() && plans[order[next]].j_b == j; ++next) {
            const StopPlan& p = plans[order[next]];
            out[order[next]] = p.b < u(j) ? Map4(m * kernel(p.b, u(j))) : m;
        }
        if (j <= min_j) break;
        m = m * kernel(u(j - 1), u(j));
        if (!m.allFinite()) rk4::throw_unstable(u(j - 1));
    }
    return out;
}

std::vector<DensityMatrix> open_prefixes(const Schedule& sched, const QubitParams& q, const BathParams& bath,
                                         double tau, const OpenGrid& g, const std::vector<StopPlan>& plans,
                                         const std::vector<Map4>& suffix) {
    const ScheduleHamiltonian ham(&sched, nullptr, q);
    const int n = g.n;
    auto u = [n](int k) { return uniform_point(1.0, k, n); };
    std::vector<DensityMatrix> out;
    out.reserve(plans.size());
    BlochState y = BlochState::from(initial_state());
    AmeGenerator gen = AmeGenerator::make(ham(0.0), bath);
    int i = 0;
    for (std::size_t k = 0; k < plans.size(); ++k) {
        const StopPlan& p = plans[k];
        for (; i < p.i_a; ++i) {
            y = interaction::step(ham, bath, tau, u(i), u(i + 1), interaction::substeps_for(u(i + 1) - u(i), g.inner_ds),
                                  y, gen);
            if (!(y.max_entry() <= 10.0)) rk4::throw_unstable(u(i + 1));
        }
        BlochState v = y;
        AmeGenerator gv = gen;
        if (p.a > u(i))
            v = interaction::step(ham, bath, tau, u(i), p.a, interaction::substeps_for(p.a - u(i), g.inner_ds), v, gv);
        const ScheduleHamiltonian gated(&sched, &p.profile, q);
        v = interaction::propagate(gated, bath, tau, p.ramp, g.inner_ds, v, gv);
        v = apply_map(suffix[k], v);
        if (!(v.max_entry() <= 10.0)) rk4::throw_unstable(1.0);
        out.push_back(v.to_density());
    }
    return out;
}

DensityMatrix open_sweep(const Schedule& sched, const QubitParams& q, const BathParams& bath, double tau,
                         const OpenGrid& g) {
    const ScheduleHamiltonian ham(&sched, nullptr, q);
    const auto grid = make_step_grid(1.0, g.n);
    AmeGenerator gen = AmeGenerator::make(ham(0.0), bath);
    return interaction::propagate(ham, bath, tau, grid, g.inner_ds, BlochState::from(initial_state()), gen)
        .to_density();
}

// ---- job bookkeeping --------------------------------------------------------

int thread_count(const RunOptions& o) { return o.jobs > 0 ? o.jobs : omp_get_max_threads(); }

// Runs body(i) for i in [0, n) in parallel; rethrows the failure with the
// lowest index, prefixed by describe(i).
template <class Body, class Describe>
void parallel_jobs(std::int64_t n, int threads, const Body& body, const Describe& describe) {
    std::int64_t failed = LLONG_MAX;
    std::string what;
    bool validation = false;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (const std::exception& e) {
            const bool is_validation = dynamic_cast<const ValidationError*>(&e) != nullptr;
#pragma omp critical(anneal_job_failure)
            if (i < failed) {
                failed = i;
                what = e.what();
                validation = is_validation;
            }
        }
    }
    if (failed == LLONG_MAX) return;
    const std::string msg = describe(failed) + ": " + what;
    if (validation) throw ValidationError(msg);
    throw SolverError(msg);
}

std::string coords(double tau, const double* h, const std::vector<Member>& members, std::size_t m) {
    std::string s = "tau = " + detail::format_double(tau);
    if (h) s += ", h = " + detail::format_double(*h);
    if (members.size() > 1)
        s += ", realization " + std::to_string(m) + " (dz = " + detail::format_double(members[m].delta_z) + ")";
    return s;
}

Matrix2c weighted_sum(const std::vector<Member>& members, const std::vector<DensityMatrix>& states,
                      std::size_t offset, std::size_t stride) {
    Matrix2c sum = Matrix2c::Zero();
    for (std::size_t m = 0; m < members.size(); ++m) sum += members[m].weight * states[offset + m * stride].matrix();
    return sum;
}

ResultRow make_row(ModelKind model, const ModelConfig& cfg, double tau, double h, std::optional<double> s_stop,
                   const Matrix2c& rho) {
    return {model, tau, h, s_stop, measure_down(DensityMatrix(rho)), cfg.realizations(model), cfg.noise.seed};
}

} // namespace

ResultTable run_h_sweep(const SweepGrid& grid, const ModelConfig& cfg, const RunOptions& opts) {
    grid.validate();
    cfg.validate(grid.model);
    const auto members = cfg.members(grid.model);
    const std::size_t nt = grid.tau_values.size(), nm = members.size(), nh = grid.h_values.size();
    const bool open = is_open(grid.model);

    // state index: (tau, h, member)
    std::vector<DensityMatrix> states(nt * nh * nm);
    auto body = [&](std::int64_t job) {
        const std::size_t m = job % nm, h = (job / nm) % nh, t = job / (nm * nh);
        const double tau = grid.tau_values[t];
        const QubitParams q{cfg.xi, grid.h_values[h], members[m].delta_z};
        const int n = cfg.steps_for(tau);
        states[job] = open ? open_sweep(*cfg.schedule, q, cfg.bath, tau, {cfg.dissipator_steps_for(tau), 1.0 / n})
                           : closed_sweep(*cfg.schedule, q, tau, n);
    };
    auto describe = [&](std::int64_t job) {
        const std::size_t m = job % nm, h = (job / nm) % nh, t = job / (nm * nh);
        return coords(grid.tau_values[t], &grid.h_values[h], members, m);
    };
    parallel_jobs(static_cast<std::int64_t>(states.size()), thread_count(opts), body, describe);

    ResultTable table;
    table.rows.reserve(nt * nh);
    for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t h = 0; h < nh; ++h)
            table.rows.push_back(make_row(grid.model, cfg, grid.tau_values[t], grid.h_values[h], std::nullopt,
                                          weighted_sum(members, states, (t * nh + h) * nm, 1)));
    return table;
}

ResultTable run_h_stop(const StopGrid& grid, const ModelConfig& cfg, const RunOptions& opts) {
    grid.validate();
    cfg.validate(grid.model);
    const auto members = cfg.members(grid.model);
    const std::size_t nt = grid.tau_values.size(), nm = members.size(), nh = grid.h_values.size();
    const std::size_t ns = grid.s_stop_values.size();
    const bool open = is_open(grid.model);
    const int threads = thread_count(opts);

    std::vector<std::vector<StopPlan>> plans(nt);
    std::vector<OpenGrid> open_grids(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const double tau = grid.tau_values[t];
        const int n = cfg.steps_for(tau);
        open_grids[t] = {cfg.dissipator_steps_for(tau), 1.0 / n};
        plans[t] = plan_stops(grid.s_stop_values, grid.ramp_duration, tau, open ? open_grids[t].n : n);
    }

    // Phase 1: post-stop maps per (tau, member).
    std::vector<std::vector<Su2>> closed_suffix(open ? 0 : nt * nm);
    std::vector<std::vector<Map4>> open_suffix(open ? nt * nm : 0);
    auto suffix_body = [&](std::int64_t job) {
        const std::size_t m = job % nm, t = job / nm;
        const double tau = grid.tau_values[t];
        const QubitParams q0 = stopped_qubit(cfg.xi, members[m].delta_z);
        if (open)
            open_suffix[job] = open_suffixes(*cfg.schedule, q0, cfg.bath, tau, open_grids[t], plans[t]);
        else
            closed_suffix[job] = closed_suffixes(*cfg.schedule, q0, tau, cfg.steps_for(tau), plans[t]);
    };
    auto suffix_describe = [&](std::int64_t job) {
        return coords(grid.tau_values[job / nm], nullptr, members, job % nm) + ", after the stop";
    };
    parallel_jobs(static_cast<std::int64_t>(nt * nm), threads, suffix_body, suffix_describe);

    // Phase 2: per (tau, h, member), all s_stop at once. state index:
    // ((tau, h, member), s_stop)
    std::vector<DensityMatrix> states(nt * nh * nm * ns);
    auto body = [&](std::int64_t job) {
        const std::size_t m = job % nm, h = (job / nm) % nh, t = job / (nm * nh);
        const double tau = grid.tau_values[t];
        const QubitParams q{cfg.xi, grid.h_values[h], members[m].delta_z};
        const std::vector<DensityMatrix> out =
            open ? open_prefixes(*cfg.schedule, q, cfg.bath, tau, open_grids[t], plans[t], open_suffix[t * nm + m])
                 : closed_prefixes(*cfg.schedule, q, tau, cfg.steps_for(tau), plans[t], closed_suffix[t * nm + m]);
        std::copy(out.begin(), out.end(), states.begin() + job * static_cast<std::int64_t>(ns));
    };
    auto describe = [&](std::int64_t job) {
        const std::size_t m = job % nm, h = (job / nm) % nh, t = job / (nm * nh);
        return coords(grid.tau_values[t], &grid.h_values[h], members, m);
    };
    parallel_jobs(static_cast<std::int64_t>(nt * nh * nm), threads, body, describe);

    ResultTable table;
    table.rows.reserve(nt * nh * ns);
    for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t h = 0; h < nh; ++h)
            for (std::size_t s = 0; s < ns; ++s)
                table.rows.push_back(make_row(grid.model, cfg, grid.tau_values[t], grid.h_values[h],
                                              grid.s_stop_values[s],
                                              weighted_sum(members, states, (t * nh + h) * nm * ns + s, ns)));
    return table;
}

namespace {

double reference_point(ModelKind model, const ModelConfig& cfg, const std::vector<Member>& members, double tau,
                       double h, std::optional<HGainProfile> profile) {
    EvolutionSpec spec{cfg.schedule, profile, QubitParams{cfg.xi, h, 0.0}, tau, cfg.steps_for(tau)};
    if (is_open(model)) {
        const OpenEvolutionSpec ospec{spec, cfg.bath, cfg.dissipator_steps_for(tau)};
        return run_members_serial(
                   members,
                   [&](double dz) {
                       OpenEvolutionSpec c = ospec;
                       c.base.qubit.delta_z = dz;
                       return evolve_open(c, 1.0);
                   },
                   false)
            .p_down;
    }
    return run_members_serial(
               members,
               [&](double dz) {
                   EvolutionSpec c = spec;
                   c.qubit.delta_z = dz;
                   return evolve_closed(c, 1.0);
               },
               false)
        .p_down;
}

} // namespace

ResultTable run_h_sweep_reference(const SweepGrid& grid, const ModelConfig& cfg) {
    grid.validate();
    cfg.validate(grid.model);
    const auto members = cfg.members(grid.model);
    ResultTable table;
    for (double tau : grid.tau_values)
        for (double h : grid.h_values) {
            const double p = reference_point(grid.model, cfg, members, tau, h, std::nullopt);
            table.rows.push_back({grid.model, tau, h, std::nullopt, p, cfg.realizations(grid.model), cfg.noise.seed});
        }
    return table;
}

ResultTable run_h_stop_reference(const StopGrid& grid, const ModelConfig& cfg) {
    grid.validate();
    cfg.validate(grid.model);
    const auto members = cfg.members(grid.model);
    ResultTable table;
    for (double tau : grid.tau_values)
        for (double h : grid.h_values)
            for (double s : grid.s_stop_values) {
                const double p =
                    reference_point(grid.model, cfg, members, tau, h, HGainProfile(s, grid.ramp_duration, tau));
                table.rows.push_back({grid.model, tau, h, s, p, cfg.realizations(grid.model), cfg.noise.seed});
            }
    return table;
}

} // namespace anneal
