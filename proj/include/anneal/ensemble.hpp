// ensemble.hpp: static longitudinal-field noise: dz ~ N(mu, sigma), fixed
// within one anneal, resampled across anneals. The mixture state is the
// average of the per-anneal density matrices.

#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "anneal/closed_solver.hpp"
#include "anneal/open_solver.hpp"

namespace anneal {

// stratified: realization i draws from the i-th of N equal-probability
// strata of the Gaussian and the upper half mirrors the lower half about mu
// (antithetic pairs), so the sample set is exactly symmetric. iid: plain
// independent draws. Both are pure functions of (seed, index, N).
enum class SamplingScheme { stratified, iid };

struct NoiseParams {
    double mu = 0.0;
    double sigma = 0.0;
    int realizations = 1000;
    std::uint64_t seed = 0;
    SamplingScheme scheme = SamplingScheme::stratified;

    void validate() const;
};

std::string_view scheme_name(SamplingScheme s);
SamplingScheme parse_scheme(std::string_view name);

// Counter-based uniform in (0,1): a splitmix64 finalizer over (seed, index).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

double sample_delta_z(const NoiseParams& noise, std::int64_t index);

// Nodes and weights integrating against the standard normal density
// (probabilists' Hermite), weights summing to 1, nodes symmetric about 0.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline constexpr int kDefaultQuadratureNodes = 41;
// Nodes whose weight falls below this are dropped; for 41 nodes this keeps
// 29 and discards 2.5e-14 of probability mass.
inline constexpr double kQuadraturePruneWeight = 1e-12;

QuadratureRule gauss_hermite_normal(int n, double prune_below = 0.0);

enum class EnsembleMode { monte_carlo, quadrature };

// One mixture component: realized field offset and its weight.
struct Member {
    double delta_z;
    double weight;
};

// Members of the mixture. sigma = 0 collapses to a single member at mu,
// which reproduces the noiseless run exactly.
std::vector<Member> mixture_members(const NoiseParams& noise, EnsembleMode mode,
                                    int quadrature_nodes = kDefaultQuadratureNodes);

struct MixtureResult {
    DensityMatrix rho_avg;
    double p_down = 0.0;
    std::vector<double> per_realization_p; // filled on request
    std::vector<double> delta_z;           // filled on request
};

struct MixtureOptions {
    EnsembleMode mode = EnsembleMode::monte_carlo;
    int quadrature_nodes = kDefaultQuadratureNodes;
    bool keep_members = false;
    int jobs = 0; // <= 0: OpenMP default
};

using MemberEvolver = std::function<DensityMatrix(double delta_z)>;

// Evaluates every member in parallel, then reduces in member order, so the
// result does not depend on the thread count. A failing member aborts the
// mixture with a SolverError naming the lowest failing index.
MixtureResult run_members(const std::vector<Member>& members, const MemberEvolver& evolve, bool keep_members, int jobs);

// Same reduction, members evaluated one after another.
MixtureResult run_members_serial(const std::vector<Member>& members, const MemberEvolver& evolve, bool keep_members);

// spec.qubit.delta_z is overwritten by each member's sample.
MixtureResult run_mixture(const EvolutionSpec& spec, const NoiseParams& noise, double s_end,
                          const MixtureOptions& opts = {});
MixtureResult run_mixture(const OpenEvolutionSpec& spec, const NoiseParams& noise, double s_end,
                          const MixtureOptions& opts = {});
MixtureResult run_mixture_serial(const EvolutionSpec& spec, const NoiseParams& noise, double s_end,
                                 const MixtureOptions& opts = {});
MixtureResult run_mixture_serial(const OpenEvolutionSpec& spec, const NoiseParams& noise, double s_end,
                                 const MixtureOptions& opts = {});

} // namespace anneal
