#include "anneal/ensemble.hpp"

#include <omp.h>

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>
#include <type_traits>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>

#include "anneal/errors.hpp"
#include "text_util.hpp"

namespace anneal {

void NoiseParams::validate() const {
    if (!std::isfinite(mu)) throw ValidationError("noise mean must be finite");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("noise sigma must be finite and >= 0");
    if (realizations < 1) throw ValidationError("realizations must be >= 1");
}

std::string_view scheme_name(SamplingScheme s) { return s == SamplingScheme::iid ? "iid" : "stratified"; }

SamplingScheme parse_scheme(std::string_view name) {
    if (name == "stratified") return SamplingScheme::stratified;
    if (name == "iid") return SamplingScheme::iid;
    throw ValidationError("unknown sampling scheme '" + std::string(name) + "' (stratified|iid)");
}

namespace {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Standard normal quantile; erfc_inv keeps full relative accuracy in the tails.
double normal_quantile(double u) {
    if (u < 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - u));
}

double standard_variate(const NoiseParams& noise, std::int64_t index) {
    const auto i = static_cast<std::uint64_t>(index);
    if (noise.scheme == SamplingScheme::iid) return normal_quantile(counter_uniform(noise.seed, 0, i));
    const std::int64_t n = noise.realizations;
    const std::int64_t half = n / 2;
    if (index >= n - half) return -standard_variate(noise, n - 1 - index); // mirror of the lower half
    if (index >= half) return 0.0;                                          // odd N: the median stratum
    const double u = (static_cast<double>(index) + counter_uniform(noise.seed, 1, i)) / static_cast<double>(n);
    return normal_quantile(u);
}

} // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const std::uint64_t key = mix64(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    const std::uint64_t bits = mix64(key + 0x9e3779b97f4a7c15ULL * (index + 1));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double sample_delta_z(const NoiseParams& noise, std::int64_t index) {
    noise.validate();
    if (index < 0 || index >= noise.realizations)
        throw ValidationError("realization index " + std::to_string(index) + " out of range");
    if (noise.sigma == 0.0) return noise.mu;
    return noise.mu + noise.sigma * standard_variate(noise, index);
}

QuadratureRule gauss_hermite_normal(int n, double prune_below) {
    if (n < 1) throw ValidationError("quadrature needs at least one node");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // polynomials, then Newton polish and Christoffel weights
    // w = 1 / sum_k p_k(x)^2 with orthonormal p_k.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac, Eigen::EigenvaluesOnly);
    std::vector<double> x(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
    std::vector<double> w(static_cast<std::size_t>(n));

    auto orthonormal = [n](double t, double& pn, double& dpn, double& sumsq) {
        double pm = 0.0, p = 1.0, dpm = 0.0, dp = 0.0;
        sumsq = 1.0;
        for (int k = 0; k < n; ++k) {
            const double a = std::sqrt(static_cast<double>(k + 1));
            const double b = std::sqrt(static_cast<double>(k));
            const double pnext = (t * p - b * pm) / a;
            const double dnext = (p + t * dp - b * dpm) / a;
            pm = p;
            p = pnext;
            dpm = dp;
            dp = dnext;
            if (k + 1 < n) sumsq += p * p;
        }
        pn = p;
        dpn = dp;
    };
    for (int i = 0; i < n; ++i) {
        double pn, dpn, sumsq;
        for (int it = 0; it < 3; ++it) {
            orthonormal(x[i], pn, dpn, sumsq);
            if (dpn != 0.0) x[i] -= pn / dpn;
        }
        orthonormal(x[i], pn, dpn, sumsq);
        w[i] = 1.0 / sumsq;
    }
    std::sort(x.begin(), x.end()); // weights depend only on |x|, recomputed below
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double node = 0.5 * (x[j] - x[i]);
        x[i] = -node;
        x[j] = node;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    for (int i = 0; i < n; ++i) {
        double pn, dpn, sumsq;
        orthonormal(std::abs(x[i]), pn, dpn, sumsq);
        w[i] = 1.0 / sumsq;
    }

    QuadratureRule rule;
    double total = 0.0;
    for (double v : w) total += v;
    const double cut = prune_below * total;
    for (int i = 0; i < n; ++i) {
        if (w[i] < cut) continue;
        rule.nodes.push_back(x[i]);
        rule.weights.push_back(w[i]);
    }
    // Normalize, summing symmetric pairs so both halves see the same total.
    double kept = 0.0;
    const std::size_t m = rule.weights.size();
    for (std::size_t i = 0; i < m / 2; ++i) kept += rule.weights[i] + rule.weights[m - 1 - i];
    if (m % 2 == 1) kept += rule.weights[m / 2];
    for (double& v : rule.weights) v /= kept;
    return rule;
}

std::vector<Member> mixture_members(const NoiseParams& noise, EnsembleMode mode, int quadrature_nodes) {
    noise.validate();
    if (noise.sigma == 0.0) return {{noise.mu, 1.0}};
    std::vector<Member> out;
    if (mode == EnsembleMode::quadrature) {
        const QuadratureRule rule = gauss_hermite_normal(quadrature_nodes, kQuadraturePruneWeight);
        out.reserve(rule.nodes.size());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            out.push_back({noise.mu + noise.sigma * rule.nodes[i], rule.weights[i]});
        return out;
    }
    const double w = 1.0 / noise.realizations;
    out.reserve(static_cast<std::size_t>(noise.realizations));
    for (int i = 0; i < noise.realizations; ++i) out.push_back({sample_delta_z(noise, i), w});
    return out;
}

namespace {

MixtureResult reduce(const std::vector<Member>& members, const std::vector<DensityMatrix>& rhos, bool keep) {
    Matrix2c sum = Matrix2c::Zero();
    for (std::size_t i = 0; i < members.size(); ++i) sum += members[i].weight * rhos[i].matrix();
    MixtureResult r;
    r.rho_avg = DensityMatrix(sum);
    r.p_down = measure_down(r.rho_avg);
    if (keep) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            r.per_realization_p.push_back(measure_down(rhos[i]));
            r.delta_z.push_back(members[i].delta_z);
        }
    }
    return r;
}

[[noreturn]] void throw_member_failure(std::size_t index, double dz, const std::string& what) {
    throw SolverError("realization " + std::to_string(index) + " (dz = " + detail::format_double(dz) +
                      ") failed: " + what);
}

} // namespace

MixtureResult run_members(const std::vector<Member>& members, const MemberEvolver& evolve, bool keep_members,
                          int jobs) {
    const auto n = static_cast<std::int64_t>(members.size());
    std::vector<DensityMatrix> rhos(members.size());
    std::int64_t failed = LLONG_MAX;
    std::string failure;
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            rhos[static_cast<std::size_t>(i)] = evolve(members[static_cast<std::size_t>(i)].delta_z);
        } catch (const std::exception& e) {
#pragma omp critical(anneal_member_failure)
            if (i < failed) {
                failed = i;
                failure = e.what();
            }
        }
    }
    if (failed != LLONG_MAX)
        throw_member_failure(static_cast<std::size_t>(failed), members[static_cast<std::size_t>(failed)].delta_z,
                             failure);
    return reduce(members, rhos, keep_members);
}

MixtureResult run_members_serial(const std::vector<Member>& members, const MemberEvolver& evolve, bool keep_members) {
    std::vector<DensityMatrix> rhos;
    rhos.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        try {
            rhos.push_back(evolve(members[i].delta_z));
        } catch (const std::exception& e) {
            throw_member_failure(i, members[i].delta_z, e.what());
        }
    }
    return reduce(members, rhos, keep_members);
}

namespace {

template <class Spec, class Evolve>
MemberEvolver member_evolver(const Spec& spec, double s_end, Evolve evolve) {
    return [spec, s_end, evolve](double dz) {
        Spec copy = spec;
        if constexpr (std::is_same_v<Spec, OpenEvolutionSpec>)
            copy.base.qubit.delta_z = dz;
        else
            copy.qubit.delta_z = dz;
        return evolve(copy, s_end);
    };
}

} // namespace

MixtureResult run_mixture(const EvolutionSpec& spec, const NoiseParams& noise, double s_end, const MixtureOptions& o) {
    spec.validate();
    return run_members(mixture_members(noise, o.mode, o.quadrature_nodes), member_evolver(spec, s_end, evolve_closed),
                       o.keep_members, o.jobs);
}

MixtureResult run_mixture(const OpenEvolutionSpec& spec, const NoiseParams& noise, double s_end,
                          const MixtureOptions& o) {
    spec.validate();
    return run_members(mixture_members(noise, o.mode, o.quadrature_nodes), member_evolver(spec, s_end, evolve_open),
                       o.keep_members, o.jobs);
}

MixtureResult run_mixture_serial(const EvolutionSpec& spec, const NoiseParams& noise, double s_end,
                                 const MixtureOptions& o) {
    spec.validate();
    return run_members_serial(mixture_members(noise, o.mode, o.quadrature_nodes),
                              member_evolver(spec, s_end, evolve_closed), o.keep_members);
}

MixtureResult run_mixture_serial(const OpenEvolutionSpec& spec, const NoiseParams& noise, double s_end,
                                 const MixtureOptions& o) {
    spec.validate();
    return run_members_serial(mixture_members(noise, o.mode, o.quadrature_nodes),
                              member_evolver(spec, s_end, evolve_open), o.keep_members);
}

} // namespace anneal
