#include <cmath>
#include <numeric>
#include <set>

#include "anneal/ensemble.hpp"
#include "anneal/errors.hpp"
#include "helpers.hpp"

using namespace anneal;
using testing::contains;
using testing::message_of;

TEST_CASE("counter-based uniforms are reproducible and lie in (0,1)") {
    std::set<double> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = counter_uniform(42, 0, i);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(u == counter_uniform(42, 0, i));
        seen.insert(u);
    }
    CHECK(seen.size() == 10000);
    CHECK(counter_uniform(42, 0, 5) != counter_uniform(43, 0, 5));
    CHECK(counter_uniform(42, 0, 5) != counter_uniform(42, 1, 5));
}

TEST_CASE("stratified antithetic samples") {
    NoiseParams n{0.0, 0.028, 1001, 9, SamplingScheme::stratified};
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n.realizations; ++i) {
        const double z = sample_delta_z(n, i);
        CHECK(z == -sample_delta_z(n, n.realizations - 1 - i)); // exact mirror
        sum += z;
        sq += z * z;
    }
    CHECK(sample_delta_z(n, 500) == 0.0); // odd N: median stratum
    CHECK(std::abs(sum) <= 1e-12);
    CHECK(std::sqrt(sq / n.realizations) == doctest::Approx(0.028).epsilon(0.01));
}

TEST_CASE("iid samples have the right moments") {
    NoiseParams n{0.01, 0.02, 20000, 3, SamplingScheme::iid};
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n.realizations; ++i) {
        const double z = sample_delta_z(n, i);
        sum += z;
        sq += (z - 0.01) * (z - 0.01);
    }
    CHECK(sum / n.realizations == doctest::Approx(0.01).epsilon(0.05));
    CHECK(std::sqrt(sq / n.realizations) == doctest::Approx(0.02).epsilon(0.03));
}

TEST_CASE("sample_delta_z edge cases") {
    NoiseParams n{0.005, 0.0, 10, 1, SamplingScheme::stratified};
    CHECK(sample_delta_z(n, 3) == 0.005);
    CHECK_THROWS_AS(sample_delta_z(n, 10), ValidationError);
    CHECK_THROWS_AS(sample_delta_z(n, -1), ValidationError);
    n.sigma = -1.0;
    CHECK_THROWS_AS(sample_delta_z(n, 0), ValidationError);
    CHECK(parse_scheme("iid") == SamplingScheme::iid);
    CHECK_THROWS_AS(parse_scheme("sobol"), ValidationError);
}

TEST_CASE("Gauss-Hermite rule integrates normal moments") {
    const QuadratureRule full = gauss_hermite_normal(41, 0.0);
    REQUIRE(full.nodes.size() == 41);
    const QuadratureRule rule = gauss_hermite_normal(41, kQuadraturePruneWeight);
    CHECK(rule.nodes.size() == 29);
    for (const auto* r : {&full, &rule}) {
        double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
        for (std::size_t i = 0; i < r->nodes.size(); ++i) {
            const double x = r->nodes[i], w = r->weights[i];
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
            m4 += w * std::pow(x, 4);
            m6 += w * std::pow(x, 6);
        }
        CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(m1) <= 1e-14);
        CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
        // pruning drops ~1e-14 of the mass at |x| ~ 8, which shows up in the
        // higher moments
        const double tol = r == &full ? 1e-12 : 1e-8;
        CHECK(std::abs(m4 - 3.0) <= 3.0 * tol);
        CHECK(std::abs(m6 - 15.0) <= 15.0 * tol);
        const std::size_t n = r->nodes.size();
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(r->nodes[i] == -r->nodes[n - 1 - i]);
            CHECK(r->weights[i] == r->weights[n - 1 - i]);
        }
    }
    // small rules are exact too: 3 nodes are {-sqrt 3, 0, sqrt 3} with 1/6, 2/3, 1/6
    const QuadratureRule three = gauss_hermite_normal(3, 0.0);
    CHECK(three.nodes[2] == doctest::Approx(std::sqrt(3.0)));
    CHECK(three.weights[1] == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(gauss_hermite_normal(0, 0.0), ValidationError);
}

TEST_CASE("mixture members") {
    NoiseParams n{0.01, 0.028, 100, 1, SamplingScheme::stratified};
    const auto q = mixture_members(n, EnsembleMode::quadrature, 41);
    CHECK(q.size() == 29);
    double w = 0.0;
    for (const auto& m : q) w += m.weight;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
    const auto mc = mixture_members(n, EnsembleMode::monte_carlo, 41);
    CHECK(mc.size() == 100);
    CHECK(mc[7].weight == 0.01);
    n.sigma = 0.0;
    const auto one = mixture_members(n, EnsembleMode::quadrature, 41);
    REQUIRE(one.size() == 1);
    CHECK(one[0].delta_z == 0.01);
    CHECK(one[0].weight == 1.0);
}

TEST_CASE("run_members: parallel equals serial and failures name the realization") {
    std::vector<Member> members;
    for (int i = 0; i < 64; ++i) members.push_back({0.001 * i, 1.0 / 64});
    auto evolve = [](double dz) { return DensityMatrix::from_bloch(1.0, std::cos(40 * dz), 0.0, std::sin(40 * dz)); };
    const auto a = run_members(members, evolve, true, 3);
    const auto b = run_members_serial(members, evolve, true);
    CHECK(a.rho_avg.matrix() == b.rho_avg.matrix());
    CHECK(a.per_realization_p == b.per_realization_p);
    CHECK(a.p_down == b.p_down);

    auto failing = [](double dz) -> DensityMatrix {
        if (dz > 0.0195) throw SolverError("boom");
        return initial_state();
    };
    const auto msg = message_of([&] { run_members(members, failing, false, 4); });
    CHECK(contains(msg, "realization 20"));
    CHECK(contains(msg, "boom"));
}

TEST_CASE("run_mixture with sigma = 0 reproduces the noiseless run exactly") {
    EvolutionSpec s;
    s.schedule = testing::schedule("linear-synthetic");
    s.qubit.h = 0.2;
    s.tau = 20e-9;
    s.steps = 1000;
    NoiseParams n;
    const auto r = run_mixture(s, n, 1.0, MixtureOptions{});
    CHECK(r.p_down == measure_down(evolve_closed(s, 1.0)));
}

TEST_CASE("mixture mean over a symmetric ensemble is symmetric in h") {
    EvolutionSpec s;
    s.schedule = testing::schedule("dw2000q-style");
    s.qubit.h = 0.1;
    s.tau = 20e-9;
    s.steps = 1500;
    NoiseParams n{0.0, 0.03, 200, 5, SamplingScheme::stratified};
    MixtureOptions o;
    const double p = run_mixture(s, n, 1.0, o).p_down;
    s.qubit.h = -0.1;
    const double q = run_mixture(s, n, 1.0, o).p_down;
    CHECK(p + q == doctest::Approx(1.0).epsilon(1e-12));
}
