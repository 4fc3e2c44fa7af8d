#include <sstream>
#include <stdexcept>

#include "anneal/errors.hpp"
#include "anneal/schedule.hpp"
#include "helpers.hpp"

using namespace anneal;
using testing::contains;
using testing::message_of;

TEST_CASE("linear-synthetic is exact at knots and linear between") {
    const Schedule s = builtin_schedule("linear-synthetic");
    CHECK(s(0.0).a_hz == 5e9);
    CHECK(s(0.0).b_hz == 0.0);
    CHECK(s(1.0).a_hz == 0.0);
    CHECK(s(1.0).b_hz == 5e9);
    CHECK(s(0.5).a_hz == doctest::Approx(2.5e9).epsilon(1e-15));
    CHECK(s(0.5).b_hz == doctest::Approx(2.5e9).epsilon(1e-15));
    CHECK(s.b_final() == 5e9);
    CHECK(s.peak_frequency() == 5e9);
}

TEST_CASE("dw2000q-style starts transverse and ends longitudinal") {
    const Schedule s = builtin_schedule("dw2000q-style");
    CHECK(s(0.0).a_hz > s(0.0).b_hz);
    CHECK(s(1.0).a_hz < s(1.0).b_hz);
    CHECK(s.b_final() == doctest::Approx(12e9));
    for (const auto& k : s.knots()) CHECK(s(k.s).a_hz == k.a_hz); // exact at knots
}

TEST_CASE("evaluation outside [0,1] throws out_of_range") {
    const Schedule s = builtin_schedule("linear-synthetic");
    CHECK_THROWS_AS(s(-1e-12), std::out_of_range);
    CHECK_THROWS_AS(s(1.0 + 1e-12), std::out_of_range);
}

TEST_CASE("schedule CSV parsing") {
    SUBCASE("comments and scientific notation") {
        std::istringstream in("# measured\ns,A_Hz,B_Hz\n0,5e9,0\n# mid\n0.5,2.5E9,2.5e+9\n1,0.0,5000000000\n");
        const Schedule s = parse_schedule_csv(in, "file");
        CHECK(s.knots().size() == 3);
        CHECK(s(0.25).a_hz == doctest::Approx(3.75e9));
    }
    SUBCASE("non-monotone s names the row") {
        std::istringstream in("s,A_Hz,B_Hz\n0,5e9,0\n0.6,1e9,1e9\n0.5,1e9,1e9\n1,0,5e9\n");
        const auto msg = message_of([&] { parse_schedule_csv(in, "f"); });
        CHECK(contains(msg, "non-monotone"));
        CHECK(contains(msg, "row 3"));
    }
    SUBCASE("missing endpoint") {
        std::istringstream in("s,A_Hz,B_Hz\n0.1,5e9,0\n1,0,5e9\n");
        CHECK(contains(message_of([&] { parse_schedule_csv(in, "f"); }), "s=0"));
    }
    SUBCASE("negative energy") {
        std::istringstream in("s,A_Hz,B_Hz\n0,5e9,0\n0.5,-1,1\n1,0,5e9\n");
        CHECK(contains(message_of([&] { parse_schedule_csv(in, "f"); }), "negative"));
    }
    SUBCASE("bad header and bad numbers") {
        std::istringstream a("s,A,B\n0,1,0\n1,0,1\n");
        CHECK_THROWS_AS(parse_schedule_csv(a, "f"), ValidationError);
        std::istringstream b("s,A_Hz,B_Hz\n0,abc,0\n1,0,1\n");
        CHECK(contains(message_of([&] { parse_schedule_csv(b, "f"); }), "bad number"));
    }
}

TEST_CASE("load_schedule resolves built-ins and reports missing files") {
    CHECK(load_schedule("builtin:linear-synthetic").name() == "linear-synthetic");
    CHECK(load_schedule("dw2000q-style").name() == "dw2000q-style");
    const auto msg = message_of([] { load_schedule("/does/not/exist.csv"); });
    CHECK(contains(msg, "/does/not/exist.csv"));
    CHECK_THROWS_AS(builtin_schedule("nope"), ValidationError);
}

TEST_CASE("h-gain profile is a trapezoidal gate") {
    const double tau = 1e-6;
    const HGainProfile k(0.5, 8e-9, tau); // ramp width 0.008
    CHECK(k.ramp_width() == doctest::Approx(0.008));
    CHECK(k(0.0) == 1.0);
    CHECK(k(0.492) == 1.0);
    CHECK(k(0.496) == doctest::Approx(0.5));
    CHECK(k(0.5) == 0.0);
    CHECK(k(0.9) == 0.0);
    const auto kinks = k.kinks();
    REQUIRE(kinks.size() == 2);
    CHECK(kinks[0] == doctest::Approx(0.492));
    CHECK(kinks[1] == 0.5);

    const auto id = HGainProfile::identity();
    CHECK(id.is_identity());
    CHECK(id(0.3) == 1.0);
    CHECK(id(1.0) == 1.0);
}

TEST_CASE("h-gain profile validation") {
    CHECK(contains(message_of([] { HGainProfile(0.5, 1e-9, 1e-6); }), "2 ns"));
    CHECK_THROWS_AS(HGainProfile(0.0, 8e-9, 1e-6), ValidationError);
    CHECK_THROWS_AS(HGainProfile(1.5, 8e-9, 1e-6), ValidationError);
    CHECK_THROWS_AS(HGainProfile(0.005, 8e-9, 1e-6), ValidationError); // ramp starts before 0
    CHECK_THROWS_AS(HGainProfile(0.5, 8e-9, 0.0), ValidationError);
    CHECK_NOTHROW(HGainProfile(0.02, 8e-9, 1e-6));
}
