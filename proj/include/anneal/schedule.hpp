// schedule.hpp: annealing schedules A(s), B(s) and h-gain gate profiles k(s)

#pragma once

#include <algorithm>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anneal {

// One tabulated point of an annealing schedule. Energies are ordinary
// frequencies in Hz (h-bar = 1 convention); the 2*pi conversion happens in
// build_hamiltonian and nowhere else.
struct ScheduleKnot {
    double s;
    double a_hz;
    double b_hz;
};

struct ScheduleEnergies {
    double a_hz;
    double b_hz;
};

// Piecewise-linear annealing schedule. Immutable after construction.
//
// Invariants (checked by the constructor, violations throw ValidationError
// naming the 1-based data row):
//   - knots strictly increasing in s, first at s = 0, last at s = 1
//   - A >= 0 and B >= 0 everywhere
//   - A(0) > B(0) and A(1) < B(1)
class Schedule {
public:
    Schedule(std::string name, std::vector<ScheduleKnot> knots);

    const std::string& name() const noexcept { return name_; }
    std::span<const ScheduleKnot> knots() const noexcept { return knots_; }

    // Exact at knots, linear in between. Throws std::out_of_range outside [0,1].
    ScheduleEnergies operator()(double s) const {
        if (!(s >= 0.0 && s <= 1.0)) throw_out_of_range(s);
        const std::size_t i = segment(s);
        const ScheduleKnot& lo = knots_[i];
        if (s == lo.s) return {lo.a_hz, lo.b_hz};
        const ScheduleKnot& hi = knots_[i + 1];
        const double t = (s - lo.s) / (hi.s - lo.s);
        return {lo.a_hz * (1.0 - t) + hi.a_hz * t, lo.b_hz * (1.0 - t) + hi.b_hz * t};
    }

    // Largest tabulated energy, max over knots of max(A, B), in Hz.
    double peak_frequency() const noexcept { return peak_hz_; }
    double b_final() const noexcept { return knots_.back().b_hz; }

private:
    // Index i of the segment with knots[i].s <= s < knots[i+1].s (the last
    // segment for s = 1). Tables are usually evenly spaced, so guess first.
    std::size_t segment(double s) const noexcept {
        const std::size_t last = knots_.size() - 2;
        std::size_t i = std::min(last, static_cast<std::size_t>(s * inv_mean_spacing_));
        if (knots_[i].s <= s && (s < knots_[i + 1].s || i == last)) return i;
        auto it = std::upper_bound(knots_.begin() + 1, knots_.end() - 1, s,
                                   [](double v, const ScheduleKnot& k) { return v < k.s; });
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }
    [[noreturn]] static void throw_out_of_range(double s);

    std::string name_;
    std::vector<ScheduleKnot> knots_;
    double peak_hz_ = 0.0;
    double inv_mean_spacing_ = 1.0;
};

inline ScheduleEnergies eval_schedule(const Schedule& schedule, double s) { return schedule(s); }

// Schedule CSV: header `s,A_Hz,B_Hz`, '#' comment lines, decimal or
// scientific notation.
Schedule parse_schedule_csv(std::istream& in, std::string name);

// `source` is a file path, `builtin:<name>` or a bare built-in name.
Schedule load_schedule(std::string_view source);

// Built-ins: "linear-synthetic" (A = 5 GHz (1-s), B = 5 GHz s) and
// "dw2000q-style" (fast-decaying A, 12 GHz B(1); a tabulated stand-in for the
// published hardware curves).
Schedule builtin_schedule(std::string_view name);
std::vector<std::string> builtin_schedule_names();

inline constexpr double kMinRampDuration = 2e-9;     // seconds
inline constexpr double kDefaultRampDuration = 8e-9; // seconds

// Trapezoidal h-gain gate: k = 1 up to s_stop - w, linear down to 0 at s_stop,
// 0 afterwards, with ramp width w = ramp_duration / tau in normalized time.
class HGainProfile {
public:
    // Throws ValidationError if ramp_duration < 2 ns, s_stop outside (0,1] or
    // the ramp would start before s = 0.
    HGainProfile(double s_stop, double ramp_duration, double tau);

    // s_stop = 1 with zero ramp: k = 1 everywhere (the default anneal).
    static HGainProfile identity() noexcept;

    double s_stop() const noexcept { return s_stop_; }
    double ramp_duration() const noexcept { return ramp_duration_; }
    double tau() const noexcept { return tau_; }
    double ramp_width() const noexcept { return width_; }
    double ramp_start() const noexcept { return s_stop_ - width_; }
    bool is_identity() const noexcept { return s_stop_ >= 1.0 && width_ == 0.0; }

    // Points where k(s) has a slope discontinuity, inside (0,1).
    std::vector<double> kinks() const;

    double operator()(double s) const {
        if (!(s >= 0.0 && s <= 1.0)) throw_out_of_range(s);
        if (s <= s_stop_ - width_) return 1.0;
        if (s >= s_stop_) return 0.0;
        return (s_stop_ - s) / width_;
    }

private:
    HGainProfile() = default;
    [[noreturn]] static void throw_out_of_range(double s);
    double s_stop_ = 1.0;
    double ramp_duration_ = 0.0;
    double tau_ = 0.0;
    double width_ = 0.0;
};

inline double eval_hgain(const HGainProfile& profile, double s) { return profile(s); }

} // namespace anneal
