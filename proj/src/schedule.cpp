#include "anneal/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "anneal/errors.hpp"
#include "text_util.hpp"

namespace anneal {

namespace {

std::string row_tag(std::size_t row) { return " at row " + std::to_string(row); }

} // namespace

Schedule::Schedule(std::string name, std::vector<ScheduleKnot> knots)
    : name_(std::move(name)), knots_(std::move(knots)) {
    if (knots_.size() < 2) throw ValidationError("schedule needs at least 2 knots");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        const std::size_t row = i + 1;
        if (!std::isfinite(k.s) || !std::isfinite(k.a_hz) || !std::isfinite(k.b_hz))
            throw ValidationError("non-finite value" + row_tag(row));
        if (k.a_hz < 0.0 || k.b_hz < 0.0) throw ValidationError("negative energy" + row_tag(row));
        if (i > 0 && !(k.s > knots_[i - 1].s)) throw ValidationError("non-monotone s" + row_tag(row));
    }
    if (knots_.front().s != 0.0) throw ValidationError("missing endpoint s=0" + row_tag(1));
    if (knots_.back().s != 1.0) throw ValidationError("missing endpoint s=1" + row_tag(knots_.size()));
    if (!(knots_.front().a_hz > knots_.front().b_hz))
        throw ValidationError("schedule must start transverse-dominated, A(0) > B(0)" + row_tag(1));
    if (!(knots_.back().a_hz < knots_.back().b_hz))
        throw ValidationError("schedule must end longitudinal-dominated, A(1) < B(1)" + row_tag(knots_.size()));
    for (const auto& k : knots_) peak_hz_ = std::max({peak_hz_, k.a_hz, k.b_hz});
    inv_mean_spacing_ = static_cast<double>(knots_.size() - 1);
}

void Schedule::throw_out_of_range(double s) {
    throw std::out_of_range("schedule evaluated outside [0,1]: s = " + std::to_string(s));
}

Schedule parse_schedule_csv(std::istream& in, std::string name) {
    std::vector<ScheduleKnot> knots;
    std::string line;
    bool header_seen = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        const std::string_view body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header_seen) {
            const auto cols = detail::split(body, ',');
            if (cols.size() != 3 || detail::trim(cols[0]) != "s" || detail::trim(cols[1]) != "A_Hz" ||
                detail::trim(cols[2]) != "B_Hz")
                throw ValidationError("schedule header must be `s,A_Hz,B_Hz`");
            header_seen = true;
            continue;
        }
        ++row;
        const auto cols = detail::split(body, ',');
        if (cols.size() != 3) throw ValidationError("parse error" + row_tag(row) + ": expected 3 columns");
        ScheduleKnot k{};
        double* dst[3] = {&k.s, &k.a_hz, &k.b_hz};
        for (int c = 0; c < 3; ++c) {
            if (!detail::parse_double(detail::trim(cols[c]), *dst[c]))
                throw ValidationError("parse error" + row_tag(row) + ": bad number '" + std::string(cols[c]) + "'");
        }
        knots.push_back(k);
    }
    if (!header_seen) throw ValidationError("schedule file is empty");
    if (knots.empty()) throw ValidationError("schedule file has no data rows");
    // Row-specific checks are repeated here so that error messages refer to
    // file rows before the generic constructor checks run.
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i].s > knots[i - 1].s)) throw ValidationError("non-monotone s" + row_tag(i + 1));
    return Schedule(std::move(name), std::move(knots));
}

namespace {

Schedule linear_synthetic() {
    constexpr double a0 = 5e9;
    constexpr double b0 = 5e9;
    return Schedule("linear-synthetic", {{0.0, a0, 0.0}, {1.0, 0.0, b0}});
}

Schedule dw2000q_style() {
    // Tabulated on 101 points: A falls off roughly exponentially and vanishes
    // at s = 1 like the hardware curve, B grows as s^1.5, crossover near
    // s = 0.27.
    constexpr int n = 100;
    std::vector<ScheduleKnot> knots;
    knots.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double a = 6e9 * (1.0 - s) * (1.0 - s) * std::exp(-2.5 * s);
        const double b = 0.1e9 + 11.9e9 * s * std::sqrt(s);
        knots.push_back({s, a, b});
    }
    return Schedule("dw2000q-style", std::move(knots));
}

} // namespace

std::vector<std::string> builtin_schedule_names() { return {"linear-synthetic", "dw2000q-style"}; }

Schedule builtin_schedule(std::string_view name) {
    if (name == "linear-synthetic") return linear_synthetic();
    if (name == "dw2000q-style") return dw2000q_style();
    throw ValidationError("unknown built-in schedule '" + std::string(name) + "'");
}

Schedule load_schedule(std::string_view source) {
    constexpr std::string_view prefix = "builtin:";
    if (source.starts_with(prefix)) return builtin_schedule(source.substr(prefix.size()));
    for (const auto& n : builtin_schedule_names())
        if (source == n) return builtin_schedule(n);
    std::ifstream in{std::string(source)};
    if (!in) throw ValidationError("cannot open schedule file '" + std::string(source) + "'");
    return parse_schedule_csv(in, std::string(source));
}

HGainProfile::HGainProfile(double s_stop, double ramp_duration, double tau)
    : s_stop_(s_stop), ramp_duration_(ramp_duration), tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("anneal time must be positive");
    if (!(s_stop > 0.0 && s_stop <= 1.0)) throw ValidationError("s_stop must lie in (0,1]");
    if (!(ramp_duration >= kMinRampDuration))
        throw ValidationError("h-gain ramp duration " + std::to_string(ramp_duration * 1e9) +
                              " ns is below the 2 ns hardware floor");
    width_ = ramp_duration / tau;
    if (s_stop - width_ < 0.0) throw ValidationError("h-gain ramp would start before s = 0");
}

HGainProfile HGainProfile::identity() noexcept { return HGainProfile(); }

std::vector<double> HGainProfile::kinks() const {
    std::vector<double> out;
    const double start = ramp_start();
    if (start > 0.0 && start < 1.0 && width_ > 0.0) out.push_back(start);
    if (s_stop_ < 1.0) out.push_back(s_stop_);
    return out;
}

void HGainProfile::throw_out_of_range(double s) {
    throw std::out_of_range("h-gain evaluated outside [0,1]: s = " + std::to_string(s));
}

} // namespace anneal
