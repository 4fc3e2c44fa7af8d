#include "anneal/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anneal/errors.hpp"

namespace anneal {

void EvolutionSpec::validate() const {
    if (!schedule) throw ValidationError("evolution spec has no schedule");
    qubit.validate();
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("anneal time tau must be positive");
    if (steps < 2) throw ValidationError("steps must be at least 2");
}

void OpenEvolutionSpec::validate() const {
    base.validate();
    bath.validate();
    if (dissipator_steps < 0) throw ValidationError("dissipator steps must be non-negative");
}

std::vector<double> make_step_grid(double s_end, int steps, std::span<const double> extra) {
    if (!(s_end > 0.0 && s_end <= 1.0)) throw ValidationError("s_end must lie in (0,1]");
    if (steps < 1) throw ValidationError("steps must be positive");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps) + 1 + extra.size());
    for (int k = 0; k < steps; ++k) grid.push_back(uniform_point(s_end, k, steps));
    grid.push_back(s_end);
    const auto uniform_end = static_cast<std::ptrdiff_t>(grid.size());
    for (double e : extra)
        if (e > 0.0 && e < s_end) grid.push_back(e);
    if (grid.size() > static_cast<std::size_t>(uniform_end)) {
        std::sort(grid.begin() + uniform_end, grid.end());
        std::inplace_merge(grid.begin(), grid.begin() + uniform_end, grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }
    return grid;
}

std::vector<double> profile_kinks(const EvolutionSpec& spec) {
    if (!spec.profile) return {};
    return spec.profile->kinks();
}

int default_closed_steps(const Schedule& schedule, double tau) {
    const double want = std::ceil(kStepsPerPeriod * tau * schedule.peak_frequency());
    if (want > static_cast<double>(std::numeric_limits<int>::max()))
        throw ValidationError("anneal time too long for the default step policy");
    return std::max(2000, static_cast<int>(want));
}

int default_dissipator_steps(const OpenEvolutionSpec& spec) {
    return std::min(spec.base.steps, kDefaultDissipatorSteps);
}

} // namespace anneal
