// protocols.hpp: the h-sweep and h-stop experiments over (tau, h, s_stop)
// grids, for the four models closed/open x noiseless/noisy.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anneal/ensemble.hpp"

namespace anneal {

enum class ModelKind { closed_noiseless, closed_noisy, open_noiseless, open_noisy };

inline constexpr std::array<ModelKind, 4> kAllModels = {ModelKind::closed_noiseless, ModelKind::closed_noisy,
                                                        ModelKind::open_noiseless, ModelKind::open_noisy};

std::string_view model_tag(ModelKind m);
ModelKind parse_model(std::string_view tag); // ValidationError on unknown tags
inline bool is_open(ModelKind m) { return m == ModelKind::open_noiseless || m == ModelKind::open_noisy; }
inline bool is_noisy(ModelKind m) { return m == ModelKind::closed_noisy || m == ModelKind::open_noisy; }

// Everything besides the grid that a simulation needs. Bath parameters are
// ignored by closed models and noise parameters by noiseless ones.
struct ModelConfig {
    std::shared_ptr<const Schedule> schedule;
    double xi = 1.0;
    BathParams bath;
    NoiseParams noise;
    EnsembleMode ensemble = EnsembleMode::quadrature;
    int quadrature_nodes = kDefaultQuadratureNodes;
    int steps = 0;            // inner/closed steps; 0: default_closed_steps per tau
    int dissipator_steps = 0; // open outer steps; 0: default

    void validate(ModelKind model) const;
    int steps_for(double tau) const;
    int dissipator_steps_for(double tau) const;
    // Mixture members for `model`: a single dz = 0 member for noiseless ones.
    std::vector<Member> members(ModelKind model) const;
    int realizations(ModelKind model) const; // what the result rows report
};

struct SweepGrid {
    std::vector<double> h_values;
    std::vector<double> tau_values; // seconds
    ModelKind model = ModelKind::closed_noiseless;

    void validate() const;
    // h = 0.025, 0.050, ..., 1.0 and tau = 1, 5, 10, 25, 50, 125 us.
    static SweepGrid published_default(ModelKind model);
};

struct StopGrid {
    std::vector<double> s_stop_values; // ascending, in (0, 1]
    std::vector<double> h_values;
    std::vector<double> tau_values;
    double ramp_duration = kDefaultRampDuration;
    ModelKind model = ModelKind::closed_noiseless;

    void validate() const;
    // s_stop = 0.02, ..., 0.98; h in {0.025, 0.05, 0.125, 0.25, 0.5}; tau as
    // for the sweep; 8 ns ramp.
    static StopGrid published_default(ModelKind model);
};

std::vector<double> published_tau_values();
std::vector<double> published_sweep_h_values();
std::vector<double> published_stop_h_values();
std::vector<double> published_s_stop_values();

struct ResultRow {
    ModelKind model = ModelKind::closed_noiseless;
    double tau_s = 0.0;
    double h = 0.0;
    std::optional<double> s_stop; // none for h-sweep rows
    double p_down = 0.0;
    int realizations = 1;
    std::uint64_t seed = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct RunOptions {
    int jobs = 0; // <= 0: OpenMP default
};

// Rows in grid order: tau outer, then h (then s_stop).
ResultTable run_h_sweep(const SweepGrid& grid, const ModelConfig& cfg, const RunOptions& opts = {});

// Shares work across the grid: the propagation before each ramp is computed
// once per (tau, member, h) and the post-stop propagation, which does not
// depend on h, once per (tau, member) as maps applied backwards from s = 1.
ResultTable run_h_stop(const StopGrid& grid, const ModelConfig& cfg, const RunOptions& opts = {});

// Serial references: one independent evolution per grid point and member.
ResultTable run_h_sweep_reference(const SweepGrid& grid, const ModelConfig& cfg);
ResultTable run_h_stop_reference(const StopGrid& grid, const ModelConfig& cfg);

// Logistic fit p(s) = a + (b - a) / (1 + exp(-c (s - m))) by
// Levenberg-Marquardt, reported as (a, m, c (b - a) / 4, b) with c >= 0.
struct CurveFeatures {
    double plateau = 0.0;
    double midpoint = 0.0;
    double slope = 0.0; // maximum derivative of the fitted logistic
    double saturation = 0.0;
    bool converged = false;
    double residual_rms = 0.0;
    int iterations = 0;
    std::string diagnostic; // empty when converged
};

struct CurvePoint {
    double s_stop;
    double p_down;
};

// Needs >= 10 points sorted by s_stop. When the fit does not converge the
// plateau and saturation fall back to the means of the first and last three
// points.
CurveFeatures classify_curve(const std::vector<CurvePoint>& curve);

// Rows of `table` at (tau, h), in table order, as a curve.
std::vector<CurvePoint> extract_curve(const ResultTable& table, double tau, double h);

} // namespace anneal
