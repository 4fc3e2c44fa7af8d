// io.hpp: run configuration, result CSV and JSON reports.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anneal/fitting.hpp"

namespace anneal {

inline constexpr std::string_view kCodeVersion = "1.0.0";

enum class Command { sweep, stop, fit };

std::string_view command_name(Command c);

// Everything a CLI run depends on. Empty grids mean the published defaults.
// output_dir is where files go, not part of the result, so it is left out of
// the configuration embedded in outputs.
struct RunConfig {
    Command command = Command::sweep;
    std::string schedule = "linear-synthetic"; // file path or built-in name
    ModelKind model = ModelKind::closed_noiseless;
    double xi = 1.0;
    BathParams bath;
    NoiseParams noise;
    EnsembleMode ensemble = EnsembleMode::quadrature;
    int quadrature_nodes = kDefaultQuadratureNodes;
    int steps = 0;
    int dissipator_steps = 0;

    std::vector<double> tau_values; // seconds
    std::vector<double> h_values;
    std::vector<double> s_stop_values;
    double ramp_duration = kDefaultRampDuration;

    // fit only
    std::string reference;
    Metric metric = Metric::l1;
    std::vector<double> g2_grid = default_g2_grid();
    std::vector<double> sigma_grid = default_sigma_grid();
    std::vector<double> mu_grid = {0.0};

    std::string output_dir = "out";

    // Checks values and that referenced files exist. Does not touch output_dir.
    void validate() const;
    // Fills empty grids with the published defaults for the command.
    void resolve_defaults();
    ModelConfig model_config() const; // loads the schedule
    SweepGrid sweep_grid() const;
    StopGrid stop_grid() const;
};

std::string config_to_json(const RunConfig& c, bool with_output_dir = false);
// Accepts a bare config or a document with a top-level "config" object (the
// JSON mirror written next to results). Unknown keys are errors.
RunConfig config_from_json(std::string_view text);

// `# config: {...}` line, header, then one row per result.
void write_result_csv(std::ostream& out, const ResultTable& table, std::string_view config_json);
ResultTable read_result_csv(std::istream& in); // ValidationError names the offending row
ResultTable load_result_csv(const std::string& path);

std::string result_metadata_json(const RunConfig& c, const ResultTable& table);
std::string fit_report_json(const RunConfig& c, const FitReport& report);
void write_residual_csv(std::ostream& out, const FitReport& report);

} // namespace anneal
