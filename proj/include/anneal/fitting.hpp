// fitting.hpp: exhaustive grid search for (g2, mu, sigma) against a reference
// ResultTable. g2 and mu are shared by every series, sigma is shared across h
// but chosen independently for each tau.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anneal/protocols.hpp"

namespace anneal {

enum class Metric { l1, l2, linf };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

// Throws ValidationError on length mismatch or empty input.
double curve_distance(std::span<const double> a, std::span<const double> b, Metric metric);

std::vector<double> default_g2_grid();    // 0, 1e-7, 3e-7, 1e-6, 3e-6, 1e-5
std::vector<double> default_sigma_grid(); // 0, 0.004, ..., 0.06

struct FitSpec {
    ResultTable reference;
    ModelKind model = ModelKind::open_noisy;
    ModelConfig config; // schedule, bath (beta, omega_c), ensemble, resolution
    std::vector<double> g2_grid = default_g2_grid();
    std::vector<double> sigma_grid = default_sigma_grid();
    std::vector<double> mu_grid = {0.0};
    Metric metric = Metric::l1;
    double ramp_duration = kDefaultRampDuration; // for h-stop references

    void validate() const;
};

struct SeriesDistance {
    double tau = 0.0;
    double h = 0.0;
    std::size_t points = 0;
    double distance = 0.0;
};

struct FitFailure {
    double g2 = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    std::string message;
};

struct TauSigma {
    double tau = 0.0;
    std::optional<double> sigma; // none for noiseless models
};

struct FitReport {
    ModelKind model = ModelKind::open_noisy;
    Metric metric = Metric::l1;
    std::optional<double> g2; // none for closed models
    double mu = 0.0;
    std::vector<TauSigma> sigma_per_tau;
    std::vector<SeriesDistance> series; // reference order
    double total_distance = 0.0;
    std::size_t evaluations = 0; // grid candidates simulated
    std::vector<FitFailure> failures;
};

// Ties go to the smaller g2, then the smaller mu, then the smaller sigma.
// Candidates whose simulation fails are skipped and listed in `failures`.
FitReport grid_search_fit(const FitSpec& spec, const RunOptions& opts = {});

// Simulates `model` at the reference table's coordinates (row for row).
ResultTable simulate_like(const ResultTable& reference, ModelKind model, const ModelConfig& cfg,
                          double ramp_duration, const RunOptions& opts = {});

// (tau, sigma) pairs of a noisy fit; needs at least two tau values.
std::vector<std::pair<double, double>> sigma_trend(const FitReport& report);

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace anneal
