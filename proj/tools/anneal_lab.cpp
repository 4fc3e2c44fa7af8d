// anneal_lab: command-line driver: sweep, stop, fit, validate-schedule.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
// error. Outputs are written to temporaries inside the output directory and
// renamed into place; a failed run leaves nothing behind.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "anneal/errors.hpp"
#include "anneal/io.hpp"

namespace fs = std::filesystem;
using namespace anneal;

namespace {

// Flags as given on the command line; unset ones leave the config alone.
struct Overrides {
    std::string config, schedule, model, ensemble, sampling, reference, metric, out;
    std::optional<double> g2, beta, omega_c, mu, sigma, xi, ramp_ns;
    std::optional<int> quadrature, realizations, steps, dissipator_steps;
    std::optional<std::uint64_t> seed;
    std::vector<double> tau_us, h, s_stop, g2_grid, sigma_grid, mu_grid;
    int jobs = 0;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config (a result JSON mirror also works)");
    app->add_option("--schedule", o.schedule, "schedule CSV path or built-in name");
    app->add_option("--model", o.model, "closed-noiseless|closed-noisy|open-noiseless|open-noisy");
    app->add_option("--xi", o.xi, "transverse-field scale");
    app->add_option("--g2", o.g2, "system-bath coupling g^2");
    app->add_option("--beta", o.beta, "inverse temperature, seconds");
    app->add_option("--omega-c", o.omega_c, "bath cutoff, rad/s");
    app->add_option("--mu", o.mu, "noise mean");
    app->add_option("--sigma", o.sigma, "noise standard deviation");
    app->add_option("--ensemble", o.ensemble, "quadrature|monte-carlo");
    app->add_option("--quadrature", o.quadrature, "Gauss-Hermite nodes; implies --ensemble quadrature");
    app->add_option("--realizations", o.realizations, "Monte Carlo realizations");
    app->add_option("--sampling", o.sampling, "stratified|iid");
    app->add_option("--seed", o.seed, "Monte Carlo seed");
    app->add_option("--steps", o.steps, "integrator steps per anneal (0: automatic)");
    app->add_option("--dissipator-steps", o.dissipator_steps, "open-system outer steps (0: automatic)");
    app->add_option("--tau-us", o.tau_us, "anneal times in microseconds")->delimiter(',');
    app->add_option("--h-values", o.h, "programmed fields h")->delimiter(',');
    app->add_option("--out", o.out, "output directory");
    app->add_option("--jobs", o.jobs, "worker threads (default: ANNEAL_LAB_JOBS or all cores)");
}

RunConfig resolve(Command cmd, const Overrides& o) {
    RunConfig c;
    // Simulations default to sampled realizations: P(down) can oscillate in
    // dz faster than any Gauss-Hermite rule resolves. Fits keep the
    // deterministic quadrature objective.
    c.ensemble = cmd == Command::fit ? EnsembleMode::quadrature : EnsembleMode::monte_carlo;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ValidationError("cannot open config file '" + o.config + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        c = config_from_json(ss.str());
        if (c.command != cmd)
            throw ValidationError("config is for '" + std::string(command_name(c.command)) + "', not '" +
                                  std::string(command_name(cmd)) + "'");
    }
    c.command = cmd;
    if (!o.schedule.empty()) c.schedule = o.schedule;
    if (!o.model.empty()) c.model = parse_model(o.model);
    if (o.xi) c.xi = *o.xi;
    if (o.g2) c.bath.g2 = *o.g2;
    if (o.beta) c.bath.beta = *o.beta;
    if (o.omega_c) c.bath.omega_c = *o.omega_c;
    if (o.mu) c.noise.mu = *o.mu;
    if (o.sigma) c.noise.sigma = *o.sigma;
    if (!o.ensemble.empty()) {
        if (o.ensemble == "quadrature") c.ensemble = EnsembleMode::quadrature;
        else if (o.ensemble == "monte-carlo") c.ensemble = EnsembleMode::monte_carlo;
        else throw ValidationError("unknown ensemble '" + o.ensemble + "' (quadrature|monte-carlo)");
    }
    if (o.quadrature) {
        c.quadrature_nodes = *o.quadrature;
        if (o.ensemble.empty()) c.ensemble = EnsembleMode::quadrature;
    }
    if (o.realizations) c.noise.realizations = *o.realizations;
    if (!o.sampling.empty()) c.noise.scheme = parse_scheme(o.sampling);
    if (o.seed) c.noise.seed = *o.seed;
    if (o.steps) c.steps = *o.steps;
    if (o.dissipator_steps) c.dissipator_steps = *o.dissipator_steps;
    if (!o.tau_us.empty()) {
        c.tau_values.clear();
        for (double t : o.tau_us) c.tau_values.push_back(t / 1e6);
    }
    if (!o.h.empty()) c.h_values = o.h;
    if (!o.s_stop.empty()) c.s_stop_values = o.s_stop;
    if (o.ramp_ns) c.ramp_duration = *o.ramp_ns / 1e9;
    if (!o.reference.empty()) c.reference = o.reference;
    if (!o.metric.empty()) c.metric = parse_metric(o.metric);
    if (!o.g2_grid.empty()) c.g2_grid = o.g2_grid;
    if (!o.sigma_grid.empty()) c.sigma_grid = o.sigma_grid;
    if (!o.mu_grid.empty()) c.mu_grid = o.mu_grid;
    if (!o.out.empty()) c.output_dir = o.out;
    if (cmd != Command::fit) c.resolve_defaults();
    c.validate();
    return c;
}

int jobs_from(const Overrides& o) {
    if (o.jobs > 0) return o.jobs;
    if (const char* env = std::getenv("ANNEAL_LAB_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ValidationError("ANNEAL_LAB_JOBS must be a positive integer");
        return static_cast<int>(v);
    }
    return 0;
}

// Stages files as hidden temporaries and commits them together.
class Outputs {
public:
    explicit Outputs(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        created_ = fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            throw ValidationError("cannot create output directory '" + dir + "'");
    }
    ~Outputs() {
        std::error_code ec;
        for (const auto& [tmp, final] : staged_) fs::remove(tmp, ec);
        if (committed_) return;
        for (const auto& p : renamed_) fs::remove(p, ec);
        if (created_) fs::remove(dir_, ec); // only succeeds while empty
    }

    void add(const std::string& name, const std::string& content) {
        const fs::path final = dir_ / name;
        const fs::path tmp = dir_ / ("." + name + ".tmp");
        staged_.emplace_back(tmp, final);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("failed to write '" + tmp.string() + "'");
    }

    void commit() {
        for (const auto& [tmp, final] : staged_) {
            fs::rename(tmp, final);
            renamed_.push_back(final);
        }
        staged_.clear();
        committed_ = true;
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    fs::path dir_;
    std::vector<std::pair<fs::path, fs::path>> staged_;
    std::vector<fs::path> renamed_;
    bool committed_ = false;
    bool created_ = false;
};

std::string csv_text(const RunConfig& c, const ResultTable& t) {
    std::ostringstream ss;
    write_result_csv(ss, t, config_to_json(c));
    return ss.str();
}

int cmd_results(Command cmd, const Overrides& o) {
    const RunConfig c = resolve(cmd, o);
    const RunOptions opts{jobs_from(o)};
    const ModelConfig mc = c.model_config();
    const ResultTable t = cmd == Command::sweep ? run_h_sweep(c.sweep_grid(), mc, opts) : run_h_stop(c.stop_grid(), mc, opts);
    const std::string base(command_name(cmd));
    Outputs out(c.output_dir);
    out.add(base + ".csv", csv_text(c, t));
    out.add(base + ".json", result_metadata_json(c, t));
    out.commit();
    std::cout << "wrote " << t.rows.size() << " rows to " << out.path(base + ".csv") << '\n';
    return 0;
}

int cmd_fit(const Overrides& o) {
    const RunConfig c = resolve(Command::fit, o);
    FitSpec spec;
    spec.reference = load_result_csv(c.reference);
    spec.model = c.model;
    spec.config = c.model_config();
    spec.g2_grid = c.g2_grid;
    spec.sigma_grid = c.sigma_grid;
    spec.mu_grid = c.mu_grid;
    spec.metric = c.metric;
    spec.ramp_duration = c.ramp_duration;
    const FitReport r = grid_search_fit(spec, RunOptions{jobs_from(o)});

    Outputs out(c.output_dir);
    out.add("fit.json", fit_report_json(c, r));
    std::ostringstream res;
    write_residual_csv(res, r);
    out.add("fit_residuals.csv", res.str());
    out.commit();

    std::cout << "model " << model_tag(r.model) << ", metric " << metric_name(r.metric) << '\n';
    std::cout << "g2 = ";
    if (r.g2) std::cout << *r.g2; else std::cout << "n/a";
    std::cout << ", mu = " << r.mu << '\n';
    for (const auto& ts : r.sigma_per_tau) {
        std::cout << "tau = " << ts.tau * 1e6 << " us: sigma = ";
        if (ts.sigma) std::cout << *ts.sigma; else std::cout << "n/a";
        std::cout << '\n';
    }
    std::cout << "total distance = " << r.total_distance << " (" << r.failures.size() << " failed grid points)\n";
    return 0;
}

int cmd_validate_schedule(const std::string& source) {
    const Schedule s = load_schedule(source);
    std::cout << "schedule '" << s.name() << "': " << s.knots().size() << " knots, peak "
              << s.peak_frequency() / 1e9 << " GHz, B(1) = " << s.b_final() / 1e9 << " GHz\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-qubit annealing simulation and calibration"};
    app.require_subcommand(1);
    Overrides o;
    std::string schedule_source;

    auto* sweep = app.add_subcommand("sweep", "h-sweep: final P(down) over (tau, h)");
    add_common(sweep, o);

    auto* stop = app.add_subcommand("stop", "h-stop: P(down) over (tau, h, s_stop)");
    add_common(stop, o);
    stop->add_option("--s-stop", o.s_stop, "stop points in (0, 1]")->delimiter(',');
    stop->add_option("--ramp-ns", o.ramp_ns, "h-gain ramp duration in ns (>= 2)");

    auto* fit = app.add_subcommand("fit", "grid-search fit of a model to a reference CSV");
    add_common(fit, o);
    fit->add_option("--reference", o.reference, "reference result CSV");
    fit->add_option("--metric", o.metric, "l1|l2|linf");
    fit->add_option("--g2-grid", o.g2_grid, "g^2 candidates")->delimiter(',');
    fit->add_option("--sigma-grid", o.sigma_grid, "sigma candidates")->delimiter(',');
    fit->add_option("--mu-grid", o.mu_grid, "mu candidates")->delimiter(',');
    fit->add_option("--ramp-ns", o.ramp_ns, "h-gain ramp duration in ns for h-stop references");

    auto* vs = app.add_subcommand("validate-schedule", "check a schedule CSV or built-in");
    vs->add_option("source", schedule_source, "schedule CSV path or built-in name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*sweep) return cmd_results(Command::sweep, o);
        if (*stop) return cmd_results(Command::stop, o);
        if (*fit) return cmd_fit(o);
        return cmd_validate_schedule(schedule_source);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
