#include "anneal/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "anneal/errors.hpp"
#include "text_util.hpp"

namespace anneal {

using Json = nlohmann::ordered_json;

std::string_view command_name(Command c) {
    switch (c) {
    case Command::sweep: return "sweep";
    case Command::stop: return "stop";
    case Command::fit: return "fit";
    }
    return "sweep";
}

namespace {

Command parse_command(std::string_view s) {
    if (s == "sweep") return Command::sweep;
    if (s == "stop") return Command::stop;
    if (s == "fit") return Command::fit;
    throw ValidationError("unknown command '" + std::string(s) + "' (sweep|stop|fit)");
}

std::string_view ensemble_name(EnsembleMode m) { return m == EnsembleMode::quadrature ? "quadrature" : "monte-carlo"; }

EnsembleMode parse_ensemble(std::string_view s) {
    if (s == "quadrature") return EnsembleMode::quadrature;
    if (s == "monte-carlo") return EnsembleMode::monte_carlo;
    throw ValidationError("unknown ensemble '" + std::string(s) + "' (quadrature|monte-carlo)");
}

// Reads keys off a JSON object, rejecting any that are never asked for.
class Fields {
public:
    Fields(const Json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj.is_object()) throw ValidationError(where_ + " must be a JSON object");
    }

    const Json* find(const char* key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <class T>
    void get(const char* key, T& out) {
        const Json* v = find(key);
        if (!v) return;
        try {
            out = v->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ValidationError(where_ + "." + key + " has the wrong type");
        }
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items())
            if (!seen_.count(k)) throw ValidationError("unknown key '" + where_ + "." + k + "'");
    }

private:
    const Json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

Json config_object(const RunConfig& c, bool with_output_dir) {
    Json j;
    j["command"] = command_name(c.command);
    j["schedule"] = c.schedule;
    j["model"] = model_tag(c.model);
    j["xi"] = c.xi;
    j["bath"] = {{"g2", c.bath.g2}, {"beta", c.bath.beta}, {"omega_c", c.bath.omega_c}};
    j["noise"] = {{"mu", c.noise.mu},
                  {"sigma", c.noise.sigma},
                  {"realizations", c.noise.realizations},
                  {"seed", c.noise.seed},
                  {"sampling", scheme_name(c.noise.scheme)}};
    j["ensemble"] = ensemble_name(c.ensemble);
    j["quadrature_nodes"] = c.quadrature_nodes;
    j["steps"] = c.steps;
    j["dissipator_steps"] = c.dissipator_steps;
    j["grid"] = {{"tau_s", c.tau_values}, {"h", c.h_values}};
    if (c.command != Command::sweep) j["grid"]["s_stop"] = c.s_stop_values;
    if (c.command != Command::sweep) j["grid"]["ramp_duration_s"] = c.ramp_duration;
    if (c.command == Command::fit)
        j["fit"] = {{"reference", c.reference},
                    {"metric", metric_name(c.metric)},
                    {"g2_grid", c.g2_grid},
                    {"sigma_grid", c.sigma_grid},
                    {"mu_grid", c.mu_grid}};
    if (with_output_dir) j["output_dir"] = c.output_dir;
    return j;
}

} // namespace

std::string config_to_json(const RunConfig& c, bool with_output_dir) { return config_object(c, with_output_dir).dump(); }

RunConfig config_from_json(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) doc = Json(doc["config"]);

    RunConfig c;
    Fields f(doc, "config");
    std::string s;
    if (const Json* v = f.find("command")) c.command = parse_command(v->get<std::string>());
    f.get("schedule", c.schedule);
    if (const Json* v = f.find("model")) c.model = parse_model(v->get<std::string>());
    f.get("xi", c.xi);
    if (const Json* v = f.find("bath")) {
        Fields b(*v, "config.bath");
        b.get("g2", c.bath.g2);
        b.get("beta", c.bath.beta);
        b.get("omega_c", c.bath.omega_c);
        b.finish();
    }
    if (const Json* v = f.find("noise")) {
        Fields n(*v, "config.noise");
        n.get("mu", c.noise.mu);
        n.get("sigma", c.noise.sigma);
        n.get("realizations", c.noise.realizations);
        n.get("seed", c.noise.seed);
        if (const Json* w = n.find("sampling")) c.noise.scheme = parse_scheme(w->get<std::string>());
        n.finish();
    }
    if (const Json* v = f.find("ensemble")) c.ensemble = parse_ensemble(v->get<std::string>());
    f.get("quadrature_nodes", c.quadrature_nodes);
    f.get("steps", c.steps);
    f.get("dissipator_steps", c.dissipator_steps);
    if (const Json* v = f.find("grid")) {
        Fields g(*v, "config.grid");
        g.get("tau_s", c.tau_values);
        g.get("h", c.h_values);
        g.get("s_stop", c.s_stop_values);
        g.get("ramp_duration_s", c.ramp_duration);
        g.finish();
    }
    if (const Json* v = f.find("fit")) {
        Fields g(*v, "config.fit");
        g.get("reference", c.reference);
        if (const Json* w = g.find("metric")) c.metric = parse_metric(w->get<std::string>());
        g.get("g2_grid", c.g2_grid);
        g.get("sigma_grid", c.sigma_grid);
        g.get("mu_grid", c.mu_grid);
        g.finish();
    }
    f.get("output_dir", c.output_dir);
    f.finish();
    return c;
}

void RunConfig::resolve_defaults() {
    if (tau_values.empty()) tau_values = published_tau_values();
    if (h_values.empty()) h_values = command == Command::sweep ? published_sweep_h_values() : published_stop_h_values();
    if (s_stop_values.empty() && command != Command::sweep) s_stop_values = published_s_stop_values();
}

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.schedule = std::make_shared<const Schedule>(load_schedule(schedule));
    m.xi = xi;
    m.bath = bath;
    m.noise = noise;
    m.ensemble = ensemble;
    m.quadrature_nodes = quadrature_nodes;
    m.steps = steps;
    m.dissipator_steps = dissipator_steps;
    return m;
}

SweepGrid RunConfig::sweep_grid() const {
    SweepGrid g{h_values, tau_values, model};
    if (g.h_values.empty()) g.h_values = published_sweep_h_values();
    if (g.tau_values.empty()) g.tau_values = published_tau_values();
    return g;
}

StopGrid RunConfig::stop_grid() const {
    StopGrid g{s_stop_values, h_values, tau_values, ramp_duration, model};
    if (g.s_stop_values.empty()) g.s_stop_values = published_s_stop_values();
    if (g.h_values.empty()) g.h_values = published_stop_h_values();
    if (g.tau_values.empty()) g.tau_values = published_tau_values();
    return g;
}

void RunConfig::validate() const {
    if (output_dir.empty()) throw ValidationError("output directory is empty");
    if (command == Command::fit) {
        if (reference.empty()) throw ValidationError("fit needs a reference CSV");
        if (!std::ifstream(reference)) throw ValidationError("cannot open reference file '" + reference + "'");
        ModelConfig m = model_config();
        FitSpec probe;
        probe.reference.rows.push_back({}); // only the grids and model are checked here
        probe.model = model;
        probe.config = m;
        probe.g2_grid = g2_grid;
        probe.sigma_grid = sigma_grid;
        probe.mu_grid = mu_grid;
        probe.ramp_duration = ramp_duration;
        probe.validate();
        if (!(ramp_duration >= kMinRampDuration))
            throw ValidationError("ramp_duration = " + detail::format_double(ramp_duration) +
                                  " s is below the 2 ns hardware floor");
        return;
    }
    model_config().validate(model);
    if (command == Command::sweep)
        sweep_grid().validate();
    else
        stop_grid().validate();
}

// ---------------------------------------------------------------- CSV

namespace {

constexpr std::string_view kHeader = "model,tau_s,h,s_stop,p_down,realizations,seed";

[[noreturn]] void schema_error(std::size_t row, std::size_t line, const std::string& what) {
    throw ValidationError("result CSV schema error at row " + std::to_string(row) + " (line " +
                          std::to_string(line) + "): " + what);
}

} // namespace

void write_result_csv(std::ostream& out, const ResultTable& table, std::string_view config_json) {
    if (!config_json.empty()) out << "# config: " << config_json << '\n';
    out << kHeader << '\n';
    for (const auto& r : table.rows) {
        out << model_tag(r.model) << ',' << detail::format_double(r.tau_s) << ',' << detail::format_double(r.h) << ',';
        if (r.s_stop) out << detail::format_double(*r.s_stop);
        out << ',' << detail::format_double(r.p_down) << ',' << r.realizations << ',' << r.seed << '\n';
    }
}

ResultTable read_result_csv(std::istream& in) {
    ResultTable t;
    std::string line;
    std::size_t line_no = 0, row_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view v = detail::trim(line);
        if (v.empty() || v.front() == '#') continue;
        if (!header) {
            if (v != kHeader)
                throw ValidationError("result CSV schema error: expected header '" + std::string(kHeader) + "' at line " +
                                      std::to_string(line_no));
            header = true;
            continue;
        }
        ++row_no;
        const auto cols = detail::split(v, ',');
        if (cols.size() != 7) schema_error(row_no, line_no, "expected 7 columns, got " + std::to_string(cols.size()));
        ResultRow r;
        try {
            r.model = parse_model(detail::trim(cols[0]));
        } catch (const ValidationError& e) {
            schema_error(row_no, line_no, e.what());
        }
        auto number = [&](std::size_t col, const char* name) {
            double x = 0.0;
            if (!detail::parse_double(detail::trim(cols[col]), x) || !std::isfinite(x))
                schema_error(row_no, line_no, std::string(name) + " is not a finite number");
            return x;
        };
        r.tau_s = number(1, "tau_s");
        r.h = number(2, "h");
        if (!detail::trim(cols[3]).empty()) r.s_stop = number(3, "s_stop");
        r.p_down = number(4, "p_down");
        if (r.p_down < -1e-9 || r.p_down > 1.0 + 1e-9) schema_error(row_no, line_no, "p_down outside [0, 1]");
        double reals = number(5, "realizations");
        if (reals < 1 || reals != std::floor(reals)) schema_error(row_no, line_no, "realizations must be a positive integer");
        r.realizations = static_cast<int>(reals);
        const std::string_view seed = detail::trim(cols[6]);
        const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), r.seed);
        if (ec != std::errc() || ptr != seed.data() + seed.size() || seed.empty())
            schema_error(row_no, line_no, "seed is not an unsigned integer");
        t.rows.push_back(r);
    }
    if (!header) throw ValidationError("result CSV schema error: missing header");
    return t;
}

ResultTable load_result_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open result CSV '" + path + "'");
    try {
        return read_result_csv(in);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- JSON reports

std::string result_metadata_json(const RunConfig& c, const ResultTable& table) {
    Json j;
    j["code_version"] = kCodeVersion;
    j["command"] = command_name(c.command);
    j["schedule"] = c.schedule;
    j["model"] = model_tag(c.model);
    j["bath"] = {{"g2", c.bath.g2}, {"beta", c.bath.beta}, {"omega_c", c.bath.omega_c}};
    j["noise"] = {{"mu", c.noise.mu}, {"sigma", c.noise.sigma}, {"seed", c.noise.seed}};
    if (c.command == Command::stop) j["ramp_duration_s"] = c.ramp_duration;
    j["rows"] = table.rows.size();
    j["config"] = config_object(c, false);
    return j.dump(2) + "\n";
}

std::string fit_report_json(const RunConfig& c, const FitReport& r) {
    Json j;
    j["code_version"] = kCodeVersion;
    j["model"] = model_tag(r.model);
    j["metric"] = metric_name(r.metric);
    j["g2"] = r.g2 ? Json(*r.g2) : Json(nullptr);
    j["mu"] = r.mu;
    Json sig = Json::array();
    for (const auto& ts : r.sigma_per_tau)
        sig.push_back({{"tau_s", ts.tau}, {"sigma", ts.sigma ? Json(*ts.sigma) : Json(nullptr)}});
    j["sigma_per_tau"] = sig;
    j["total_distance"] = r.total_distance;
    Json series = Json::array();
    for (const auto& s : r.series)
        series.push_back({{"tau_s", s.tau}, {"h", s.h}, {"points", s.points}, {"distance", s.distance}});
    j["series"] = series;
    j["evaluations"] = r.evaluations;
    Json fails = Json::array();
    for (const auto& f : r.failures)
        fails.push_back({{"g2", f.g2}, {"mu", f.mu}, {"sigma", f.sigma}, {"message", f.message}});
    j["failures"] = fails;
    j["config"] = config_object(c, false);
    return j.dump(2) + "\n";
}

void write_residual_csv(std::ostream& out, const FitReport& r) {
    out << "tau_s,h,points,distance\n";
    for (const auto& s : r.series)
        out << detail::format_double(s.tau) << ',' << detail::format_double(s.h) << ',' << s.points << ','
            << detail::format_double(s.distance) << '\n';
}

} // namespace anneal
