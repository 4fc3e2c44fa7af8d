#include "anneal/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "anneal/errors.hpp"
#include "text_util.hpp"

namespace anneal {

std::string_view metric_name(Metric m) {
    switch (m) {
    case Metric::l1: return "l1";
    case Metric::l2: return "l2";
    case Metric::linf: return "linf";
    }
    return "l1";
}

Metric parse_metric(std::string_view name) {
    if (name == "l1") return Metric::l1;
    if (name == "l2") return Metric::l2;
    if (name == "linf") return Metric::linf;
    throw ValidationError("unknown metric '" + std::string(name) + "' (l1|l2|linf)");
}

double curve_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size())
        throw ValidationError("curve_distance: length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    if (a.empty()) throw ValidationError("curve_distance: empty curves");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        switch (metric) {
        case Metric::l1: acc += d; break;
        case Metric::l2: acc += d * d; break;
        case Metric::linf: acc = std::max(acc, d); break;
        }
    }
    return metric == Metric::l2 ? std::sqrt(acc) : acc;
}

std::vector<double> default_g2_grid() { return {0.0, 1e-7, 3e-7, 1e-6, 3e-6, 1e-5}; }

std::vector<double> default_sigma_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 15; ++i) out.push_back((4.0 * i) / 1000.0);
    return out;
}

namespace {

void check_grid(const std::vector<double>& g, const char* name, bool non_negative) {
    if (g.empty()) throw ValidationError(std::string(name) + " grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) throw ValidationError(std::string(name) + " grid has a non-finite value");
        if (non_negative && g[i] < 0.0) throw ValidationError(std::string(name) + " grid has a negative value");
        if (i > 0 && !(g[i] > g[i - 1])) throw ValidationError(std::string(name) + " grid must be strictly ascending");
    }
}

// One (tau, h) series of the reference, rows in table order.
struct Series {
    double tau;
    double h;
    std::vector<std::size_t> rows;
};

std::vector<Series> split_series(const ResultTable& t) {
    std::vector<Series> out;
    std::map<std::pair<double, double>, std::size_t> index;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto key = std::make_pair(t.rows[i].tau_s, t.rows[i].h);
        auto [it, fresh] = index.try_emplace(key, out.size());
        if (fresh) out.push_back({key.first, key.second, {}});
        out[it->second].rows.push_back(i);
    }
    return out;
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

void FitSpec::validate() const {
    if (reference.rows.empty()) throw ValidationError("reference table is empty");
    for (std::size_t i = 0; i < reference.rows.size(); ++i) {
        const auto& r = reference.rows[i];
        if (!std::isfinite(r.p_down) || !std::isfinite(r.tau_s) || !std::isfinite(r.h) ||
            (r.s_stop && !std::isfinite(*r.s_stop)))
            throw ValidationError("reference row " + std::to_string(i) + " has a non-finite value");
    }
    check_grid(g2_grid, "g2", true);
    check_grid(sigma_grid, "sigma", true);
    check_grid(mu_grid, "mu", false);
    if (!(ramp_duration > 0.0)) throw ValidationError("ramp_duration must be positive");
    ModelConfig probe = config;
    probe.bath.g2 = g2_grid.front();
    probe.noise.sigma = sigma_grid.front();
    probe.noise.mu = mu_grid.front();
    probe.validate(model);
}

ResultTable simulate_like(const ResultTable& reference, ModelKind model, const ModelConfig& cfg,
                          double ramp_duration, const RunOptions& opts) {
    // Per tau, the union of the reference's h and s_stop values forms one
    // rectangular grid; rows are then looked up by exact coordinates.
    std::vector<double> taus;
    for (const auto& r : reference.rows)
        if (std::find(taus.begin(), taus.end(), r.tau_s) == taus.end()) taus.push_back(r.tau_s);

    using Key = std::tuple<double, double, bool, double>; // tau, h, is_stop, s_stop
    std::map<Key, const ResultRow*> found;
    std::vector<ResultTable> runs;
    runs.reserve(2 * taus.size());
    for (double tau : taus) {
        std::vector<double> sweep_h, stop_h, stops;
        for (const auto& r : reference.rows) {
            if (r.tau_s != tau) continue;
            if (r.s_stop) {
                stop_h.push_back(r.h);
                stops.push_back(*r.s_stop);
            } else {
                sweep_h.push_back(r.h);
            }
        }
        if (!sweep_h.empty()) {
            SweepGrid g{sorted_unique(std::move(sweep_h)), {tau}, model};
            runs.push_back(run_h_sweep(g, cfg, opts));
        }
        if (!stop_h.empty()) {
            StopGrid g{sorted_unique(std::move(stops)), sorted_unique(std::move(stop_h)), {tau}, ramp_duration, model};
            runs.push_back(run_h_stop(g, cfg, opts));
        }
    }
    for (const auto& t : runs)
        for (const auto& r : t.rows) found[{r.tau_s, r.h, r.s_stop.has_value(), r.s_stop.value_or(0.0)}] = &r;

    ResultTable out;
    out.rows.reserve(reference.rows.size());
    for (const auto& r : reference.rows) {
        const auto it = found.find({r.tau_s, r.h, r.s_stop.has_value(), r.s_stop.value_or(0.0)});
        if (it == found.end()) throw SolverError("internal: simulated grid misses a reference coordinate");
        out.rows.push_back(*it->second);
    }
    return out;
}

FitReport grid_search_fit(const FitSpec& spec, const RunOptions& opts) {
    spec.validate();
    const bool open = is_open(spec.model);
    const bool noisy = is_noisy(spec.model);
    const std::vector<double> g2s = open ? spec.g2_grid : std::vector<double>{spec.config.bath.g2};
    const std::vector<double> mus = noisy ? spec.mu_grid : std::vector<double>{spec.config.noise.mu};
    const std::vector<double> sigmas = noisy ? spec.sigma_grid : std::vector<double>{0.0};

    const std::vector<Series> series = split_series(spec.reference);
    std::vector<double> taus;
    for (const auto& s : series)
        if (std::find(taus.begin(), taus.end(), s.tau) == taus.end()) taus.push_back(s.tau);

    FitReport rep;
    rep.model = spec.model;
    rep.metric = spec.metric;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // Per (g2, mu): best sigma per tau, scanned in ascending order so ties
    // keep the smaller value.
    struct Best {
        double total = kInf;
        std::size_t g = 0, m = 0;
        std::vector<std::size_t> sigma_index;
        std::vector<double> series_distance;
    } best;

    std::vector<double> ref_p, sim_p;
    for (std::size_t gi = 0; gi < g2s.size(); ++gi) {
        for (std::size_t mi = 0; mi < mus.size(); ++mi) {
            // dist[k][series]
            std::vector<std::vector<double>> dist(sigmas.size(), std::vector<double>(series.size(), kInf));
            for (std::size_t k = 0; k < sigmas.size(); ++k) {
                ModelConfig cfg = spec.config;
                cfg.bath.g2 = g2s[gi];
                cfg.noise.mu = mus[mi];
                cfg.noise.sigma = sigmas[k];
                ++rep.evaluations;
                ResultTable sim;
                try {
                    sim = simulate_like(spec.reference, spec.model, cfg, spec.ramp_duration, opts);
                } catch (const SolverError& e) {
                    rep.failures.push_back({g2s[gi], mus[mi], sigmas[k], e.what()});
                    continue;
                }
                for (std::size_t si = 0; si < series.size(); ++si) {
                    ref_p.clear();
                    sim_p.clear();
                    for (std::size_t row : series[si].rows) {
                        ref_p.push_back(spec.reference.rows[row].p_down);
                        sim_p.push_back(sim.rows[row].p_down);
                    }
                    dist[k][si] = curve_distance(ref_p, sim_p, spec.metric);
                }
            }
            double total = 0.0;
            std::vector<std::size_t> pick(taus.size(), 0);
            for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                double tau_best = kInf;
                for (std::size_t k = 0; k < sigmas.size(); ++k) {
                    double sum = 0.0;
                    for (std::size_t si = 0; si < series.size(); ++si)
                        if (series[si].tau == taus[ti]) sum += dist[k][si];
                    if (sum < tau_best) {
                        tau_best = sum;
                        pick[ti] = k;
                    }
                }
                total += tau_best;
            }
            if (total < best.total) {
                best.total = total;
                best.g = gi;
                best.m = mi;
                best.sigma_index = pick;
                best.series_distance.assign(series.size(), kInf);
                for (std::size_t si = 0; si < series.size(); ++si) {
                    const auto ti = static_cast<std::size_t>(std::find(taus.begin(), taus.end(), series[si].tau) -
                                                             taus.begin());
                    best.series_distance[si] = dist[pick[ti]][si];
                }
            }
        }
    }
    if (!std::isfinite(best.total)) {
        std::string msg = "grid search failed: no grid point could be simulated";
        if (!rep.failures.empty()) msg += " (first failure: " + rep.failures.front().message + ")";
        throw SolverError(msg);
    }

    if (open) rep.g2 = g2s[best.g];
    rep.mu = noisy ? mus[best.m] : 0.0;
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        TauSigma ts{taus[ti], std::nullopt};
        if (noisy) ts.sigma = sigmas[best.sigma_index[ti]];
        rep.sigma_per_tau.push_back(ts);
    }
    for (std::size_t si = 0; si < series.size(); ++si)
        rep.series.push_back({series[si].tau, series[si].h, series[si].rows.size(), best.series_distance[si]});
    rep.total_distance = best.total;
    return rep;
}

std::vector<std::pair<double, double>> sigma_trend(const FitReport& report) {
    if (!is_noisy(report.model)) throw ValidationError("sigma trend needs a noisy model fit");
    if (report.sigma_per_tau.size() < 2) throw ValidationError("need ≥ 2 τ values");
    std::vector<std::pair<double, double>> out;
    for (const auto& ts : report.sigma_per_tau) out.emplace_back(ts.tau, ts.sigma.value_or(0.0));
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman needs two samples of equal size >= 2");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace anneal
