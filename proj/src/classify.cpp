#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "anneal/errors.hpp"
#include "anneal/protocols.hpp"

namespace anneal {

namespace {

using Vec4 = Eigen::Vector4d; // (a, b, m, c)

// 1 / (1 + e^{-x}) without overflow on either side.
double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct Residuals {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    double cost = 0.0;
};

Residuals evaluate(const std::vector<CurvePoint>& pts, const Vec4& p, bool with_jacobian) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Residuals out;
    out.r.resize(n);
    if (with_jacobian) out.j.resize(n, 4);
    const double a = p[0], b = p[1], m = p[2], c = p[3];
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = pts[static_cast<std::size_t>(i)].s_stop;
        const double l = logistic(c * (s - m));
        out.r[i] = a + (b - a) * l - pts[static_cast<std::size_t>(i)].p_down;
        if (with_jacobian) {
            const double dl = l * (1.0 - l);
            out.j(i, 0) = 1.0 - l;
            out.j(i, 1) = l;
            out.j(i, 2) = -(b - a) * c * dl;
            out.j(i, 3) = (b - a) * (s - m) * dl;
        }
    }
    out.cost = out.r.squaredNorm();
    return out;
}

double mean_of(const std::vector<CurvePoint>& pts, std::size_t from, std::size_t count) {
    double sum = 0.0;
    for (std::size_t i = from; i < from + count; ++i) sum += pts[i].p_down;
    return sum / static_cast<double>(count);
}

Vec4 initial_guess(const std::vector<CurvePoint>& pts) {
    const std::size_t n = pts.size();
    const double a = mean_of(pts, 0, 3);
    const double b = mean_of(pts, n - 3, 3);
    const double half = 0.5 * (a + b);
    double m = 0.5 * (pts.front().s_stop + pts.back().s_stop);
    for (std::size_t i = 1; i < n; ++i) {
        const double y0 = pts[i - 1].p_down - half, y1 = pts[i].p_down - half;
        if (y0 == 0.0) {
            m = pts[i - 1].s_stop;
            break;
        }
        if ((y0 < 0.0) != (y1 < 0.0)) {
            m = pts[i - 1].s_stop + (pts[i].s_stop - pts[i - 1].s_stop) * y0 / (y0 - y1);
            break;
        }
    }
    double steepest = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = (pts[i].p_down - pts[i - 1].p_down) / (pts[i].s_stop - pts[i - 1].s_stop);
        if (std::abs(d) > std::abs(steepest)) steepest = d;
    }
    const double span = b - a;
    double c = std::abs(span) > 1e-12 ? 4.0 * steepest / span : 10.0;
    if (!std::isfinite(c) || c == 0.0) c = 10.0;
    return {a, b, m, c};
}

} // namespace

CurveFeatures classify_curve(const std::vector<CurvePoint>& curve) {
    if (curve.size() < 10) throw ValidationError("classify_curve needs at least 10 points");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (!std::isfinite(curve[i].s_stop) || !std::isfinite(curve[i].p_down))
            throw ValidationError("classify_curve: non-finite point " + std::to_string(i));
        if (i > 0 && !(curve[i].s_stop > curve[i - 1].s_stop))
            throw ValidationError("classify_curve: points must be sorted by s_stop");
    }

    constexpr int kMaxIterations = 500;
    Vec4 p = initial_guess(curve);
    Residuals cur = evaluate(curve, p, true);
    double lambda = 1e-3;
    bool converged = cur.cost == 0.0;
    int it = 0;
    for (; it < kMaxIterations && !converged; ++it) {
        const Eigen::Matrix4d jtj = cur.j.transpose() * cur.j;
        const Vec4 g = cur.j.transpose() * cur.r;
        bool accepted = false;
        while (!accepted && lambda < 1e16) {
            Eigen::Matrix4d a = jtj;
            for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Vec4 step = a.ldlt().solve(-g);
            const Vec4 trial = p + step;
            const Residuals next = evaluate(curve, trial, true);
            if (std::isfinite(next.cost) && next.cost <= cur.cost) {
                const double drop = cur.cost - next.cost;
                const bool tiny_step = step.norm() <= 1e-14 * (1.0 + p.norm());
                p = trial;
                cur = next;
                lambda = std::max(lambda / 3.0, 1e-15);
                accepted = true;
                if (cur.cost <= 1e-30 || tiny_step || drop <= 1e-16 * cur.cost) converged = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) {
            converged = g.lpNorm<Eigen::Infinity>() <= 1e-12; // stuck at a stationary point
            break;
        }
    }

    CurveFeatures f;
    f.iterations = it;
    f.residual_rms = std::sqrt(cur.cost / static_cast<double>(curve.size()));
    double a = p[0], b = p[1], m = p[2], c = p[3];
    if (c < 0.0) { // same curve with the levels swapped
        std::swap(a, b);
        c = -c;
    }
    const bool finite = std::isfinite(a) && std::isfinite(b) && std::isfinite(m) && std::isfinite(c);
    // a midpoint beyond the data is not a transition the curve shows
    const bool inside = finite && m >= curve.front().s_stop && m <= curve.back().s_stop;
    f.converged = converged && inside;
    if (f.converged) {
        f.plateau = a;
        f.saturation = b;
        f.midpoint = m;
        f.slope = c * (b - a) / 4.0;
        return f;
    }
    f.plateau = mean_of(curve, 0, 3);
    f.saturation = mean_of(curve, curve.size() - 3, 3);
    f.midpoint = finite ? m : std::numeric_limits<double>::quiet_NaN();
    f.slope = finite ? c * (b - a) / 4.0 : std::numeric_limits<double>::quiet_NaN();
    f.diagnostic = converged && finite ? "fitted midpoint " + std::to_string(m) + " lies outside the sampled s_stop range"
                                       : "logistic fit did not converge after " + std::to_string(it) + " iterations";
    f.diagnostic += "; residual rms = " + std::to_string(f.residual_rms);
    return f;
}

std::vector<CurvePoint> extract_curve(const ResultTable& table, double tau, double h) {
    std::vector<CurvePoint> out;
    for (const auto& r : table.rows)
        if (r.tau_s == tau && r.h == h && r.s_stop) out.push_back({*r.s_stop, r.p_down});
    return out;
}

} // namespace anneal
