#include "anneal/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "anneal/errors.hpp"

namespace anneal {

namespace pauli {
Matrix2c identity() { return Matrix2c::Identity(); }
Matrix2c x() {
    Matrix2c m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}
Matrix2c y() {
    using namespace std::complex_literals;
    Matrix2c m;
    m << 0.0, -1.0i, 1.0i, 0.0;
    return m;
}
Matrix2c z() {
    Matrix2c m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
} // namespace pauli

void QubitParams::validate() const {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw ValidationError("xi must be positive");
    if (!(std::abs(h) <= 1.0)) throw ValidationError("h must lie in [-1, 1]");
    if (!std::isfinite(delta_z)) throw ValidationError("delta_z must be finite");
}

void BathParams::validate() const {
    if (!(g2 >= 0.0) || !std::isfinite(g2)) throw ValidationError("g2 must be non-negative");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw ValidationError("omega_c must be positive");
}

Matrix2c Hamiltonian2x2::matrix() const { return hx * pauli::x() + hz * pauli::z(); }

double Hamiltonian2x2::norm() const { return std::hypot(hx, hz); }

EigenSystem eigendecompose(const Hamiltonian2x2& h) {
    EigenSystem es;
    const double r = h.norm();
    if (r == 0.0) {
        es.v0 = Vector2c(1.0, 0.0);
        es.v1 = Vector2c(0.0, 1.0);
        return es;
    }
    // H = r n.sigma with n = (sin phi, 0, cos phi); +r eigenvector is the
    // spin-up state along n, real-valued.
    const double phi = std::atan2(h.hx, h.hz);
    const double c = std::cos(0.5 * phi);
    const double sn = std::sin(0.5 * phi);
    Eigen::Vector2d up(c, sn);
    Eigen::Vector2d down(-sn, c);
    auto fix_gauge = [](Eigen::Vector2d v) {
        const double lead = v[0] != 0.0 ? v[0] : v[1];
        return lead < 0.0 ? Eigen::Vector2d(-v) : v;
    };
    es.e0 = -r;
    es.e1 = r;
    es.v0 = fix_gauge(down).cast<std::complex<double>>();
    es.v1 = fix_gauge(up).cast<std::complex<double>>();
    return es;
}

double default_degeneracy_tol(const Hamiltonian2x2& h) {
    return 1e-9 * std::max({std::abs(h.hx), std::abs(h.hz), 1.0});
}

std::vector<double> bohr_frequencies(const EigenSystem& es, double degeneracy_tol) {
    const double gap = es.e1 - es.e0;
    if (gap < degeneracy_tol) return {0.0};
    return {-gap, 0.0, gap};
}

std::vector<LindbladChannel> lindblad_operators(const EigenSystem& es, double degeneracy_tol) {
    const auto omegas = bohr_frequencies(es, degeneracy_tol);
    std::vector<LindbladChannel> channels;
    channels.reserve(omegas.size());
    for (double w : omegas) channels.push_back({w, Matrix2c::Zero()});

    const Vector2c* vecs[2] = {&es.v0, &es.v1};
    const double energies[2] = {es.e0, es.e1};
    const Matrix2c sz = pauli::z();
    const bool collapsed = omegas.size() == 1;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double w = energies[b] - energies[a];
            std::size_t idx = 0;
            if (!collapsed) idx = (a == b) ? 1 : (w > 0.0 ? 2 : 0);
            const std::complex<double> elem = vecs[a]->adjoint() * sz * (*vecs[b]);
            channels[idx].op += elem * (*vecs[a]) * vecs[b]->adjoint();
        }
    }
    return channels;
}

double ohmic_rate(double omega, const BathParams& bath) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double pref = two_pi * bath.g2;
    if (omega == 0.0) return pref / bath.beta;
    const double aw = std::abs(omega);
    const double x = bath.beta * aw;
    const double cutoff = std::exp(-aw / bath.omega_c);
    // w / (1 - e^{-beta w}) for w > 0, and |w| e^{-beta|w|} / (1 - e^{-beta|w|}) for w < 0.
    const double denom = -std::expm1(-x);
    const double bose = omega > 0.0 ? aw / denom : aw * std::exp(-x) / denom;
    return pref * bose * cutoff;
}

} // namespace anneal
