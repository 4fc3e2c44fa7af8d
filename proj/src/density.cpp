#include "anneal/density.hpp"

#include <algorithm>
#include <cmath>

namespace anneal {

DensityMatrix DensityMatrix::from_bloch(double t, double x, double y, double z) {
    Matrix2c m;
    m(0, 0) = 0.5 * (t + z);
    m(1, 1) = 0.5 * (t - z);
    m(0, 1) = std::complex<double>(0.5 * x, -0.5 * y);
    m(1, 0) = std::complex<double>(0.5 * x, 0.5 * y);
    return DensityMatrix(m);
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

double DensityMatrix::hermiticity_error() const {
    return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    const Matrix2c h = 0.5 * (rho_ + rho_.adjoint());
    const double a = h(0, 0).real();
    const double d = h(1, 1).real();
    const double off = std::abs(h(0, 1));
    return 0.5 * (a + d) - std::hypot(0.5 * (a - d), off);
}

DensityMatrix initial_state() { return DensityMatrix(Matrix2c::Constant(0.5)); }

double measure_down(const DensityMatrix& rho) { return std::clamp(rho(1, 1).real(), 0.0, 1.0); }

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    // Eigenvalues of a Hermitian 2x2 difference D are tr/2 +- sqrt((d00-d11)^2/4 + |d01|^2).
    const Matrix2c d = 0.5 * ((a.matrix() - b.matrix()) + (a.matrix() - b.matrix()).adjoint());
    const double mean = 0.5 * (d(0, 0).real() + d(1, 1).real());
    const double rad = std::hypot(0.5 * (d(0, 0).real() - d(1, 1).real()), std::abs(d(0, 1)));
    return 0.5 * (std::abs(mean + rad) + std::abs(mean - rad));
}

} // namespace anneal
