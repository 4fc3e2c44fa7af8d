// density.hpp: qubit density matrices and the diagnostics used throughout.

#pragma once

#include "anneal/hamiltonian.hpp"

namespace anneal {

// 2x2 complex density matrix. Basis order is (|up>, |down>) = (|0>, |1>).
// The constructor does not enforce the physical invariants; use the
// diagnostics below (solvers assert them in tests).
class DensityMatrix {
public:
    DensityMatrix() : rho_(Matrix2c::Zero()) {}
    explicit DensityMatrix(const Matrix2c& rho) : rho_(rho) {}

    // rho = (t I + x sigma^x + y sigma^y + z sigma^z) / 2
    static DensityMatrix from_bloch(double t, double x, double y, double z);

    const Matrix2c& matrix() const noexcept { return rho_; }
    std::complex<double> operator()(int r, int c) const { return rho_(r, c); }

    double trace() const { return rho_.trace().real(); }
    double purity() const; // Tr rho^2
    double expectation_x() const { return 2.0 * rho_(0, 1).real(); }
    double expectation_y() const { return -2.0 * rho_(0, 1).imag(); }
    double expectation_z() const { return (rho_(0, 0) - rho_(1, 1)).real(); }

    double hermiticity_error() const; // max |rho - rho^dagger|
    double min_eigenvalue() const;    // of the Hermitian part

private:
    Matrix2c rho_;
};

// |+><+|, the ground state of -A sigma^x.
DensityMatrix initial_state();

// Re rho_11 (the |down><down| element), clamped to [0,1].
double measure_down(const DensityMatrix& rho);

// (1/2) || a - b ||_1
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

} // namespace anneal
