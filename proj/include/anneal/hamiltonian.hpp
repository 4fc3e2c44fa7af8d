// hamiltonian.hpp: single-qubit annealing Hamiltonian, eigensystem, Lindblad
// channels and the Ohmic bath rate.

#pragma once

#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "anneal/schedule.hpp"

namespace anneal {

using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

namespace pauli {
Matrix2c identity();
Matrix2c x();
Matrix2c y();
Matrix2c z();
} // namespace pauli

struct QubitParams {
    double xi = 1.0;      // transverse-field scale
    double h = 0.0;       // programmed longitudinal field, |h| <= 1
    double delta_z = 0.0; // realized static field offset, in units of B(1)

    void validate() const;
};

namespace constants {
inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K
} // namespace constants

// Inverse temperature beta = hbar / (k_B T) in seconds.
constexpr double beta_from_temperature(double kelvin) { return constants::hbar / (constants::k_boltzmann * kelvin); }

inline constexpr double kDefaultTemperature = 13.5e-3; // K
inline constexpr double kDefaultBeta = beta_from_temperature(kDefaultTemperature);
inline constexpr double kDefaultOmegaC = 2.0 * std::numbers::pi * 4e9; // rad/s
inline constexpr double kDefaultG2 = 1e-6;

struct BathParams {
    double g2 = kDefaultG2;
    double beta = kDefaultBeta;       // seconds
    double omega_c = kDefaultOmegaC;  // rad/s

    void validate() const;
};

// H = hx sigma^x + hz sigma^z, coefficients in rad/s.
struct Hamiltonian2x2 {
    double hx = 0.0;
    double hz = 0.0;

    Matrix2c matrix() const;
    double norm() const; // spectral norm, sqrt(hx^2 + hz^2)
};

// Eigenpairs with e0 <= e1. Gauge: first nonzero component real and positive.
struct EigenSystem {
    double e0 = 0.0;
    double e1 = 0.0;
    Vector2c v0;
    Vector2c v1;
};

// hx = -2 pi A(s) xi, hz = 2 pi (B(s) k(s) h + B(1) dz). The noise term is not
// gated by k(s). This is the only place Hz is converted to rad/s.
inline Hamiltonian2x2 build_hamiltonian(const Schedule& schedule, const HGainProfile* profile,
                                        const QubitParams& qubit, double s) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto [a, b] = schedule(s);
    const double k = profile ? (*profile)(s) : 1.0;
    return {-two_pi * a * qubit.xi, two_pi * (b * k * qubit.h + schedule.b_final() * qubit.delta_z)};
}

inline Hamiltonian2x2 build_hamiltonian(const Schedule& schedule, const std::optional<HGainProfile>& profile,
                                        const QubitParams& qubit, double s) {
    return build_hamiltonian(schedule, profile ? &*profile : nullptr, qubit, s);
}

EigenSystem eigendecompose(const Hamiltonian2x2& h);

// 1e-9 * max(|hx|, |hz|, 1) rad/s.
double default_degeneracy_tol(const Hamiltonian2x2& h);

// Sorted ascending: {-(E1-E0), 0, E1-E0}, or {0} when E1-E0 < tol.
std::vector<double> bohr_frequencies(const EigenSystem& es, double degeneracy_tol);

struct LindbladChannel {
    double omega;
    Matrix2c op;
};

// sigma^z jump operators sorted by Bohr frequency, one per entry of
// bohr_frequencies. Sum over channels reproduces sigma^z.
std::vector<LindbladChannel> lindblad_operators(const EigenSystem& es, double degeneracy_tol);

// Ohmic rate 2 pi g^2 w e^{-|w|/wc} / (1 - e^{-beta w}); the w = 0 limit is
// 2 pi g^2 / beta. Evaluated without overflow for large |beta w|.
double ohmic_rate(double omega, const BathParams& bath);

} // namespace anneal
