// Independent reference formulas and random generators for the test suites.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atspec/core/algebra.hpp"
#include "atspec/model/config.hpp"

namespace oracle {

using atspec::cplx;

/// Generalised Laguerre polynomial L_n^{(a)}(x) by the three-term recurrence.
inline double laguerre(int n, int a, double x) {
    if (n == 0) return 1.0;
    double l0 = 1.0, l1 = 1.0 + a - x;
    for (int k = 1; k < n; ++k) {
        const double l2 = ((2.0 * k + 1.0 + a - x) * l1 - (k + a) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    return l1;
}

/// ⟨m|exp(−iη(a+a†))|n⟩·e^{η²/2} from the closed form in terms of Laguerre polynomials.
inline cplx displacement_element(double eta, int m, int n) {
    const int lo = std::min(m, n), d = std::abs(m - n);
    double ratio = 1.0;   // lo!/hi!
    for (int k = lo + 1; k <= lo + d; ++k) ratio /= k;
    cplx phase = 1.0;
    for (int k = 0; k < d; ++k) phase *= cplx(0.0, -eta);
    return phase * std::sqrt(ratio) * laguerre(lo, d, eta * eta);
}

inline double dressed_energy(double g, int n_eff, double omega_p) { return std::sqrt(g * g * n_eff + omega_p * omega_p); }

inline double golden_rule_fwhm_rsb(double gamma, double kappa, double nth, int n) {
    return gamma + kappa * (2.0 * n * (2.0 * nth + 1.0) - 1.0);
}

inline double golden_rule_fwhm_bsb(double gamma, double kappa, double nth, int n) {
    return gamma + kappa * (2.0 * n * (2.0 * nth + 1.0) + 4.0 * nth + 1.0);
}

/// Population of the upper level of a resonant two-level system with H = Ω(σ+σ†).
inline double rabi_population(double omega, double t) {
    const double s = std::sin(omega * t);
    return s * s;
}

/// Two-level Rabi formula with detuning δ (H = Ω(σ+σ†) − δ|e⟩⟨e|).
inline double detuned_rabi_population(double omega, double delta, double t) {
    const double w = std::sqrt(omega * omega + 0.25 * delta * delta);
    const double s = std::sin(w * t);
    return omega * omega / (w * w) * s * s;
}

inline double thermal_population(double n_bar, int n) { return std::pow(n_bar, n) / std::pow(n_bar + 1.0, n + 1); }

/// Transfer probability of a sideband pulse calibrated to level c acting on level n.
inline double miscalibrated_transfer(int n_eff, int c_eff) {
    const double s = std::sin(std::numbers::pi / 2.0 * std::sqrt(static_cast<double>(n_eff) / c_eff));
    return s * s;
}

inline double gaussian(double x, double c, double fwhm) {
    const double u = (x - c) / fwhm;
    return std::exp(-4.0 * std::log(2.0) * u * u);
}

}  // namespace oracle

namespace gen {

using atspec::cplx;

/// Small hand-rolled property-test source. Each case gets its own seeded stream
/// so a failure can be replayed from the reported case index.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
    double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }

    atspec::Operator hermitian(int dim, double scale = 1.0) {
        atspec::Operator m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = cplx(uniform(-1, 1), uniform(-1, 1));
        return scale * 0.5 * (m + m.adjoint());
    }

    atspec::Operator matrix(int rows, int cols) {
        atspec::Operator m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = cplx(uniform(-1, 1), uniform(-1, 1));
        return m;
    }

    atspec::StateVector state(int dim) {
        atspec::StateVector v(dim);
        for (int i = 0; i < dim; ++i) v(i) = cplx(uniform(-1, 1), uniform(-1, 1));
        return v.normalized();
    }

    /// Random mixed state of given rank.
    atspec::DensityMatrix density(int dim, int rank) {
        const atspec::Operator a = matrix(dim, rank);
        atspec::Operator r = a * a.adjoint();
        r /= r.trace().real();
        return atspec::DensityMatrix(0.5 * (r + r.adjoint()));
    }

    /// Random incoherent Fock mixture on 0..top, zero elsewhere.
    Eigen::VectorXd fock_weights(int fock_dim, int top) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(fock_dim);
        for (int n = 0; n <= top; ++n) w(n) = uniform(0.05, 1.0);
        return w / w.sum();
    }

    atspec::SystemConfig config(int fock_dim = 12) {
        atspec::SystemConfig c;
        c.eta = uniform(0.02, 0.12);
        c.omega_c = atspec::kTwoPi * uniform(3e3, 30e3) / c.eta;
        c.omega_p = atspec::kTwoPi * uniform(100.0, 3e3);
        c.phi_p = uniform(-3.0, 3.0);
        c.phi_c = uniform(-3.0, 3.0);
        c.fock_dim = fock_dim;
        return c;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

template <class Fn>
void for_all(int cases, std::uint64_t seed, Fn&& fn) {
    for (int i = 0; i < cases; ++i) {
        Gen g(seed * 1000003ULL + static_cast<std::uint64_t>(i));
        fn(g, i);
    }
}

}  // namespace gen
