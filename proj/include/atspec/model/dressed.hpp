// dressed.hpp: closed-form dressed states, linewidths and thermal states

#pragma once

#include <array>
#include <cmath>
#include <string>

#include "atspec/core/algebra.hpp"
#include "atspec/model/config.hpp"
#include "atspec/model/hamiltonian.hpp"

namespace atspec {

/// Composite indices of the three-state block {|S,n⟩, |D,n⟩, |D',n+s⟩} seen by a
/// probe starting in |D,n⟩. The D' index is -1 when it falls outside the space.
inline std::array<int, 3> dressed_block_indices(const HilbertSpec& spec, SidebandRegime regime, int n) {
    const int k = n + sideband_shift(regime);
    return {spec.index(Level::S, n), spec.index(Level::D, n), spec.contains(k) ? spec.index(Level::DPrime, k) : -1};
}

struct DressedTriple {
    int n = 0;
    double e_minus = 0.0;
    double e_zero = 0.0;
    double e_plus = 0.0;
    // Block vectors in the (|S,n⟩, |D,n⟩, |D',n+s⟩) basis.
    Eigen::Vector3cd dark_state = Eigen::Vector3cd::Zero();
    Eigen::Vector3cd plus_state = Eigen::Vector3cd::Zero();
    Eigen::Vector3cd minus_state = Eigen::Vector3cd::Zero();
    bool degenerate = false;
    std::string note;
};

/// Closed-form eigensystem of the resonant three-state block. Eigenvalues
/// (0, ±√(|g|²n_eff + Ω_P²)) at first order.
inline DressedTriple dressed_analysis(const SystemConfig& cfg, SidebandRegime regime, int n,
                                      CouplingOrder order = CouplingOrder::FirstOrder) {
    if (n < 0) throw InvalidArgument("dressed_analysis: n must be >= 0");
    const int shift = sideband_shift(regime);
    Operator exact;
    if (order == CouplingOrder::Exact) exact = normalized_displacement(cfg.eta, n + 2);

    const cplx p = cfg.omega_p * std::exp(kI * cfg.phi_p) * probe_factor(cfg, order, n);
    const cplx g = cfg.omega_c * std::exp(-kI * cfg.phi_c) * sideband_element(cfg.eta, shift, n, order, &exact);

    DressedTriple t;
    t.n = n;
    const double r = std::sqrt(std::norm(p) + std::norm(g));
    t.e_plus = r;
    t.e_minus = -r;
    t.e_zero = 0.0;
    if (std::abs(g) == 0.0) {
        t.degenerate = true;
        t.note = "no sideband coupling";
        if (r > 0.0) {
            t.plus_state = Eigen::Vector3cd(1.0, std::conj(p) / r, 0.0) / std::numbers::sqrt2;
            t.minus_state = Eigen::Vector3cd(-1.0, std::conj(p) / r, 0.0) / std::numbers::sqrt2;
        }
        t.dark_state = Eigen::Vector3cd(0.0, 0.0, 1.0);
        return t;
    }
    t.dark_state = Eigen::Vector3cd(0.0, g, -p) / r;
    t.plus_state = Eigen::Vector3cd(r, std::conj(p), std::conj(g)) / (std::numbers::sqrt2 * r);
    t.minus_state = Eigen::Vector3cd(-r, std::conj(p), std::conj(g)) / (std::numbers::sqrt2 * r);
    return t;
}

/// Golden-rule FWHM of a doublet line:
///   RSB  Γ + κ[2n(2n_th+1) − 1]            (n ≥ 1)
///   BSB  Γ + κ[2n(2n_th+1) + 4n_th + 1]
inline double fwhm_analytic(const SystemConfig& cfg, SidebandRegime regime, int n) {
    const double nth = cfg.n_th_env;
    switch (regime) {
        case SidebandRegime::RSB:
            if (n < 1) throw InvalidArgument("fwhm_analytic: RSB needs n >= 1");
            return cfg.gamma_sd + cfg.kappa * (2.0 * n * (2.0 * nth + 1.0) - 1.0);
        case SidebandRegime::BSB:
            if (n < 0) throw InvalidArgument("fwhm_analytic: n must be >= 0");
            return cfg.gamma_sd + cfg.kappa * (2.0 * n * (2.0 * nth + 1.0) + 4.0 * nth + 1.0);
        case SidebandRegime::Carrier: break;
    }
    throw InvalidArgument("fwhm_analytic: defined for RSB and BSB only");
}

/// p_n ∝ n̄ⁿ/(n̄+1)^{n+1}, renormalised on the truncated space.
inline Eigen::VectorXd thermal_populations(double n_bar, int fock_dim) {
    if (n_bar < 0.0) throw InvalidArgument("thermal_populations: n_bar must be >= 0");
    if (fock_dim < 1) throw InvalidArgument("thermal_populations: fock_dim must be >= 1");
    Eigen::VectorXd p(fock_dim);
    const double ratio = n_bar / (n_bar + 1.0);
    double term = 1.0 / (n_bar + 1.0);
    for (int n = 0; n < fock_dim; ++n) {
        p(n) = term;
        term *= ratio;
    }
    return p / p.sum();
}

inline DensityMatrix thermal_density(double n_bar, int fock_dim) {
    if (fock_dim < 2) throw InvalidArgument("thermal_density: fock_dim must be >= 2");
    return DensityMatrix(thermal_populations(n_bar, fock_dim).cast<cplx>().asDiagonal().toDenseMatrix());
}

inline DensityMatrix fock_density(int n, int fock_dim) {
    if (n < 0 || n >= fock_dim) throw InvalidArgument("fock_density: n outside truncation");
    Operator m = Operator::Zero(fock_dim, fock_dim);
    m(n, n) = 1.0;
    return DensityMatrix(std::move(m));
}

/// Smallest Fock dimension whose top two levels hold less than `limit` of a
/// thermal distribution (before renormalisation).
inline int required_fock_dim(double n_bar, double limit = 0.1 * kTruncationLimit, int minimum = 2) {
    if (n_bar <= 0.0) return minimum;
    const double ratio = n_bar / (n_bar + 1.0);
    int nf = minimum;
    // tail beyond index nf-3 = ratio^{nf-2}
    while (std::pow(ratio, nf - 2) >= limit) ++nf;
    return nf;
}

}  // namespace atspec
