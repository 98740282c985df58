// hamiltonian.hpp: lab-frame and rotating-frame Hamiltonians, collapse operators
//
// Conventions (no ħ/2 prefactors):
//   probe     Ω_P e^{iφ_P} |S⟩⟨D| · c_n                               + h.c.
//   coupling  Ω_C e^{-iφ_C} |S,n⟩⟨D',n+s| · ⟨n|e^{-iη(a+a†)}|n+s⟩ / e^{-η²/2} + h.c.
//   frame     -Δ_P |D⟩⟨D| - (Δ_C - sν) |D'⟩⟨D'|
// with s = +1 (BSB), -1 (RSB), 0 (carrier). To first order in η the coupling
// is g a σ_SD' (BSB) or g a† σ_SD' (RSB) with g = -iηΩ_C e^{-iφ_C}, so a
// resonant π pulse lasts π/(2Ω) and the dressed doublet gap is 2|g|√n_eff.
// Exact elements are normalised by the ground-state Debye-Waller factor so that
// Ω_C and Ω_P keep their meaning as motional-ground-state rates.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "atspec/core/algebra.hpp"
#include "atspec/model/config.hpp"

namespace atspec {

/// |g| = η Ω_C, the first-order sideband Rabi rate at the motional ground state.
inline double coupling_g(const SystemConfig& cfg) { return cfg.eta * cfg.omega_c; }

/// Complex first-order sideband coupling in the builder's phase convention.
inline cplx coupling_g_complex(const SystemConfig& cfg) {
    return -kI * cfg.eta * cfg.omega_c * std::exp(-kI * cfg.phi_c);
}

// ---------------------------------------------------------------------------
// Displacement-operator matrix elements

namespace detail {

inline constexpr int kDisplacementPadding = 40;

/// exp(i·θ·(a+a†)) on a Fock space padded well beyond fock_dim, cut back to fock_dim.
inline Operator exp_i_position(double theta, int fock_dim) {
    const int big = fock_dim + kDisplacementPadding;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(big, big);
    for (int n = 1; n < big; ++n) x(n - 1, n) = x(n, n - 1) = std::sqrt(static_cast<double>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    const Eigen::VectorXcd phases = (kI * theta * es.eigenvalues().cast<cplx>()).array().exp();
    const Operator v = es.eigenvectors().cast<cplx>();
    const Operator full = v * phases.asDiagonal() * v.adjoint();
    return full.topLeftCorner(fock_dim, fock_dim);
}

}  // namespace detail

/// Matrix ⟨m|e^{-iη(a+a†)}|k⟩ / e^{-η²/2} for m, k < fock_dim.
inline Operator normalized_displacement(double eta, int fock_dim) {
    return detail::exp_i_position(-eta, fock_dim) * std::exp(0.5 * eta * eta);
}

/// Coupling matrix element (without Ω_C and phase) for |S,n⟩ ↔ |D',n+shift⟩.
/// Returns 0 when n+shift falls outside the truncation.
inline cplx sideband_element(double eta, int shift, int n, CouplingOrder order, const Operator* exact = nullptr) {
    const int k = n + shift;
    if (n < 0 || k < 0) return 0.0;
    if (order == CouplingOrder::FirstOrder) {
        if (shift == 0) return 1.0;
        if (shift == +1) return -kI * eta * std::sqrt(static_cast<double>(n + 1));
        if (shift == -1) return -kI * eta * std::sqrt(static_cast<double>(n));
        throw InvalidArgument("sideband_element: only first sidebands are supported");
    }
    if (!exact) throw InvalidArgument("sideband_element: exact order needs the displacement matrix");
    if (n >= exact->rows() || k >= exact->cols()) return 0.0;
    return (*exact)(n, k);
}

/// Probe carrier factor relative to the motional ground state. 1 at first
/// order, L_n(η'²) (≈ 1 − η'²n) when exact.
inline double probe_factor(const SystemConfig& cfg, CouplingOrder order, int n) {
    if (order == CouplingOrder::FirstOrder) return 1.0;
    const Operator d = normalized_displacement(cfg.effective_probe_eta(), std::max(n + 1, 2));
    return d(n, n).real();
}

/// Magnitude of the coupling-field element seen by the probed level |S,n⟩;
/// this is the dressed half-splitting |g|√n_eff at first order.
inline double sideband_rate(const SystemConfig& cfg, SidebandRegime regime, int n, CouplingOrder order) {
    const int shift = sideband_shift(regime);
    if (order == CouplingOrder::FirstOrder)
        return cfg.omega_c * std::abs(sideband_element(cfg.eta, shift, n, order));
    const Operator d = normalized_displacement(cfg.eta, std::max(n + 2, 2));
    return cfg.omega_c * std::abs(sideband_element(cfg.eta, shift, n, order, &d));
}

/// Effective phonon factor n_eff for the probed Fock level n.
inline int effective_phonons(SidebandRegime regime, int n) {
    switch (regime) {
        case SidebandRegime::BSB: return n + 1;
        case SidebandRegime::RSB: return n;
        case SidebandRegime::Carrier: return 0;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Rotating-frame Hamiltonian

inline Operator build_rwa_hamiltonian(const SystemConfig& cfg, SidebandRegime regime,
                                      CouplingOrder order = CouplingOrder::FirstOrder) {
    cfg.validate();
    const HilbertSpec spec(cfg.fock_dim);
    const int nf = spec.fock_dim;
    const int shift = sideband_shift(regime);
    const double residual = cfg.delta_c - resonance_detuning(regime, cfg.nu);

    Operator sideband_exact, probe_exact;
    if (order == CouplingOrder::Exact) {
        sideband_exact = normalized_displacement(cfg.eta, nf);
        probe_exact = normalized_displacement(cfg.effective_probe_eta(), nf);
    }

    const cplx probe_phase = std::exp(kI * cfg.phi_p);
    const cplx coupling_phase = std::exp(-kI * cfg.phi_c);

    Operator h = Operator::Zero(spec.dim(), spec.dim());
    for (int n = 0; n < nf; ++n) {
        const int s = spec.index(Level::S, n);
        const int d = spec.index(Level::D, n);
        const double c_n = order == CouplingOrder::Exact ? probe_exact(n, n).real() : 1.0;
        h(s, d) = cfg.omega_p * probe_phase * c_n;
        h(d, s) = std::conj(h(s, d));

        const int k = n + shift;
        if (k >= 0 && k < nf) {
            const int dp = spec.index(Level::DPrime, k);
            const cplx m = sideband_element(cfg.eta, shift, n, order, &sideband_exact);
            h(s, dp) = cfg.omega_c * coupling_phase * m;
            h(dp, s) = std::conj(h(s, dp));
        }
        h(d, d) = -cfg.delta_p;
        h(spec.index(Level::DPrime, n), spec.index(Level::DPrime, n)) = -residual;
    }
    if (hermiticity_error(h) > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw Error("build_rwa_hamiltonian: result not Hermitian");
    return h;
}

/// Resonant two-level pulse Hamiltonian between |lower,n⟩ and |upper,n+shift⟩,
/// Rabi rate `rabi` scaled by the motional element; lower ∈ {S,S'}, upper ∈ {D,D'}.
inline Operator transition_hamiltonian(const HilbertSpec& spec, Level lower, Level upper, int shift, double rabi,
                                       double eta, CouplingOrder order, double phase) {
    if (lower == upper) throw InvalidArgument("transition_hamiltonian: identical levels");
    const int nf = spec.fock_dim;
    Operator exact;
    if (order == CouplingOrder::Exact) exact = normalized_displacement(eta, nf);
    const cplx ph = std::exp(kI * phase);
    Operator h = Operator::Zero(spec.dim(), spec.dim());
    for (int n = 0; n < nf; ++n) {
        const int k = n + shift;
        if (k < 0 || k >= nf) continue;
        const cplx m = sideband_element(eta, shift, n, order, &exact);
        const int i = spec.index(lower, n), j = spec.index(upper, k);
        h(i, j) = rabi * ph * m;
        h(j, i) = std::conj(h(i, j));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Lab frame (validation only)

/// Bare level frequencies for the lab-frame Hamiltonian. S and S' sit at zero.
struct LabFrame {
    double omega_d = 0.0;
    double omega_dprime = 0.0;
};

inline Operator build_free_hamiltonian(const SystemConfig& cfg, const LabFrame& frame) {
    const HilbertSpec spec(cfg.fock_dim);
    return lift_internal(frame.omega_dprime * projector(Level::DPrime) + frame.omega_d * projector(Level::D), spec) +
           cfg.nu * lift_motional(number_operator(spec.fock_dim), spec);
}

/// H₀ + H_int(t) with probe frequency ω_D + Δ_P and coupling frequency ω_D' + Δ_C.
inline Operator build_lab_hamiltonian(const SystemConfig& cfg, double t, const LabFrame& frame) {
    cfg.validate();
    const HilbertSpec spec(cfg.fock_dim);
    const double omega_probe = frame.omega_d + cfg.delta_p;
    const double omega_coupling = frame.omega_dprime + cfg.delta_c;

    const Operator probe_x = sigma(Level::S, Level::D) + sigma(Level::D, Level::S);
    const Operator coupling_x = sigma(Level::S, Level::DPrime) + sigma(Level::DPrime, Level::S);

    const Operator disp = detail::exp_i_position(cfg.eta, spec.fock_dim);
    const cplx ph = std::exp(kI * (-omega_coupling * t + cfg.phi_c));
    const Operator motion = ph * disp + std::conj(ph) * disp.adjoint();

    Operator h = build_free_hamiltonian(cfg, frame);
    h += cfg.omega_p * 2.0 * std::cos(omega_probe * t + cfg.phi_p) * lift_internal(probe_x, spec);
    h += cfg.omega_c * tensor(coupling_x, motion);
    return h;
}

// ---------------------------------------------------------------------------
// Dissipation

struct CollapseOperator {
    std::string name;
    Operator op;
};

/// Atomic decay √(2Γ)σ_SD', phonon loss √(2κ(n_th+1)) a, phonon gain √(2κ n_th) a†,
/// in that order, omitting zero-rate channels.
inline std::vector<CollapseOperator> collapse_operators(const SystemConfig& cfg) {
    cfg.validate();
    const HilbertSpec spec(cfg.fock_dim);
    std::vector<CollapseOperator> out;
    if (cfg.gamma_sd > 0.0)
        out.push_back({"atomic_decay",
                       std::sqrt(2.0 * cfg.gamma_sd) * lift_internal(sigma(Level::S, Level::DPrime), spec)});
    if (cfg.kappa > 0.0) {
        const Operator a = lift_motional(annihilation(spec.fock_dim), spec);
        out.push_back({"phonon_loss", std::sqrt(2.0 * cfg.kappa * (cfg.n_th_env + 1.0)) * a});
        if (cfg.n_th_env > 0.0)
            out.push_back({"phonon_gain", std::sqrt(2.0 * cfg.kappa * cfg.n_th_env) * a.adjoint()});
    }
    return out;
}

inline std::vector<Operator> collapse_matrices(const std::vector<CollapseOperator>& cs) {
    std::vector<Operator> out;
    out.reserve(cs.size());
    for (const auto& c : cs) out.push_back(c.op);
    return out;
}

}  // namespace atspec
