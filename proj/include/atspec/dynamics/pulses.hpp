// pulses.hpp: calibrated resonant pulses on the qubit and shelving transitions

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "atspec/dynamics/evolve.hpp"
#include "atspec/model/hamiltonian.hpp"

namespace atspec {

/// |lower,n⟩ ↔ |upper,n+shift⟩ with lower ∈ {S,S'}, upper ∈ {D,D'}.
struct PulseTransition {
    Level lower = Level::S;
    Level upper = Level::D;
    int shift = 0;

    static PulseTransition carrier_sd() { return {Level::S, Level::D, 0}; }
    static PulseTransition bsb_sd() { return {Level::S, Level::D, +1}; }
    static PulseTransition rsb_sd() { return {Level::S, Level::D, -1}; }
    static PulseTransition carrier_sdprime() { return {Level::S, Level::DPrime, 0}; }
    static PulseTransition bsb_sdprime() { return {Level::S, Level::DPrime, +1}; }
    static PulseTransition rsb_sdprime() { return {Level::S, Level::DPrime, -1}; }
    static PulseTransition carrier_sprime_dprime() { return {Level::SPrime, Level::DPrime, 0}; }

    void validate() const {
        const bool lower_ok = lower == Level::S || lower == Level::SPrime;
        const bool upper_ok = upper == Level::D || upper == Level::DPrime;
        if (!lower_ok || !upper_ok || shift < -1 || shift > 1)
            throw InvalidArgument("unknown pulse transition " + name());
        if (lower == Level::SPrime && upper == Level::D) throw InvalidArgument("unknown pulse transition " + name());
    }

    std::string name() const {
        const char* sb = shift == 0 ? "carrier" : (shift > 0 ? "bsb" : "rsb");
        return std::string(level_name(lower)) + "-" + level_name(upper) + ":" + sb;
    }

    friend bool operator==(const PulseTransition&, const PulseTransition&) = default;
};

struct PulseOptions {
    double area = std::numbers::pi;   // pulse area Ω_eff·t·2
    double phase = 0.0;
    CouplingOrder order = CouplingOrder::FirstOrder;
};

/// Rabi rate of `tr` for the lower-level Fock state n, driven by the coupling beam.
inline double transition_rabi(const SystemConfig& cfg, const PulseTransition& tr, int n, CouplingOrder order) {
    if (order == CouplingOrder::FirstOrder)
        return cfg.omega_c * std::abs(sideband_element(cfg.eta, tr.shift, n, order));
    const Operator d = normalized_displacement(cfg.eta, std::max(n + 2, 2));
    return cfg.omega_c * std::abs(sideband_element(cfg.eta, tr.shift, n, order, &d));
}

/// Duration of a pulse of given area calibrated to Fock level n: area/(2Ω_eff).
inline double pulse_duration(const SystemConfig& cfg, const PulseTransition& tr, int calibrated_n,
                             const PulseOptions& opt = {}) {
    tr.validate();
    const double rabi = transition_rabi(cfg, tr, calibrated_n, opt.order);
    if (!(rabi > 0.0))
        throw InvalidArgument("pulse on " + tr.name() + " has zero Rabi rate at n=" + std::to_string(calibrated_n));
    return opt.area / (2.0 * rabi);
}

inline Operator pulse_hamiltonian(const SystemConfig& cfg, const PulseTransition& tr, const PulseOptions& opt = {}) {
    tr.validate();
    return transition_hamiltonian(HilbertSpec(cfg.fock_dim), tr.lower, tr.upper, tr.shift, cfg.omega_c, cfg.eta,
                                  opt.order, opt.phase);
}

/// Closed-system pulse e^{−iHt}, with t calibrated to the Rabi rate at Fock level
/// `calibrated_n` (relevant for sideband pulses, whose rate depends on n).
inline DensityMatrix apply_pulse(const DensityMatrix& state, const PulseTransition& tr, const SystemConfig& cfg,
                                 int calibrated_n, const PulseOptions& opt = {}) {
    const double t = pulse_duration(cfg, tr, calibrated_n, opt);
    return evolve_unitary(state, pulse_hamiltonian(cfg, tr, opt), t);
}

inline DensityMatrix apply_pi_pulse(const DensityMatrix& state, const PulseTransition& tr, CouplingOrder order,
                                    const SystemConfig& cfg, int calibrated_n = 0) {
    PulseOptions opt;
    opt.order = order;
    return apply_pulse(state, tr, cfg, calibrated_n, opt);
}

}  // namespace atspec
