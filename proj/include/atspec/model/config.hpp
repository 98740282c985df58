// config.hpp: physical parameters and the two measured presets

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "atspec/errors.hpp"

namespace atspec {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Probe time used for all Autler-Townes scans in the experiment.
inline constexpr double kProbeTime = 700e-6;

enum class SidebandRegime { Carrier, RSB, BSB };

enum class CouplingOrder { FirstOrder, Exact };

inline const char* regime_name(SidebandRegime r) {
    switch (r) {
        case SidebandRegime::Carrier: return "carrier";
        case SidebandRegime::RSB: return "rsb";
        case SidebandRegime::BSB: return "bsb";
    }
    return "?";
}

/// Phonon-number change of the coupling transition |S,n⟩ → |D',n+Δn⟩.
inline int sideband_shift(SidebandRegime r) {
    switch (r) {
        case SidebandRegime::Carrier: return 0;
        case SidebandRegime::RSB: return -1;
        case SidebandRegime::BSB: return +1;
    }
    return 0;
}

/// All frequencies are angular (rad/s); rates in 1/s.
struct SystemConfig {
    double eta = 0.0609;
    std::optional<double> probe_eta;   // Lamb-Dicke parameter of the probe beam; defaults to eta
    double omega_c = kTwoPi * 10.05e3 / 0.0609;
    double omega_p = std::numbers::pi / (std::numbers::sqrt2 * kProbeTime);
    double nu = kTwoPi * 1.3433e6;
    double delta_c = kTwoPi * 1.3433e6;
    double delta_p = 0.0;
    double gamma_sd = 0.0;
    double kappa = 0.0;
    double n_th_env = 0.0;
    double phi_p = 0.0;
    double phi_c = 0.0;
    int fock_dim = 20;

    double effective_probe_eta() const { return probe_eta.value_or(eta); }

    /// η²(2N_F+1); the first-order sideband picture needs this ≪ 1.
    double lamb_dicke_diagnostic() const { return eta * eta * (2.0 * fock_dim + 1.0); }

    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (lamb_dicke_diagnostic() > 0.1)
            w.push_back("eta^2(2*fock_dim+1) = " + std::to_string(lamb_dicke_diagnostic()) +
                        " > 0.1: outside the Lamb-Dicke regime at the top of the Fock space");
        return w;
    }

    void validate() const {
        if (!(eta > 0.0)) throw InvalidArgument("eta must be > 0");
        if (probe_eta && *probe_eta < 0.0) throw InvalidArgument("probe_eta must be >= 0");
        if (omega_c < 0.0 || omega_p < 0.0) throw InvalidArgument("Rabi rates must be >= 0");
        if (nu <= 0.0) throw InvalidArgument("nu must be > 0");
        if (gamma_sd < 0.0 || kappa < 0.0) throw InvalidArgument("rates must be >= 0");
        if (n_th_env < 0.0) throw InvalidArgument("n_th_env must be >= 0");
        if (fock_dim < 2) throw InvalidArgument("fock_dim must be >= 2");
    }
};

/// Coupling-field detuning at which a regime is resonant.
inline double resonance_detuning(SidebandRegime r, double nu) { return sideband_shift(r) * nu; }

/// Regime whose resonance is closest to the configured coupling detuning.
inline SidebandRegime nearest_regime(const SystemConfig& cfg) {
    const double d0 = std::abs(cfg.delta_c);
    const double dr = std::abs(cfg.delta_c + cfg.nu);
    const double db = std::abs(cfg.delta_c - cfg.nu);
    if (db <= d0 && db <= dr) return SidebandRegime::BSB;
    if (dr <= d0) return SidebandRegime::RSB;
    return SidebandRegime::Carrier;
}

/// Copy of cfg with the coupling field moved onto `regime`'s resonance, keeping
/// any residual offset from the resonance cfg is currently closest to.
inline SystemConfig with_regime(SystemConfig cfg, SidebandRegime regime) {
    const double offset = cfg.delta_c - resonance_detuning(nearest_regime(cfg), cfg.nu);
    cfg.delta_c = resonance_detuning(regime, cfg.nu) + offset;
    return cfg;
}

/// Probe duration for which the dressed transition |D⟩ → |±⟩ (amplitude Ω_P/√2)
/// is driven with area π: t = π/(√2 Ω_P).
inline double probe_pi_time(const SystemConfig& cfg) {
    if (!(cfg.omega_p > 0.0)) throw InvalidArgument("probe_pi_time: omega_p must be > 0");
    return std::numbers::pi / (std::numbers::sqrt2 * cfg.omega_p);
}

/// BSB-coupled run: η = 0.0609, ground-state sideband rate 2π·10.05 kHz, sideband 2π·1.3433 MHz.
inline SystemConfig preset_bsb() {
    SystemConfig c;
    c.eta = 0.0609;
    c.omega_c = kTwoPi * 10.05e3 / c.eta;
    c.nu = kTwoPi * 1.3433e6;
    c.delta_c = c.nu;
    return c;
}

/// RSB-coupled run: η = 0.0605, ground-state sideband rate 2π·11.08 kHz, sideband −2π·1.36 MHz.
inline SystemConfig preset_rsb() {
    SystemConfig c;
    c.eta = 0.0605;
    c.omega_c = kTwoPi * 11.08e3 / c.eta;
    c.nu = kTwoPi * 1.36e6;
    c.delta_c = -c.nu;
    return c;
}

}  // namespace atspec
