// scan.hpp: probe-detuning sweeps with projection-noise sampling

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "atspec/core/parallel.hpp"
#include "atspec/core/random.hpp"
#include "atspec/dynamics/evolve.hpp"
#include "atspec/model/dressed.hpp"
#include "atspec/model/hamiltonian.hpp"
#include "atspec/sequence/protocol.hpp"

namespace atspec {

struct ScanPlan {
    double detuning_min = -kTwoPi * 16e3;
    double detuning_max = kTwoPi * 16e3;
    int n_points = 161;
    double probe_duration = kProbeTime;
    int shots_per_point = 100;
    SidebandRegime regime = SidebandRegime::BSB;
    MotionalInit initial = MotionalInit::fock(0);
    CouplingOrder order = CouplingOrder::FirstOrder;
    bool shelve_dprime = true;   // count D' population as bright (D'→S' transfer before readout)

    void validate() const {
        if (n_points < 3) throw InvalidArgument("scan: n_points must be >= 3");
        if (shots_per_point < 1) throw InvalidArgument("scan: shots_per_point must be >= 1");
        if (!(detuning_max > detuning_min)) throw InvalidArgument("scan: detuning_max must exceed detuning_min");
        if (!(probe_duration > 0.0)) throw InvalidArgument("scan: probe_duration must be > 0");
        if (initial.kind == MotionalInit::Kind::Fock && initial.n < 0)
            throw InvalidArgument("scan: Fock index must be >= 0");
        if (initial.kind == MotionalInit::Kind::Thermal && initial.n_bar < 0.0)
            throw InvalidArgument("scan: n_bar must be >= 0");
    }

    std::vector<double> grid() const {
        std::vector<double> x(n_points);
        const double step = (detuning_max - detuning_min) / (n_points - 1);
        for (int i = 0; i < n_points; ++i) x[i] = detuning_min + step * i;
        x[n_points - 1] = detuning_max;
        return x;
    }
};

/// Approximate FWHM (rad/s) of a π-area square probe pulse of duration t.
inline double fourier_fwhm(double duration) { return 5.0 / duration; }

/// Symmetric grid of ±1.6 times the outermost expected peak, or a Fourier-width
/// based window when the coupling vanishes.
inline ScanPlan default_scan_plan(const SystemConfig& cfg, SidebandRegime regime, MotionalInit initial, int n_max,
                                  CouplingOrder order = CouplingOrder::FirstOrder) {
    ScanPlan plan;
    plan.regime = regime;
    plan.initial = initial;
    plan.order = order;
    plan.probe_duration = probe_pi_time(cfg);
    double outer = sideband_rate(cfg, regime, std::max(n_max, 0), order);
    if (regime == SidebandRegime::RSB && n_max == 0) outer = sideband_rate(cfg, regime, 1, order);
    const double span = std::max(1.6 * outer, 6.0 * fourier_fwhm(plan.probe_duration));
    plan.detuning_min = -span;
    plan.detuning_max = span;
    return plan;
}

struct Spectrum {
    std::vector<double> detunings;   // rad/s
    std::vector<double> p_excited;
    std::vector<int> counts;
    int shots = 0;

    std::size_t size() const { return detunings.size(); }

    void validate() const {
        if (p_excited.size() != detunings.size()) throw InvalidArgument("spectrum: column length mismatch");
        if (!counts.empty() && counts.size() != detunings.size())
            throw InvalidArgument("spectrum: counts length mismatch");
        for (int c : counts)
            if (c < 0 || c > shots) throw InvalidArgument("spectrum: counts outside [0, shots]");
    }

    std::vector<double> measured_fraction() const {
        std::vector<double> f(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / shots;
        return f;
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval; z = 1 gives the 68% interval.
inline Interval wilson_interval(int k, int n, double z = 1.0) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(k) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ScanOptions {
    unsigned threads = 1;
    IntegratorSettings integrator{};
};

/// Excitation probability after the probe pulse for every grid point, plus a
/// binomial shot sample per point (stream derived from (seed, point index)).
inline Spectrum scan_spectrum(const ScanPlan& plan, const SystemConfig& cfg, std::uint64_t seed,
                              const ScanOptions& opt = {}) {
    plan.validate();
    cfg.validate();
    const HilbertSpec spec(cfg.fock_dim);
    const DensityMatrix rho0 = embed(Level::D, plan.initial.density(spec.fock_dim), spec);
    check_truncation(rho0, spec, "scan_spectrum initial state");
    const auto collapses = collapse_matrices(collapse_operators(cfg));
    const SystemConfig base = with_regime(cfg, plan.regime);

    Spectrum out;
    out.detunings = plan.grid();
    out.shots = plan.shots_per_point;
    out.p_excited.assign(out.detunings.size(), 0.0);
    out.counts.assign(out.detunings.size(), 0);

    parallel_for(out.detunings.size(), opt.threads, [&](std::size_t i) {
        SystemConfig c = base;
        c.delta_p = out.detunings[i];
        const Operator h = build_rwa_hamiltonian(c, plan.regime, plan.order);
        const DensityMatrix rho = propagate(rho0, h, collapses, plan.probe_duration, opt.integrator);
        check_truncation(rho, spec, "scan_spectrum");
        const auto pops = internal_populations(rho, spec);
        double p = pops[static_cast<int>(Level::S)] + pops[static_cast<int>(Level::SPrime)];
        if (plan.shelve_dprime) p += pops[static_cast<int>(Level::DPrime)];
        p = std::clamp(p, 0.0, 1.0);
        out.p_excited[i] = p;
        Rng rng = make_rng(seed, i);
        out.counts[i] = binomial_draw(rng, plan.shots_per_point, p);
    });
    return out;
}

}  // namespace atspec
