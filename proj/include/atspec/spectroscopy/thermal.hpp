// thermal.hpp: phonon-number distribution from a multi-peak spectrum

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atspec/errors.hpp"
#include "atspec/model/dressed.hpp"
#include "atspec/model/hamiltonian.hpp"
#include "atspec/spectroscopy/fit.hpp"
#include "atspec/spectroscopy/scan.hpp"

namespace atspec {

/// Expected linewidth (rad/s) of the doublet line of Fock level n.
inline double expected_line_fwhm(const SystemConfig& cfg, SidebandRegime regime, int n, double probe_duration) {
    double w = fourier_fwhm(probe_duration);
    if (regime == SidebandRegime::BSB || (regime == SidebandRegime::RSB && n >= 1))
        w += fwhm_analytic(cfg, regime, n);
    return w;
}

/// Largest n for which every neighbouring positive-side peak pair up to n is
/// further apart than the expected linewidth. Returns -1 if even n=0,1 overlap.
inline int max_resolvable_n(const SystemConfig& cfg, SidebandRegime regime, double probe_duration, int limit = 64,
                            CouplingOrder order = CouplingOrder::FirstOrder) {
    int best = 0;
    for (int n = 1; n <= limit; ++n) {
        const double gap = sideband_rate(cfg, regime, n, order) - sideband_rate(cfg, regime, n - 1, order);
        const double fw = std::max(expected_line_fwhm(cfg, regime, n, probe_duration),
                                   expected_line_fwhm(cfg, regime, n - 1, probe_duration));
        if (!(gap > fw)) return n - 1;
        best = n;
    }
    return best;
}

struct ThermalOptions {
    SidebandRegime regime = SidebandRegime::BSB;
    CouplingOrder order = CouplingOrder::FirstOrder;
    PeakModel model = PeakModel::Gaussian;
    FitSource source = FitSource::Auto;
    std::optional<double> probe_duration;   // defaults to probe_pi_time(cfg)
};

struct ThermalResult {
    std::vector<double> centers;            // positive-side analytic centres, rad/s
    std::vector<double> raw_amplitudes;     // fitted peak heights
    std::vector<double> probe_correction;   // on-resonance transfer h_n
    std::vector<double> populations;        // normalised p_0..p_{n_max}
    std::vector<double> population_sigma;
    double n_bar = 0.0;
    double n_bar_sigma = 0.0;
    double width = 0.0;
    double background = 0.0;
    double residual_norm = 0.0;
};

/// p_n of a thermal distribution renormalised on 0..n_max.
inline std::vector<double> truncated_geometric(double n_bar, int n_max) {
    const Eigen::VectorXd p = thermal_populations(n_bar, n_max + 1);
    return {p.data(), p.data() + p.size()};
}

namespace detail {

inline double geometric_rss(const std::vector<double>& pops, double n_bar) {
    const auto q = truncated_geometric(n_bar, static_cast<int>(pops.size()) - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < pops.size(); ++i) s += (pops[i] - q[i]) * (pops[i] - q[i]);
    return s;
}

}  // namespace detail

/// Least-squares n̄ of a truncated geometric distribution; σ from the curvature.
inline std::pair<double, double> fit_geometric(const std::vector<double>& pops) {
    if (pops.size() < 2) throw InvalidArgument("fit_geometric: need at least two populations");
    // bracket on a log grid, then golden-section refine
    double best = 0.0, best_f = detail::geometric_rss(pops, 0.0);
    for (double x = 1e-3; x < 100.0; x *= 1.1) {
        const double f = detail::geometric_rss(pops, x);
        if (f < best_f) {
            best_f = f;
            best = x;
        }
    }
    double lo = std::max(0.0, best / 1.1), hi = best > 0.0 ? best * 1.1 : 1e-3;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = detail::geometric_rss(pops, a), fb = detail::geometric_rss(pops, b);
    for (int it = 0; it < 100; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = detail::geometric_rss(pops, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = detail::geometric_rss(pops, b);
        }
    }
    double n_bar = 0.5 * (lo + hi);
    if (best_f <= std::min(fa, fb)) n_bar = best;
    const int nm = static_cast<int>(pops.size()) - 1;
    const double h = std::max(1e-6, 1e-4 * n_bar);
    const auto qp = truncated_geometric(n_bar + h, nm);
    const auto qm = truncated_geometric(std::max(0.0, n_bar - h), nm);
    double jj = 0.0;
    for (int i = 0; i <= nm; ++i) {
        const double d = (qp[i] - qm[i]) / (n_bar + h - std::max(0.0, n_bar - h));
        jj += d * d;
    }
    const double s2 = detail::geometric_rss(pops, n_bar) / std::max(1, nm);
    return {n_bar, jj > 0.0 ? std::sqrt(s2 / jj) : 0.0};
}

/// Populations from peak heights at the analytic doublet centres ±|g|√n_eff,
/// corrected for the phonon-dependent probe transfer.
inline ThermalResult reconstruct_thermal(const Spectrum& spec, const SystemConfig& cfg, int n_max,
                                         const ThermalOptions& opt = {}) {
    spec.validate();
    if (n_max < 1) throw InvalidArgument("reconstruct_thermal: n_max must be >= 1");
    if (opt.regime == SidebandRegime::Carrier) throw InvalidArgument("reconstruct_thermal: needs RSB or BSB coupling");
    const double t = opt.probe_duration.value_or(probe_pi_time(cfg));
    const int resolvable = max_resolvable_n(cfg, opt.regime, t, n_max, opt.order);
    if (resolvable < n_max)
        throw UnresolvablePeaks("reconstruct_thermal: peaks of n=" + std::to_string(resolvable) + " and n=" +
                                std::to_string(resolvable + 1) + " overlap within the expected linewidth");

    ThermalResult out;
    for (int n = 0; n <= n_max; ++n) {
        out.centers.push_back(sideband_rate(cfg, opt.regime, n, opt.order));
        const double c = probe_factor(cfg, opt.order, n);
        // dressed line of an uncoupled level carries the full probe amplitude
        const double half = out.centers.back() > 0.0 ? std::numbers::sqrt2 : 1.0;
        const double s = std::sin(cfg.omega_p * c * t / half);
        out.probe_correction.push_back(s * s);
    }
    const auto fit = fit_fixed_centers(spec, out.centers, opt.model, fourier_fwhm(t), opt.source);
    out.width = fit.width;
    out.background = fit.background;
    out.residual_norm = fit.residual_norm;

    double total = 0.0;
    std::vector<double> raw(n_max + 1), sig(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        out.raw_amplitudes.push_back(fit.amplitudes(n));
        const double h = std::max(out.probe_correction[n], 1e-3);
        raw[n] = std::max(0.0, fit.amplitudes(n)) / h;
        sig[n] = fit.amplitude_sigma(n) / h;
        total += raw[n];
    }
    if (!(total > 0.0)) throw FitError("reconstruct_thermal: no positive peak amplitude");
    for (int n = 0; n <= n_max; ++n) {
        out.populations.push_back(raw[n] / total);
        out.population_sigma.push_back(sig[n] / total);
    }
    const auto [nb, nbs] = fit_geometric(out.populations);
    out.n_bar = nb;
    out.n_bar_sigma = nbs;
    return out;
}

}  // namespace atspec
