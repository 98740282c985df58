#include <gtest/gtest.h>

#include <numeric>

#include "atspec/spectroscopy/fit.hpp"
#include "atspec/spectroscopy/scaling.hpp"
#include "atspec/spectroscopy/scan.hpp"
#include "atspec/spectroscopy/thermal.hpp"
#include "support.hpp"

using namespace atspec;

namespace {

std::size_t argmax_in(const Spectrum& s, double lo, double hi) {
    std::size_t best = 0;
    double v = -1.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.detunings[i] >= lo && s.detunings[i] <= hi && s.p_excited[i] > v) {
            v = s.p_excited[i];
            best = i;
        }
    return best;
}

Spectrum synthetic(const std::vector<double>& x, const std::vector<std::pair<double, double>>& lines, double width,
                   double background, PeakModel model) {
    Spectrum s;
    s.detunings = x;
    for (double xi : x) {
        double v = background;
        for (const auto& [c, a] : lines) v += a * peak_shape(model, xi - c, width);
        s.p_excited.push_back(v);
    }
    return s;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
    return x;
}

FitOptions probabilities() {
    FitOptions o;
    o.source = FitSource::Probabilities;
    return o;
}

SystemConfig fock_config(SidebandRegime regime, int top) {
    SystemConfig c = regime == SidebandRegime::RSB ? preset_rsb() : preset_bsb();
    c.fock_dim = top + 4;
    return c;
}

ScanPlan fock_plan(const SystemConfig& c, SidebandRegime regime, int n) {
    ScanPlan p = default_scan_plan(c, regime, MotionalInit::fock(n), n);
    p.n_points = 161;
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scans

TEST(Scan, GroundStateDoubletSitsAtPlusMinusG) {
    const SystemConfig c = fock_config(SidebandRegime::BSB, 0);
    ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    p.n_points = 641;
    const Spectrum s = scan_spectrum(p, c, 1);
    const double g = coupling_g(c);
    const double step = (p.detuning_max - p.detuning_min) / (p.n_points - 1);
    const double e = oracle::dressed_energy(g, 1, c.omega_p);
    EXPECT_NEAR(s.detunings[argmax_in(s, 0.0, p.detuning_max)], e, step);
    EXPECT_NEAR(s.detunings[argmax_in(s, p.detuning_min, 0.0)], -e, step);
    EXPECT_LT(s.p_excited[argmax_in(s, -0.5 * step, 0.5 * step)], 0.05);   // dark centre
}

TEST(Scan, NoCouplingGivesSingleProbeLine) {
    SystemConfig c = fock_config(SidebandRegime::BSB, 0);
    c.omega_c = 0.0;
    const ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    const Spectrum s = scan_spectrum(p, c, 1);
    EXPECT_NEAR(s.detunings[argmax_in(s, p.detuning_min, p.detuning_max)], 0.0, 1e-9);
    EXPECT_NEAR(*std::max_element(s.p_excited.begin(), s.p_excited.end()),
                oracle::rabi_population(c.omega_p, p.probe_duration), 1e-9);
    const FitResult f = fit_peaks(s, 1, PeakModel::Gaussian, probabilities());
    ASSERT_EQ(f.peaks.size(), 1u);
    EXPECT_NEAR(f.peaks[0].center, 0.0, 1e-3 * fourier_fwhm(p.probe_duration));
}

TEST(Scan, RsbToBsbSplittingRatioAtFirstFockLevel) {
    double split[2];
    int k = 0;
    for (auto regime : {SidebandRegime::RSB, SidebandRegime::BSB}) {
        SystemConfig c = fock_config(SidebandRegime::BSB, 1);
        const ScanPlan p = fock_plan(c, regime, 1);
        const Spectrum s = scan_spectrum(p, c, 2);
        split[k++] = fit_peaks(s, 1, PeakModel::Gaussian, probabilities()).splitting;
    }
    EXPECT_NEAR(split[0] / split[1], 1.0 / std::numbers::sqrt2, 0.01 / std::numbers::sqrt2);
}

TEST(ScanProperty, SpectrumIsSymmetricInDetuning) {
    gen::for_all(10, 61, [](gen::Gen& g, int i) {
        SystemConfig c = g.config(8);
        const auto regime = g.integer(0, 1) ? SidebandRegime::RSB : SidebandRegime::BSB;
        ScanPlan p;
        p.regime = regime;
        p.n_points = 41;
        p.detuning_max = 2.0 * coupling_g(c) * 2.5;
        p.detuning_min = -p.detuning_max;
        p.probe_duration = probe_pi_time(c);
        p.initial = g.integer(0, 1) ? MotionalInit::fock(g.integer(0, 3)) : MotionalInit::thermal(g.uniform(0.0, 0.3));
        c.fock_dim = 14;
        const Spectrum s = scan_spectrum(p, c, 1);
        for (int k = 0; k < p.n_points; ++k)
            EXPECT_NEAR(s.p_excited[k], s.p_excited[p.n_points - 1 - k], 1e-6) << "case " << i << " point " << k;
    });
}

TEST(Scan, ShotSamplingIsUnbiased) {
    SystemConfig c = fock_config(SidebandRegime::BSB, 0);
    ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    p.n_points = 5;
    p.shots_per_point = 50;
    const int seeds = 1000;
    std::vector<double> mean(p.n_points, 0.0);
    std::vector<double> prob;
    for (int s = 0; s < seeds; ++s) {
        const Spectrum sp = scan_spectrum(p, c, static_cast<std::uint64_t>(s));
        prob = sp.p_excited;
        for (int k = 0; k < p.n_points; ++k) mean[k] += static_cast<double>(sp.counts[k]) / sp.shots / seeds;
    }
    for (int k = 0; k < p.n_points; ++k) {
        const double sigma = std::sqrt(prob[k] * (1 - prob[k]) / (p.shots_per_point * seeds));
        EXPECT_NEAR(mean[k], prob[k], 4.0 * sigma + 1e-12) << k;
    }
}

TEST(Scan, ThreadCountDoesNotChangeResult) {
    const SystemConfig c = fock_config(SidebandRegime::BSB, 2);
    const ScanPlan p = fock_plan(c, SidebandRegime::BSB, 2);
    ScanOptions one, four;
    four.threads = 4;
    const Spectrum a = scan_spectrum(p, c, 9, one);
    const Spectrum b = scan_spectrum(p, c, 9, four);
    EXPECT_EQ(a.p_excited, b.p_excited);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Scan, DissipativeScanMatchesClosedScanWhenRatesVanish) {
    SystemConfig c = fock_config(SidebandRegime::BSB, 1);
    ScanPlan p = fock_plan(c, SidebandRegime::BSB, 1);
    p.n_points = 21;
    const Spectrum closed = scan_spectrum(p, c, 1);
    c.gamma_sd = 1e-9;
    const Spectrum open = scan_spectrum(p, c, 1);
    for (int k = 0; k < p.n_points; ++k) EXPECT_NEAR(open.p_excited[k], closed.p_excited[k], 1e-6);
}

TEST(Scan, DecayBroadensLines) {
    SystemConfig c = fock_config(SidebandRegime::BSB, 6);
    ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    p.n_points = 61;
    ScanOptions so;
    so.threads = 4;
    auto width = [&] { return fit_peaks(scan_spectrum(p, c, 1, so), 1, PeakModel::Gaussian, probabilities()).peaks[0].width; };
    const double w0 = width();
    c.gamma_sd = kTwoPi * 150.0;
    EXPECT_GT(width(), w0);
}

TEST(Scan, PlanValidation) {
    ScanPlan p;
    p.n_points = 2;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.detuning_max = p.detuning_min;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.probe_duration = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.shots_per_point = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    EXPECT_EQ(p.grid().front(), p.detuning_min);
    EXPECT_EQ(p.grid().back(), p.detuning_max);
}

TEST(Scan, TruncationIsReported) {
    SystemConfig c = preset_bsb();
    c.fock_dim = 5;
    ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    p.initial = MotionalInit::thermal(2.0);
    EXPECT_THROW(scan_spectrum(p, c, 1), TruncationError);
}

TEST(Wilson, KnownValues) {
    const auto a = wilson_interval(5, 10);
    EXPECT_NEAR(a.lo, 0.5 - std::sqrt(0.0275) / 1.1, 1e-12);
    EXPECT_NEAR(a.hi, 0.5 + std::sqrt(0.0275) / 1.1, 1e-12);
    const auto z = wilson_interval(0, 100);
    EXPECT_EQ(z.lo, 0.0);
    EXPECT_GT(z.hi, 0.0);
    const auto o = wilson_interval(100, 100);
    EXPECT_NEAR(o.hi, 1.0, 1e-15);
    EXPECT_LT(o.lo, 1.0);
}

// ---------------------------------------------------------------------------
// Peak fitting

TEST(PeakShape, HalfMaximumAtHalfWidth) {
    for (auto m : {PeakModel::Gaussian, PeakModel::Lorentzian}) {
        EXPECT_NEAR(peak_shape(m, 0.0, 3.0), 1.0, 1e-15);
        EXPECT_NEAR(peak_shape(m, 1.5, 3.0), 0.5, 1e-15);
        EXPECT_NEAR(peak_shape(m, -1.5, 3.0), 0.5, 1e-15);
    }
    EXPECT_NEAR(peak_shape(PeakModel::Gaussian, 2.0, 3.0), oracle::gaussian(2.0, 0.0, 3.0), 1e-15);
}

TEST(FitProperty, RecoversSyntheticDoublet) {
    gen::for_all(20, 71, [](gen::Gen& g, int i) {
        const auto model = g.integer(0, 1) ? PeakModel::Gaussian : PeakModel::Lorentzian;
        const double c = g.uniform(5e3, 2e4), w = g.uniform(0.05, 0.2) * c, a = g.uniform(0.3, 1.0),
                     b = g.uniform(0.0, 0.1);
        const auto x = linspace(-2.0 * c, 2.0 * c, g.integer(81, 201));
        const Spectrum s = synthetic(x, {{c, a}, {-c, a}}, w, b, model);
        const FitResult f = fit_peaks(s, 1, model);
        ASSERT_EQ(f.peaks.size(), 2u) << "case " << i;
        EXPECT_NEAR(f.splitting / (2.0 * c), 1.0, 1e-3) << "case " << i;
        EXPECT_NEAR(f.peaks[1].width / w, 1.0, 1e-3) << "case " << i;
        EXPECT_NEAR(f.peaks[1].amplitude, a, 1e-3) << "case " << i;
        EXPECT_NEAR(f.background, b, 1e-3) << "case " << i;
    });
}

TEST(Fit, TwoPairs) {
    const auto x = linspace(-40e3, 40e3, 321);
    const Spectrum s = synthetic(x, {{10e3, 0.6}, {-10e3, 0.6}, {25e3, 0.3}, {-25e3, 0.3}}, 2e3, 0.02,
                                 PeakModel::Gaussian);
    const FitResult f = fit_peaks(s, 2, PeakModel::Gaussian);
    ASSERT_EQ(f.peaks.size(), 4u);
    EXPECT_NEAR(f.peaks[0].center, -25e3, 25.0);
    EXPECT_NEAR(f.peaks[3].center, 25e3, 25.0);
    EXPECT_NEAR(f.splitting, 20e3, 20.0);
}

TEST(Fit, FlatSpectrumRaises) {
    Spectrum s;
    s.detunings = linspace(-1.0, 1.0, 50);
    s.p_excited.assign(50, 0.3);
    EXPECT_THROW(fit_peaks(s, 1, PeakModel::Gaussian), FitError);
    s.p_excited.resize(4);
    s.detunings.resize(4);
    EXPECT_THROW(fit_peaks(s, 1, PeakModel::Gaussian), InvalidArgument);
}

TEST(FitProperty, AmplitudeRescaleLeavesCentresUnchanged) {
    gen::for_all(10, 72, [](gen::Gen& g, int i) {
        const auto x = linspace(-30e3, 30e3, 161);
        const double c = g.uniform(5e3, 15e3), w = g.uniform(1e3, 3e3);
        const Spectrum s = synthetic(x, {{c, 0.8}, {-c, 0.8}}, w, 0.05, PeakModel::Gaussian);
        Spectrum t = s;
        const double k = g.uniform(0.1, 0.9), b = g.uniform(0.0, 0.05);
        for (auto& v : t.p_excited) v = k * v + b;
        const double s1 = fit_peaks(s, 1, PeakModel::Gaussian).splitting;
        const double s2 = fit_peaks(t, 1, PeakModel::Gaussian).splitting;
        EXPECT_NEAR(s2 / s1, 1.0, 1e-6) << "case " << i;
    });
}

TEST(Fit, ShotSampledGroundStateSplitting) {
    const SystemConfig c = fock_config(SidebandRegime::BSB, 0);
    const ScanPlan p = fock_plan(c, SidebandRegime::BSB, 0);
    const Spectrum s = scan_spectrum(p, c, 4);
    const FitResult clean = fit_peaks(s, 1, PeakModel::Gaussian, probabilities());
    EXPECT_NEAR(clean.splitting / (2.0 * coupling_g(c)), 1.0, 2e-3);
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const FitResult f = fit_peaks(scan_spectrum(p, c, seed), 1, PeakModel::Gaussian);
        within += std::abs(f.splitting - clean.splitting) < 3.0 * f.splitting_sigma;
    }
    EXPECT_GE(within, 9);
}

TEST(Fit, FixedCentresRecoverAmplitudes) {
    const auto x = linspace(-40e3, 40e3, 401);
    const Spectrum s = synthetic(x, {{0.0, 0.5}, {10e3, 0.3}, {-10e3, 0.3}, {20e3, 0.1}, {-20e3, 0.1}}, 1.5e3, 0.01,
                                 PeakModel::Gaussian);
    const auto f = fit_fixed_centers(s, {0.0, 10e3, 20e3}, PeakModel::Gaussian, 1e3);
    EXPECT_NEAR(f.amplitudes(0), 0.5, 1e-6);
    EXPECT_NEAR(f.amplitudes(1), 0.3, 1e-6);
    EXPECT_NEAR(f.amplitudes(2), 0.1, 1e-6);
    EXPECT_NEAR(f.width, 1.5e3, 1e-2);
    EXPECT_NEAR(f.background, 0.01, 1e-6);
}

// ---------------------------------------------------------------------------
// Scaling

TEST(Scaling, ExactSquareRootLaw) {
    std::map<int, double> bsb, rsb;
    for (int n = 0; n <= 5; ++n) {
        bsb[n] = 7.0 * std::sqrt(n + 1.0);
        rsb[n] = 3.0 * std::sqrt(static_cast<double>(n));
    }
    const auto fb = extract_scaling(bsb, SidebandRegime::BSB);
    EXPECT_NEAR(fb.amplitude, 7.0, 1e-12);
    EXPECT_NEAR(fb.exponent, 0.5, 1e-12);
    EXPECT_LT(fb.max_relative_residual, 1e-12);
    EXPECT_EQ(fb.residuals.size(), 6u);
    const auto fr = extract_scaling(rsb, SidebandRegime::RSB);
    EXPECT_NEAR(fr.amplitude, 3.0, 1e-12);
    EXPECT_EQ(fr.residuals.count(0), 0u);
    EXPECT_EQ(fr.residuals.size(), 5u);
}

TEST(Scaling, ResidualsExposeDeviation) {
    std::map<int, double> rsb{{1, 1.0}, {2, std::sqrt(2.0)}, {3, std::sqrt(3.0) * 1.05}, {4, 2.0}};
    const auto f = extract_scaling(rsb, SidebandRegime::RSB);
    double worst = 0.0;
    int at = -1;
    for (const auto& [n, r] : f.residuals)
        if (std::abs(r) > worst) {
            worst = std::abs(r);
            at = n;
        }
    EXPECT_EQ(at, 3);
    EXPECT_GT(f.max_relative_residual, 0.03);
}

TEST(Scaling, RejectsTooFewPoints) {
    EXPECT_THROW(extract_scaling({{0, 0.0}, {1, 1.0}, {2, 1.4}}, SidebandRegime::RSB), InvalidArgument);
    EXPECT_THROW(extract_scaling({{1, 1.0}, {2, 1.4}, {3, 1.7}}, SidebandRegime::Carrier), InvalidArgument);
    EXPECT_THROW(extract_scaling({{-1, 1.0}, {2, 1.4}, {3, 1.7}}, SidebandRegime::BSB), InvalidArgument);
}

TEST(Scaling, SimulatedAmplitudeMatchesCalibration) {
    const SystemConfig c = fock_config(SidebandRegime::BSB, 3);
    std::map<int, double> split;
    for (int n = 0; n <= 3; ++n) {
        const Spectrum s = scan_spectrum(fock_plan(c, SidebandRegime::BSB, n), c, 10 + n);
        FitOptions o;
        o.seed_centers = {sideband_rate(c, SidebandRegime::BSB, n, CouplingOrder::FirstOrder)};
        split[n] = fit_peaks(s, 1, PeakModel::Gaussian, o).splitting;
    }
    const auto f = extract_scaling(split, SidebandRegime::BSB);
    EXPECT_NEAR(f.amplitude / (2.0 * rabi_calibration(c)), 1.0, 0.03);
    EXPECT_NEAR(f.exponent, 0.5, 0.02);
}

// ---------------------------------------------------------------------------
// Thermal reconstruction

TEST(Geometric, FitRecoversMean) {
    for (double nb : {0.0, 0.3, 0.81, 2.23, 5.0}) {
        const auto p = truncated_geometric(nb, 7);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-14);
        EXPECT_NEAR(fit_geometric(p).first, nb, 1e-5 * (1.0 + nb));
    }
    EXPECT_THROW(fit_geometric({1.0}), InvalidArgument);
}

TEST(Thermal, ResolutionLimit) {
    const SystemConfig c = preset_bsb();
    const int r = max_resolvable_n(c, SidebandRegime::BSB, probe_pi_time(c));
    EXPECT_GE(r, 4);
    EXPECT_LT(r, 64);
    ScanPlan p = default_scan_plan(c, SidebandRegime::BSB, MotionalInit::thermal(0.81), r + 1);
    Spectrum s;
    s.detunings = p.grid();
    s.p_excited.assign(s.detunings.size(), 0.1);
    s.p_excited[3] = 0.5;
    EXPECT_THROW(reconstruct_thermal(s, c, r + 1), UnresolvablePeaks);
    ThermalOptions carrier;
    carrier.regime = SidebandRegime::Carrier;
    EXPECT_THROW(reconstruct_thermal(s, c, 3, carrier), InvalidArgument);
}

TEST(Thermal, ExpectedLinewidth) {
    SystemConfig c = preset_bsb();
    EXPECT_DOUBLE_EQ(expected_line_fwhm(c, SidebandRegime::BSB, 2, 1e-3), 5e3);
    c.gamma_sd = 100.0;
    EXPECT_DOUBLE_EQ(expected_line_fwhm(c, SidebandRegime::BSB, 2, 1e-3), 5100.0);
    EXPECT_DOUBLE_EQ(expected_line_fwhm(c, SidebandRegime::RSB, 0, 1e-3), 5e3);
}

namespace {

ThermalResult reconstruct(const SystemConfig& base, MotionalInit init, int n_max, std::uint64_t seed) {
    SystemConfig c = base;
    const double nb = init.kind == MotionalInit::Kind::Thermal ? init.n_bar : 0.0;
    c.fock_dim = std::max({required_fock_dim(nb), n_max + 3, init.n + 3});
    ScanPlan p = default_scan_plan(c, SidebandRegime::BSB, init, n_max);
    p.n_points = 401;
    ScanOptions so;
    so.threads = 4;
    return reconstruct_thermal(scan_spectrum(p, c, seed, so), c, n_max);
}

}  // namespace

TEST(Thermal, MeasuredTemperatureIsRecovered) {
    const auto r = reconstruct(preset_bsb(), MotionalInit::thermal(0.81), 7, 7);
    EXPECT_GE(r.n_bar, 0.66);
    EXPECT_LE(r.n_bar, 0.96);
    EXPECT_NEAR(std::accumulate(r.populations.begin(), r.populations.end(), 0.0), 1.0, 1e-12);
}

TEST(Thermal, FockStateIsConcentrated) {
    const auto r = reconstruct(preset_bsb(), MotionalInit::fock(2), 5, 3);
    EXPECT_GT(r.populations[2], 0.8);
    for (int n = 0; n <= 5; ++n)
        if (n != 2) {
            EXPECT_LT(r.populations[n], 0.1) << n;
        }
}

TEST(Thermal, GroundStateGivesZeroMean) {
    const auto r = reconstruct(preset_bsb(), MotionalInit::thermal(0.0), 5, 5);
    EXPECT_LT(r.n_bar, 0.05);
    EXPECT_GT(r.populations[0], 0.95);
}
