// atspec: command-line driver for spectra, Fock detection, thermometry and
// splitting-scaling studies.
//
// exit codes: 0 ok, 1 internal error, 2 config/usage, 3 physics guard, 4 fit

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "atspec/io/config.hpp"
#include "atspec/io/output.hpp"
#include "atspec/model/dressed.hpp"
#include "atspec/sequence/protocol.hpp"
#include "atspec/spectroscopy/fit.hpp"
#include "atspec/spectroscopy/scaling.hpp"
#include "atspec/spectroscopy/scan.hpp"
#include "atspec/spectroscopy/thermal.hpp"

namespace fs = std::filesystem;
using namespace atspec;
using io::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kPhysics = 3, kFit = 4 };

struct Common {
    std::optional<std::string> config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

struct Outputs {
    fs::path dir;
    io::OutputFormat format;

    fs::path path(const std::string& stem, const char* ext) const { return dir / (stem + ext); }
    void table(const std::string& stem, const std::string& csv, const json& js) const {
        if (format == io::OutputFormat::Csv)
            io::write_file(path(stem, ".csv"), csv);
        else
            io::write_file(path(stem, ".json"), io::dump(js));
    }
    void json_file(const std::string& stem, const json& js) const { io::write_file(path(stem, ".json"), io::dump(js)); }
};

void warn_config(const SystemConfig& cfg) {
    for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
}

ScanPlan plan_from(const io::RunConfig& rc, const SystemConfig& cfg, MotionalInit init, int n_max) {
    ScanPlan plan = default_scan_plan(cfg, rc.regime(), init, n_max, rc.scan.order);
    if (rc.scan.detuning_min) {
        plan.detuning_min = *rc.scan.detuning_min;
        plan.detuning_max = *rc.scan.detuning_max;
    }
    if (rc.scan.probe_duration) plan.probe_duration = *rc.scan.probe_duration;
    plan.n_points = rc.scan.n_points;
    plan.shots_per_point = rc.scan.shots_per_point;
    return plan;
}

/// Fock dimension large enough for the initial state and the sideband step.
int fock_dim_for(const SystemConfig& cfg, const MotionalInit& init, int n_max) {
    int nf = std::max(cfg.fock_dim, n_max + 3);
    if (init.kind == MotionalInit::Kind::Thermal) nf = std::max(nf, required_fock_dim(init.n_bar));
    return nf;
}

/// One-pair fit seeded at the analytic doublet position (a single line when
/// the coupling vanishes).
FitResult fit_doublet(const Spectrum& s, const SystemConfig& cfg, SidebandRegime regime, int n, CouplingOrder order,
                      PeakModel model, double probe_duration) {
    FitOptions fo;
    fo.seed_centers = {regime == SidebandRegime::Carrier ? 0.0 : sideband_rate(cfg, regime, n, order)};
    fo.seed_width = fourier_fwhm(probe_duration);
    return fit_peaks(s, 1, model, fo);
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const io::RunConfig& rc, const Outputs& out, unsigned threads) {
    SystemConfig cfg = rc.system;
    const auto& init = rc.scan.initial;
    const int n_ref = init.kind == MotionalInit::Kind::Fock ? init.n : rc.thermal.n_max;
    cfg.fock_dim = fock_dim_for(cfg, init, n_ref);
    warn_config(cfg);
    const ScanPlan plan = plan_from(rc, cfg, init, n_ref);
    ScanOptions so;
    so.threads = threads;
    const Spectrum s = scan_spectrum(plan, cfg, rc.seed, so);
    out.table("spectrum", io::spectrum_csv(s), io::spectrum_json(s));

    json notes{{"fock_dim_used", cfg.fock_dim}, {"probe_duration", plan.probe_duration}};
    out.json_file("manifest", io::manifest("spectrum", rc, notes));
    try {
        const auto fit = fit_doublet(s, cfg, plan.regime, n_ref, plan.order, rc.scan.model, plan.probe_duration);
        json fj = io::fit_json(fit);
        fj["expected_splitting_hz"] =
            io::to_hz(plan.regime == SidebandRegime::Carrier ? 0.0 : 2.0 * sideband_rate(cfg, plan.regime, n_ref, plan.order));
        out.json_file("fit", fj);
        std::cout << "spectrum: " << s.size() << " points, " << fit.peaks.size() << " peak(s), splitting "
                  << io::fmt(io::to_hz(fit.splitting)) << " Hz\n";
    } catch (const FitError& e) {
        out.json_file("fit", json{{"error", e.what()}});
        std::cerr << "fit failed: " << e.what() << "\n";
        return kFit;
    }
    return kOk;
}

int cmd_detect(const io::RunConfig& rc, const Outputs& out, unsigned threads) {
    SystemConfig cfg = rc.system;
    const auto& q = rc.sequence;
    const int top = std::max(*std::max_element(q.prepared.begin(), q.prepared.end()),
                             *std::max_element(q.probed.begin(), q.probed.end()));
    if (top + 3 > cfg.fock_dim)
        throw InvalidArgument("detect: Fock index " + std::to_string(top) + " needs fock_dim >= " +
                              std::to_string(top + 3) + " (have " + std::to_string(cfg.fock_dim) + ")");
    warn_config(cfg);
    const DetectionModel dm{q.eps_bright, q.eps_dark, q.demolition, q.n_bar_reset};
    DetectOptions opt;
    opt.variant = q.variant;
    opt.branch = q.branch;
    opt.regime = rc.regime();
    opt.probe_duration = rc.scan.probe_duration;
    const HilbertSpec spec(cfg.fock_dim);

    const std::size_t rows = q.prepared.size(), cols = q.probed.size();
    std::vector<double> prob(rows * cols);
    std::vector<std::vector<bool>> shots(rows * cols);
    parallel_for(rows * cols, threads, [&](std::size_t cell) {
        const ProtocolRunner runner(cfg, dm, rc.scan.order);
        const int n = q.prepared[cell / cols], m = q.probed[cell % cols];
        const DensityMatrix state = embed(Level::D, fock_density(n, cfg.fock_dim), spec);
        prob[cell] = positive_probability(runner, state, m, opt);
        Rng rng = make_rng(rc.seed, cell);
        auto& v = shots[cell];
        v.resize(q.shots);
        for (int k = 0; k < q.shots; ++k) v[k] = uniform01(rng) < prob[cell];
    });

    json pm = json::array(), em = json::array();
    std::string shot_csv = "prepared,probed,shot,positive\n";
    json shot_js = json::array();
    for (std::size_t i = 0; i < rows; ++i) {
        json pr = json::array(), er = json::array();
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& v = shots[i * cols + j];
            int pos = 0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                pos += v[k];
                shot_csv += std::to_string(q.prepared[i]) + "," + std::to_string(q.probed[j]) + "," +
                            std::to_string(k) + "," + (v[k] ? "1" : "0") + "\n";
                shot_js.push_back({q.prepared[i], q.probed[j], k, v[k] ? 1 : 0});
            }
            pr.push_back(prob[i * cols + j]);
            er.push_back(static_cast<double>(pos) / q.shots);
        }
        pm.push_back(pr);
        em.push_back(er);
    }
    out.json_file("response", json{{"variant", io::enum_name(q.variant)},
                                   {"branch", io::enum_name(q.branch)},
                                   {"regime", regime_name(opt.regime)},
                                   {"positive_outcome", outcome_name(positive_outcome(q.variant))},
                                   {"prepared", q.prepared},
                                   {"probed", q.probed},
                                   {"shots", q.shots},
                                   {"probability", pm},
                                   {"empirical", em}});
    out.table("shots", shot_csv, json{{"columns", {"prepared", "probed", "shot", "positive"}}, {"rows", shot_js}});
    out.json_file("manifest", io::manifest("detect", rc));
    std::cout << "detect: " << rows << "x" << cols << " response matrix (" << io::enum_name(q.variant) << ")\n";
    return kOk;
}

int cmd_thermal(const io::RunConfig& rc, const Outputs& out, unsigned threads) {
    SystemConfig cfg = rc.system;
    const double nb = rc.thermal.n_bar;
    const int n_max = rc.thermal.n_max;
    const MotionalInit init = MotionalInit::thermal(nb);
    cfg.fock_dim = fock_dim_for(cfg, init, n_max);
    warn_config(cfg);
    ScanPlan plan = plan_from(rc, cfg, init, n_max);
    plan.n_points = rc.thermal.n_points;
    ScanOptions so;
    so.threads = threads;
    const Spectrum s = scan_spectrum(plan, cfg, rc.seed, so);
    out.table("spectrum", io::spectrum_csv(s), io::spectrum_json(s));
    const int resolvable = max_resolvable_n(cfg, plan.regime, plan.probe_duration, 64, plan.order);
    out.json_file("manifest", io::manifest("thermal", rc, json{{"fock_dim_used", cfg.fock_dim}}));

    ThermalOptions to;
    to.regime = plan.regime;
    to.order = plan.order;
    to.model = rc.scan.model;
    to.probe_duration = plan.probe_duration;
    try {
        const auto r = reconstruct_thermal(s, cfg, n_max, to);
        json tj = io::thermal_json(r, nb, cfg.fock_dim);
        tj["resolvable_n_max"] = resolvable;
        out.json_file("thermal", tj);
        std::cout << "thermal: n_bar input " << io::fmt(nb) << ", fitted " << io::fmt(r.n_bar) << " +- "
                  << io::fmt(r.n_bar_sigma) << "\n";
    } catch (const UnresolvablePeaks& e) {
        out.json_file("thermal", json{{"error", e.what()}, {"resolvable_n_max", resolvable}});
        std::cerr << "warning: " << e.what() << "\n";
        return kFit;
    } catch (const FitError& e) {
        out.json_file("thermal", json{{"error", e.what()}, {"resolvable_n_max", resolvable}});
        std::cerr << "fit failed: " << e.what() << "\n";
        return kFit;
    }
    return kOk;
}

int cmd_scaling(const io::RunConfig& rc, const Outputs& out, unsigned threads) {
    SystemConfig cfg = rc.system;
    const SidebandRegime regime = rc.regime();
    const auto& ns = rc.scaling.n_list;
    cfg.fock_dim = std::max(cfg.fock_dim, *std::max_element(ns.begin(), ns.end()) + 3);
    warn_config(cfg);
    std::vector<io::ScalingRow> rows;
    std::map<int, double> splittings;
    int status = kOk;
    ScanOptions so;
    so.threads = threads;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const int n = ns[i];
        io::ScalingRow row{n, 0.0, 0.0, ""};
        if (regime == SidebandRegime::Carrier || sideband_rate(cfg, regime, n, rc.scan.order) == 0.0) {
            row.note = "no sideband coupling";
            rows.push_back(row);
            continue;
        }
        const ScanPlan plan = plan_from(rc, cfg, MotionalInit::fock(n), n);
        const Spectrum s = scan_spectrum(plan, cfg, derive_seed(rc.seed, i), so);
        out.table("spectrum_n" + std::to_string(n), io::spectrum_csv(s), io::spectrum_json(s));
        try {
            const auto fit = fit_doublet(s, cfg, regime, n, plan.order, rc.scan.model, plan.probe_duration);
            row.splitting = fit.splitting;
            row.sigma = fit.splitting_sigma;
            splittings[n] = fit.splitting;
        } catch (const FitError& e) {
            row.note = std::string("fit failed: ") + e.what();
            status = kFit;
        }
        rows.push_back(row);
    }
    out.table("scaling", io::scaling_csv(rows), json{{"rows", io::scaling_rows_json(rows)}});
    out.json_file("manifest", io::manifest("scaling", rc));

    std::size_t usable = 0;
    for (const auto& [n, s] : splittings) usable += (n + scaling_offset(regime) > 0);
    if (regime == SidebandRegime::Carrier || usable < 3) {
        out.json_file("scaling_fit", json{{"skipped", "scaling fit needs at least 3 phonon numbers with coupling"}});
        std::cout << "scaling: " << rows.size() << " row(s), fit skipped\n";
        return status;
    }
    const auto sf = extract_scaling(splittings, regime);
    out.json_file("scaling_fit", io::scaling_fit_json(sf, regime, 2.0 * coupling_g(cfg)));
    std::cout << "scaling: A = " << io::fmt(io::to_hz(sf.amplitude)) << " Hz, exponent " << io::fmt(sf.exponent)
              << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autler-Townes phonon-number spectroscopy simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::kVersion);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "YAML config file (or a previous run's manifest.json)")
            ->check(CLI::ExistingFile);
        sub->add_option("--set", common.sets, "Override a config key, e.g. system.omega_c=0")->take_all();
        sub->add_option("--seed", common.seed, "RNG seed");
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--format", common.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    };

    auto* spectrum = app.add_subcommand("spectrum", "Probe-detuning scan and doublet fit");
    add_common(spectrum);

    std::optional<std::string> prepared, probed, variant;
    auto* detect = app.add_subcommand("detect", "Fock-state detection response matrix");
    add_common(detect);
    detect->add_option("--prepared", prepared, "Prepared Fock states, list or range (e.g. 0..8)");
    detect->add_option("--probed", probed, "Probed Fock states, list or range");
    detect->add_option("--variant", variant, "destructive or qnd");

    std::optional<double> n_bar;
    std::optional<int> n_max;
    auto* thermal = app.add_subcommand("thermal", "Thermal scan and phonon-distribution reconstruction");
    add_common(thermal);
    thermal->add_option("--n-bar", n_bar, "Mean phonon number of the simulated thermal state");
    thermal->add_option("--n-max", n_max, "Highest Fock level reconstructed");

    std::optional<std::string> n_list, regime;
    auto* scaling = app.add_subcommand("scaling", "Splitting versus phonon number");
    add_common(scaling);
    scaling->add_option("--n", n_list, "Phonon numbers, list or range (e.g. 0..5)");
    scaling->add_option("--regime", regime, "bsb or rsb");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    std::vector<std::string> sets = common.sets;
    auto list_value = [](const std::string& s) {
        return s.find("..") != std::string::npos || s.find('[') != std::string::npos ? s : "[" + s + "]";
    };
    if (common.seed) sets.push_back("seed=" + std::to_string(*common.seed));
    if (common.out) sets.push_back("output.dir=" + *common.out);
    if (common.format) sets.push_back("output.format=" + *common.format);
    if (prepared) sets.push_back("sequence.prepared=" + list_value(*prepared));
    if (probed) sets.push_back("sequence.probed=" + list_value(*probed));
    if (variant) sets.push_back("sequence.variant=" + *variant);
    if (n_bar) sets.push_back("thermal.n_bar=" + io::fmt(*n_bar));
    if (n_max) sets.push_back("thermal.n_max=" + std::to_string(*n_max));
    if (n_list) sets.push_back("scaling.n_list=" + list_value(*n_list));
    if (regime) sets.push_back("scan.regime=" + *regime);

    try {
        io::RunConfig rc = io::load_run_config(common.config, sets);
        // an explicit regime moves the coupling field onto that sideband
        if (rc.scan.regime && *rc.scan.regime != nearest_regime(rc.system))
            rc.system = with_regime(rc.system, *rc.scan.regime);
        const Outputs out{fs::path(rc.output.dir), rc.output.format};
        if (spectrum->parsed()) return cmd_spectrum(rc, out, common.threads);
        if (detect->parsed()) return cmd_detect(rc, out, common.threads);
        if (thermal->parsed()) return cmd_thermal(rc, out, common.threads);
        if (scaling->parsed()) return cmd_scaling(rc, out, common.threads);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kConfig;
    } catch (const TruncationError& e) {
        std::cerr << "physics guard: " << e.what() << "\n";
        return kPhysics;
    } catch (const IntegrationError& e) {
        std::cerr << "physics guard: " << e.what() << "\n";
        return kPhysics;
    } catch (const UnresolvablePeaks& e) {
        std::cerr << "unresolvable peaks: " << e.what() << "\n";
        return kFit;
    } catch (const FitError& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return kFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
