#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "atspec/io/config.hpp"
#include "atspec/io/output.hpp"

using namespace atspec;
using namespace atspec::io;

namespace {

RunConfig from_text(const std::string& yaml, const std::vector<std::string>& sets = {}) {
    FlatConfig flat = flatten_yaml(yaml, "test.yaml");
    for (const auto& s : sets) apply_override(flat, s);
    return build_run_config(std::move(flat));
}

std::string config_error(const std::string& yaml, const std::vector<std::string>& sets = {}) {
    try {
        from_text(yaml, sets);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, EmptyGivesBsbPreset) {
    const RunConfig c = from_text("");
    EXPECT_EQ(c.preset, "bsb");
    EXPECT_EQ(c.system.omega_c, preset_bsb().omega_c);
    EXPECT_EQ(c.regime(), SidebandRegime::BSB);
    EXPECT_EQ(c.seed, 1u);
}

TEST(Config, FrequenciesReadInHz) {
    const RunConfig c = from_text(
        "system:\n  omega_p: 500\n  delta_p: -250\n  gamma_sd: 3.5\n"
        "scan:\n  detuning_min: -1000\n  detuning_max: 2000\n");
    EXPECT_DOUBLE_EQ(c.system.omega_p, kTwoPi * 500.0);
    EXPECT_DOUBLE_EQ(c.system.delta_p, -kTwoPi * 250.0);
    EXPECT_DOUBLE_EQ(c.system.gamma_sd, 3.5);
    EXPECT_DOUBLE_EQ(*c.scan.detuning_min, -kTwoPi * 1000.0);
    EXPECT_DOUBLE_EQ(*c.scan.detuning_max, kTwoPi * 2000.0);
}

TEST(Config, Omega0SetsGroundStateRate) {
    const RunConfig c = from_text("system:\n  eta: 0.1\n  omega0: 5000\n");
    EXPECT_NEAR(coupling_g(c.system), kTwoPi * 5000.0, 1e-9);
}

TEST(Config, EtaAloneKeepsSidebandRate) {
    const RunConfig c = from_text("system:\n  eta: 0.03\n");
    EXPECT_NEAR(coupling_g(c.system), coupling_g(preset_bsb()), 1e-6);
}

TEST(Config, Omega0AndOmegaCConflict) {
    EXPECT_NE(config_error("system:\n  omega0: 1\n  omega_c: 2\n").find("not both"), std::string::npos);
}

TEST(Config, RsbPresetAndNuKeepsRegime) {
    const RunConfig c = from_text("preset: rsb\nsystem:\n  nu: 2.0e6\n");
    EXPECT_EQ(c.regime(), SidebandRegime::RSB);
    EXPECT_DOUBLE_EQ(c.system.delta_c, -kTwoPi * 2.0e6);
}

TEST(Config, UnknownKeyReportsLineAndColumn) {
    const std::string msg = config_error("system:\n  eta: 0.05\n  omgea_p: 3\n");
    EXPECT_NE(msg.find("test.yaml:3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("system.omgea_p"), std::string::npos) << msg;
}

TEST(Config, MalformedYamlReportsLocation) {
    const std::string msg = config_error("system:\n  eta: [0.05\n");
    EXPECT_NE(msg.find("test.yaml:"), std::string::npos) << msg;
}

TEST(Config, BadValuesRejected) {
    EXPECT_NE(config_error("system:\n  eta: fast\n"), "");
    EXPECT_NE(config_error("scan:\n  regime: sideways\n").find("carrier, rsb"), std::string::npos);
    EXPECT_NE(config_error("scan:\n  n_points: 2\n"), "");
    EXPECT_NE(config_error("scan:\n  detuning_min: 10\n"), "");
    EXPECT_NE(config_error("scan:\n  detuning_min: 10\n  detuning_max: 5\n"), "");
    EXPECT_NE(config_error("sequence:\n  eps_bright: 1.5\n"), "");
    EXPECT_NE(config_error("sequence:\n  probed: []\n"), "");
    EXPECT_NE(config_error("system:\n  eta: 0\n"), "");
    EXPECT_NE(config_error("preset: blue\n").find("unknown preset"), std::string::npos);
    EXPECT_NE(config_error("- 1\n- 2\n").find("mapping"), std::string::npos);
    EXPECT_NE(config_error("system:\n  eta: 0.05\n  eta: 0.06\n").find("duplicate"), std::string::npos);
}

TEST(Config, OverridesWinAndParseTypes) {
    const RunConfig c = from_text("seed: 4\nsystem:\n  kappa: 2\n",
                                  {"seed=9", "system.kappa=7.5", "scan.order=exact", "output.format=json"});
    EXPECT_EQ(c.seed, 9u);
    EXPECT_DOUBLE_EQ(c.system.kappa, 7.5);
    EXPECT_EQ(c.scan.order, CouplingOrder::Exact);
    EXPECT_EQ(c.output.format, OutputFormat::Json);
}

TEST(Config, OverrideReplacesSubtree) {
    const RunConfig c = from_text("scan:\n  initial:\n    kind: fock\n    n: 3\n", {"scan.initial.kind=thermal",
                                                                               "scan.initial.n_bar=0.8"});
    EXPECT_EQ(c.scan.initial.kind, MotionalInit::Kind::Thermal);
    EXPECT_DOUBLE_EQ(c.scan.initial.n_bar, 0.8);
    EXPECT_NE(config_error("scan:\n  initial:\n    kind: fock\n    n: 3\n", {"scan.initial=5"}).find("unknown key 'scan.initial'"),
              std::string::npos);
}

TEST(Config, OverrideErrors) {
    FlatConfig flat;
    EXPECT_THROW(apply_override(flat, "novalue"), ConfigError);
    EXPECT_THROW(apply_override(flat, "=3"), ConfigError);
    EXPECT_THROW(apply_override(flat, "a={b: 1}"), ConfigError);
    apply_override(flat, "system.nonsense=1");
    EXPECT_THROW(build_run_config(flat), ConfigError);
}

TEST(Config, IntListsAcceptRangesAndSequences) {
    const RunConfig c = from_text("sequence:\n  prepared: 0..4\n  probed: [2, 5]\nscaling:\n  n_list: 3\n");
    EXPECT_EQ(c.sequence.prepared, (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_EQ(c.sequence.probed, (std::vector<int>{2, 5}));
    EXPECT_EQ(c.scaling.n_list, (std::vector<int>{3}));
    EXPECT_NE(config_error("sequence:\n  prepared: a..b\n").find("range"), std::string::npos);
    EXPECT_NE(config_error("sequence:\n  prepared: [-1, 2]\n"), "");
}

TEST(Config, MissingFileIsConfigError) {
    EXPECT_THROW(flatten_file("/nonexistent/run.yaml"), ConfigError);
}

// ---------------------------------------------------------------------------
// Manifest

TEST(Manifest, EchoReloadsToSameConfig) {
    const RunConfig a = from_text(
        "preset: rsb\nseed: 77\nsystem:\n  eta: 0.07\n  omega_p: 612.5\n  kappa: 3\n  fock_dim: 24\n"
        "scan:\n  detuning_min: -40000\n  detuning_max: 40000\n  n_points: 81\n  probe_duration: 0.0005\n"
        "  initial:\n    kind: thermal\n    n_bar: 1.2\n  order: exact\n  model: lorentzian\n"
        "sequence:\n  variant: qnd\n  branch: minus\n  prepared: 0..3\n  probed: [1]\n  demolition: preserve\n"
        "thermal:\n  n_bar: 2.23\n  n_max: 9\nscaling:\n  n_list: [1, 2, 3]\noutput:\n  dir: x\n  format: json\n");
    const std::string text = dump(manifest("spectrum", a));
    const RunConfig b = build_run_config(flatten_yaml(text, "manifest.json"));
    const auto near = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)); };
    EXPECT_EQ(b.preset, a.preset);
    EXPECT_EQ(b.seed, a.seed);
    EXPECT_EQ(b.system.eta, a.system.eta);
    EXPECT_TRUE(near(b.system.omega_c, a.system.omega_c));
    EXPECT_TRUE(near(b.system.omega_p, a.system.omega_p));
    EXPECT_TRUE(near(b.system.nu, a.system.nu));
    EXPECT_TRUE(near(b.system.delta_c, a.system.delta_c));
    EXPECT_EQ(b.system.kappa, a.system.kappa);
    EXPECT_EQ(b.system.fock_dim, a.system.fock_dim);
    EXPECT_TRUE(near(*b.scan.detuning_min, *a.scan.detuning_min));
    EXPECT_EQ(b.scan.n_points, a.scan.n_points);
    EXPECT_EQ(b.scan.probe_duration, a.scan.probe_duration);
    EXPECT_EQ(b.scan.initial.kind, a.scan.initial.kind);
    EXPECT_EQ(b.scan.initial.n_bar, a.scan.initial.n_bar);
    EXPECT_EQ(b.scan.order, a.scan.order);
    EXPECT_EQ(b.scan.model, a.scan.model);
    EXPECT_EQ(b.regime(), a.regime());
    EXPECT_EQ(b.sequence.variant, a.sequence.variant);
    EXPECT_EQ(b.sequence.branch, a.sequence.branch);
    EXPECT_EQ(b.sequence.prepared, a.sequence.prepared);
    EXPECT_EQ(b.sequence.probed, a.sequence.probed);
    EXPECT_EQ(b.sequence.demolition, a.sequence.demolition);
    EXPECT_EQ(b.thermal.n_bar, a.thermal.n_bar);
    EXPECT_EQ(b.thermal.n_max, a.thermal.n_max);
    EXPECT_EQ(b.scaling.n_list, a.scaling.n_list);
    EXPECT_EQ(b.output.dir, a.output.dir);
    EXPECT_EQ(b.output.format, a.output.format);
}

TEST(Manifest, CarriesVersionAndCommand) {
    const json m = manifest("thermal", RunConfig{}, json{{"fock_dim_used", 30}});
    EXPECT_TRUE(m["atspec_manifest"].get<bool>());
    EXPECT_EQ(m["command"], "thermal");
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["notes"]["fock_dim_used"], 30);
}

TEST(Manifest, WithoutConfigSectionRejected) {
    EXPECT_THROW(flatten_yaml("{\"atspec_manifest\": true}", "m.json"), ConfigError);
}

// ---------------------------------------------------------------------------
// Tables

TEST(Output, ShortestRoundTripNumbers) {
    EXPECT_EQ(fmt(0.1), "0.1");
    EXPECT_EQ(fmt(-2.5e-7), "-2.5e-07");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(fmt(x)), x);
}

TEST(Output, SpectrumCsv) {
    Spectrum s{{-kTwoPi * 100.0, 0.0, kTwoPi * 100.0}, {0.1, 0.5, 0.2}, {1, 5, 2}, 10};
    const auto l = lines(spectrum_csv(s));
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0], "detuning_hz,p_excited,counts,shots");
    EXPECT_EQ(l[1], "-100,0.1,1,10");
    EXPECT_EQ(l[3], "100,0.2,2,10");
}

TEST(Output, SpectrumJsonHasIntervals) {
    Spectrum s{{0.0}, {0.5}, {5}, 10};
    const json j = spectrum_json(s);
    EXPECT_EQ(j["columns"].size(), 6u);
    const auto& row = j["rows"][0];
    const auto ci = wilson_interval(5, 10);
    EXPECT_EQ(row["ci68_low"].get<double>(), ci.lo);
    EXPECT_EQ(row["ci68_high"].get<double>(), ci.hi);
    EXPECT_LT(row["ci68_low"].get<double>(), 0.5);
    EXPECT_GT(row["ci68_high"].get<double>(), 0.5);
}

TEST(Output, ScalingCsvAndJson) {
    const std::vector<ScalingRow> rows{{0, kTwoPi * 20e3, kTwoPi * 50.0, ""}, {1, 0.0, 0.0, "no sideband coupling"}};
    const auto l = lines(scaling_csv(rows));
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "n,splitting_hz,sigma_hz");
    EXPECT_EQ(l[1], "0,20000,50");
    const json j = scaling_rows_json(rows);
    EXPECT_FALSE(j[0].contains("note"));
    EXPECT_EQ(j[1]["note"], "no sideband coupling");
}

TEST(Output, FitJsonInHz) {
    FitResult f;
    f.model = PeakModel::Gaussian;
    f.peaks.push_back({});
    f.peaks[0].center = kTwoPi * 10e3;
    f.peaks[0].width = kTwoPi * 1e3;
    f.splitting = kTwoPi * 20e3;
    const json j = fit_json(f);
    EXPECT_DOUBLE_EQ(j["peaks"][0]["center_hz"].get<double>(), 10e3);
    EXPECT_DOUBLE_EQ(j["peaks"][0]["fwhm_hz"].get<double>(), 1e3);
    EXPECT_DOUBLE_EQ(j["splitting_hz"].get<double>(), 20e3);
    EXPECT_EQ(j["n_peaks"], 1);
}

TEST(Output, WriteFileCreatesDirectories) {
    const auto dir = std::filesystem::temp_directory_path() / "atspec_io_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_file(dir / "a.txt", "hello\n");
    std::ifstream f(dir / "a.txt");
    std::string s;
    std::getline(f, s);
    EXPECT_EQ(s, "hello");
    std::filesystem::remove_all(dir.parent_path());
}
