// config.hpp: YAML run configuration with dotted-key overrides
//
// Frequencies are read in Hz and stored in rad/s. Rates (gamma_sd, kappa) are
// in 1/s, times in s, phases in rad.

#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "atspec/errors.hpp"
#include "atspec/model/config.hpp"
#include "atspec/sequence/protocol.hpp"
#include "atspec/spectroscopy/fit.hpp"

namespace atspec::io {

struct ScanSection {
    std::optional<double> detuning_min;   // rad/s
    std::optional<double> detuning_max;
    int n_points = 161;
    std::optional<double> probe_duration;
    int shots_per_point = 100;
    std::optional<SidebandRegime> regime;   // default: nearest to system.delta_c
    MotionalInit initial = MotionalInit::fock(0);
    CouplingOrder order = CouplingOrder::FirstOrder;
    PeakModel model = PeakModel::Gaussian;
};

struct SequenceSection {
    DetectVariant variant = DetectVariant::Destructive;
    Branch branch = Branch::Plus;
    std::vector<int> prepared{0, 1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> probed{0, 1, 2, 3, 4, 5, 6, 7, 8};
    int shots = 100;
    double eps_bright = 0.0;
    double eps_dark = 0.0;
    Demolition demolition = Demolition::ScrambleMotion;
    double n_bar_reset = 0.5;
};

struct ThermalSection {
    double n_bar = 0.81;
    int n_max = 7;
    int n_points = 401;
};

struct ScalingSection {
    std::vector<int> n_list{0, 1, 2, 3, 4, 5};
};

enum class OutputFormat { Csv, Json };

struct OutputSection {
    std::string dir = "out";
    OutputFormat format = OutputFormat::Csv;
};

struct RunConfig {
    std::string preset = "bsb";
    SystemConfig system = preset_bsb();
    ScanSection scan;
    SequenceSection sequence;
    ThermalSection thermal;
    ScalingSection scaling;
    OutputSection output;
    std::uint64_t seed = 1;

    SidebandRegime regime() const { return scan.regime.value_or(nearest_regime(system)); }
};

inline SystemConfig preset_by_name(const std::string& name) {
    if (name == "bsb") return preset_bsb();
    if (name == "rsb") return preset_rsb();
    throw ConfigError("unknown preset '" + name + "' (expected bsb or rsb)");
}

// ---------------------------------------------------------------------------
// Flattening

struct Entry {
    YAML::Node value;
    std::string where;   // "file:line:col" or "--set"
};

using FlatConfig = std::map<std::string, Entry>;

namespace detail {

inline std::string location(const std::string& source, const YAML::Mark& m) {
    if (m.is_null()) return source;
    return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

inline void flatten(const YAML::Node& node, const std::string& prefix, const std::string& source, FlatConfig& out) {
    if (node.IsMap()) {
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            if (key.empty() || key.find('.') != std::string::npos)
                throw ConfigError(location(source, kv.first.Mark()) + ": invalid key '" + key + "'");
            const std::string full = prefix.empty() ? key : prefix + "." + key;
            if (out.count(full)) throw ConfigError(location(source, kv.first.Mark()) + ": duplicate key '" + full + "'");
            flatten(kv.second, full, source, out);
        }
        return;
    }
    if (prefix.empty()) throw ConfigError(source + ": top level must be a mapping");
    out[prefix] = {node, location(source, node.Mark())};
}

inline YAML::Node parse_yaml(const std::string& text, const std::string& source) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(location(source, e.mark) + ": " + e.msg);
    }
}

}  // namespace detail

/// Parse YAML text into dotted keys. A run manifest is accepted too; its
/// `config` section is used.
inline FlatConfig flatten_yaml(const std::string& text, const std::string& source) {
    YAML::Node root = detail::parse_yaml(text, source);
    FlatConfig flat;
    if (!root || root.IsNull()) return flat;
    if (!root.IsMap()) throw ConfigError(detail::location(source, root.Mark()) + ": top level must be a mapping");
    if (root["atspec_manifest"]) {
        if (!root["config"]) throw ConfigError(source + ": manifest has no config section");
        root = root["config"];
    }
    detail::flatten(root, "", source, flat);
    return flat;
}

inline FlatConfig flatten_file(const std::string& path) {
    std::string text;
    {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw ConfigError(path + ": cannot open config file");
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
        std::fclose(f);
    }
    return flatten_yaml(text, path);
}

/// Apply `key=value` (value parsed as a YAML scalar or flow sequence).
inline void apply_override(FlatConfig& flat, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + assignment + ": expected KEY=VALUE");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    YAML::Node node = detail::parse_yaml(value.empty() ? "~" : value, "--set " + key);
    if (node.IsMap()) throw ConfigError("--set " + key + ": value must be a scalar or a list");
    // replacing a sub-tree (e.g. scan.initial) drops its old leaves
    for (auto it = flat.lower_bound(key + "."); it != flat.end() && it->first.rfind(key + ".", 0) == 0;)
        it = flat.erase(it);
    flat[key] = {node, "--set " + key};
}

// ---------------------------------------------------------------------------
// Typed reading

namespace detail {

class Reader {
public:
    explicit Reader(FlatConfig flat) : flat_(std::move(flat)) {}

    bool has(const std::string& key) const { return flat_.count(key) > 0; }

    template <class T>
    std::optional<T> get(const std::string& key) {
        const auto it = flat_.find(key);
        if (it == flat_.end()) return std::nullopt;
        used_.insert(key);
        const auto& e = it->second;
        if (!e.value.IsScalar()) throw ConfigError(e.where + ": '" + key + "' must be a scalar");
        try {
            return e.value.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(e.where + ": '" + key + "' has invalid value '" + e.value.Scalar() + "'");
        }
    }

    std::optional<std::vector<int>> get_int_list(const std::string& key) {
        const auto it = flat_.find(key);
        if (it == flat_.end()) return std::nullopt;
        used_.insert(key);
        const auto& e = it->second;
        std::vector<int> out;
        try {
            if (e.value.IsSequence()) {
                for (const auto& v : e.value) out.push_back(v.as<int>());
            } else if (e.value.IsScalar()) {
                out = parse_range(e.value.Scalar());
            } else if (!e.value.IsNull()) {
                throw ConfigError("");
            }
        } catch (const std::exception&) {
            throw ConfigError(e.where + ": '" + key + "' must be a list of integers or a range like 0..8");
        }
        return out;
    }

    std::string where(const std::string& key) const {
        const auto it = flat_.find(key);
        return it == flat_.end() ? std::string("config") : it->second.where;
    }

    void reject_unused() const {
        for (const auto& [k, e] : flat_)
            if (!used_.count(k)) throw ConfigError(e.where + ": unknown key '" + k + "'");
    }

    static std::vector<int> parse_range(const std::string& s) {
        const auto dots = s.find("..");
        if (dots == std::string::npos) return {std::stoi(s)};
        const int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
        std::vector<int> out;
        for (int i = a; i <= b; ++i) out.push_back(i);
        return out;
    }

private:
    FlatConfig flat_;
    std::set<std::string> used_;
};

template <class E>
E parse_enum(Reader& r, const std::string& key, const std::map<std::string, E>& names, E fallback) {
    const auto s = r.get<std::string>(key);
    if (!s) return fallback;
    const auto it = names.find(*s);
    if (it == names.end()) {
        std::string opts;
        for (const auto& [n, v] : names) opts += (opts.empty() ? "" : ", ") + n;
        throw ConfigError(r.where(key) + ": '" + key + "' must be one of " + opts);
    }
    return it->second;
}

inline const std::map<std::string, SidebandRegime>& regime_names() {
    static const std::map<std::string, SidebandRegime> m{
        {"carrier", SidebandRegime::Carrier}, {"rsb", SidebandRegime::RSB}, {"bsb", SidebandRegime::BSB}};
    return m;
}

}  // namespace detail

inline SidebandRegime parse_regime(const std::string& s) {
    const auto& m = detail::regime_names();
    const auto it = m.find(s);
    if (it == m.end()) throw ConfigError("regime must be carrier, rsb or bsb, got '" + s + "'");
    return it->second;
}

inline RunConfig build_run_config(FlatConfig flat) {
    detail::Reader r(std::move(flat));
    RunConfig c;
    constexpr double hz = kTwoPi;

    if (auto p = r.get<std::string>("preset")) c.preset = *p;
    try {
        c.system = preset_by_name(c.preset);
    } catch (const ConfigError& e) {
        throw ConfigError(r.where("preset") + ": " + e.what());
    }
    if (auto v = r.get<std::uint64_t>("seed")) c.seed = *v;

    auto& s = c.system;
    if (auto v = r.get<double>("system.eta")) s.eta = *v;
    if (auto v = r.get<double>("system.probe_eta")) s.probe_eta = *v;
    const auto omega0 = r.get<double>("system.omega0");
    const auto omega_c = r.get<double>("system.omega_c");
    if (omega0 && omega_c) throw ConfigError(r.where("system.omega0") + ": give either omega0 or omega_c, not both");
    if (omega_c) s.omega_c = *omega_c * hz;
    if (omega0) {
        if (!(s.eta > 0.0)) throw ConfigError(r.where("system.omega0") + ": omega0 needs eta > 0");
        s.omega_c = *omega0 * hz / s.eta;
    } else if (!omega_c && r.has("system.eta")) {
        // keep the preset's ground-state sideband rate when only eta changes
        s.omega_c = preset_by_name(c.preset).omega_c * preset_by_name(c.preset).eta / s.eta;
    }
    if (auto v = r.get<double>("system.omega_p")) s.omega_p = *v * hz;
    if (auto v = r.get<double>("system.nu")) {
        const SidebandRegime was = nearest_regime(s);
        s.nu = *v * hz;
        s.delta_c = resonance_detuning(was, s.nu);
    }
    if (auto v = r.get<double>("system.delta_c")) s.delta_c = *v * hz;
    if (auto v = r.get<double>("system.delta_p")) s.delta_p = *v * hz;
    if (auto v = r.get<double>("system.gamma_sd")) s.gamma_sd = *v;
    if (auto v = r.get<double>("system.kappa")) s.kappa = *v;
    if (auto v = r.get<double>("system.n_th_env")) s.n_th_env = *v;
    if (auto v = r.get<double>("system.phi_p")) s.phi_p = *v;
    if (auto v = r.get<double>("system.phi_c")) s.phi_c = *v;
    if (auto v = r.get<int>("system.fock_dim")) s.fock_dim = *v;

    auto& sc = c.scan;
    if (auto v = r.get<double>("scan.detuning_min")) sc.detuning_min = *v * hz;
    if (auto v = r.get<double>("scan.detuning_max")) sc.detuning_max = *v * hz;
    if (auto v = r.get<int>("scan.n_points")) sc.n_points = *v;
    if (auto v = r.get<double>("scan.probe_duration")) sc.probe_duration = *v;
    if (auto v = r.get<int>("scan.shots_per_point")) sc.shots_per_point = *v;
    if (r.has("scan.regime")) sc.regime = detail::parse_enum(r, "scan.regime", detail::regime_names(), SidebandRegime::BSB);
    const auto kind = detail::parse_enum<MotionalInit::Kind>(
        r, "scan.initial.kind", {{"fock", MotionalInit::Kind::Fock}, {"thermal", MotionalInit::Kind::Thermal}},
        MotionalInit::Kind::Fock);
    sc.initial.kind = kind;
    if (auto v = r.get<int>("scan.initial.n")) sc.initial.n = *v;
    if (auto v = r.get<double>("scan.initial.n_bar")) sc.initial.n_bar = *v;
    sc.order = detail::parse_enum(r, "scan.order",
                                  std::map<std::string, CouplingOrder>{{"first_order", CouplingOrder::FirstOrder},
                                                                       {"exact", CouplingOrder::Exact}},
                                  CouplingOrder::FirstOrder);
    sc.model = detail::parse_enum(
        r, "scan.model",
        std::map<std::string, PeakModel>{{"gaussian", PeakModel::Gaussian}, {"lorentzian", PeakModel::Lorentzian}},
        PeakModel::Gaussian);

    auto& q = c.sequence;
    q.variant = detail::parse_enum(
        r, "sequence.variant",
        std::map<std::string, DetectVariant>{{"destructive", DetectVariant::Destructive}, {"qnd", DetectVariant::QND}},
        DetectVariant::Destructive);
    q.branch = detail::parse_enum(r, "sequence.branch",
                                  std::map<std::string, Branch>{{"plus", Branch::Plus}, {"minus", Branch::Minus}},
                                  Branch::Plus);
    if (auto v = r.get_int_list("sequence.prepared")) q.prepared = *v;
    if (auto v = r.get_int_list("sequence.probed")) q.probed = *v;
    if (auto v = r.get<int>("sequence.shots")) q.shots = *v;
    if (auto v = r.get<double>("sequence.eps_bright")) q.eps_bright = *v;
    if (auto v = r.get<double>("sequence.eps_dark")) q.eps_dark = *v;
    q.demolition = detail::parse_enum(r, "sequence.demolition",
                                      std::map<std::string, Demolition>{{"scramble", Demolition::ScrambleMotion},
                                                                        {"preserve", Demolition::Preserve}},
                                      Demolition::ScrambleMotion);
    if (auto v = r.get<double>("sequence.n_bar_reset")) q.n_bar_reset = *v;

    if (auto v = r.get<double>("thermal.n_bar")) c.thermal.n_bar = *v;
    if (auto v = r.get<int>("thermal.n_max")) c.thermal.n_max = *v;
    if (auto v = r.get<int>("thermal.n_points")) c.thermal.n_points = *v;

    if (auto v = r.get_int_list("scaling.n_list")) c.scaling.n_list = *v;

    if (auto v = r.get<std::string>("output.dir")) c.output.dir = *v;
    c.output.format = detail::parse_enum(
        r, "output.format", std::map<std::string, OutputFormat>{{"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}},
        OutputFormat::Csv);

    r.reject_unused();

    try {
        c.system.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    if (sc.n_points < 3) throw ConfigError(r.where("scan.n_points") + ": scan.n_points must be >= 3");
    if (sc.shots_per_point < 1) throw ConfigError(r.where("scan.shots_per_point") + ": scan.shots_per_point must be >= 1");
    if (sc.detuning_min.has_value() != sc.detuning_max.has_value())
        throw ConfigError("scan: detuning_min and detuning_max must be given together");
    if (sc.detuning_min && !(*sc.detuning_max > *sc.detuning_min))
        throw ConfigError(r.where("scan.detuning_max") + ": scan.detuning_max must exceed scan.detuning_min");
    if (sc.probe_duration && !(*sc.probe_duration > 0.0))
        throw ConfigError(r.where("scan.probe_duration") + ": scan.probe_duration must be > 0");
    if (sc.initial.n < 0 || sc.initial.n_bar < 0.0) throw ConfigError("scan.initial: n and n_bar must be >= 0");
    if (q.shots < 1) throw ConfigError(r.where("sequence.shots") + ": sequence.shots must be >= 1");
    if (q.prepared.empty()) throw ConfigError(r.where("sequence.prepared") + ": sequence.prepared is empty");
    if (q.probed.empty()) throw ConfigError(r.where("sequence.probed") + ": sequence.probed is empty");
    for (int n : q.prepared)
        if (n < 0) throw ConfigError(r.where("sequence.prepared") + ": Fock indices must be >= 0");
    for (int n : q.probed)
        if (n < 0) throw ConfigError(r.where("sequence.probed") + ": Fock indices must be >= 0");
    try {
        DetectionModel{q.eps_bright, q.eps_dark, q.demolition, q.n_bar_reset}.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("sequence: ") + e.what());
    }
    if (c.thermal.n_bar < 0.0) throw ConfigError(r.where("thermal.n_bar") + ": thermal.n_bar must be >= 0");
    if (c.thermal.n_max < 1) throw ConfigError(r.where("thermal.n_max") + ": thermal.n_max must be >= 1");
    if (c.thermal.n_points < 3) throw ConfigError(r.where("thermal.n_points") + ": thermal.n_points must be >= 3");
    if (c.scaling.n_list.empty()) throw ConfigError(r.where("scaling.n_list") + ": scaling.n_list is empty");
    for (int n : c.scaling.n_list)
        if (n < 0) throw ConfigError(r.where("scaling.n_list") + ": phonon numbers must be >= 0");
    return c;
}

/// Config file (optional) plus overrides, in order.
inline RunConfig load_run_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    FlatConfig flat = path ? flatten_file(*path) : FlatConfig{};
    for (const auto& o : overrides) apply_override(flat, o);
    return build_run_config(std::move(flat));
}

}  // namespace atspec::io
