// output.hpp: CSV/JSON writers and the run manifest

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "atspec/io/config.hpp"
#include "atspec/spectroscopy/fit.hpp"
#include "atspec/spectroscopy/scaling.hpp"
#include "atspec/spectroscopy/scan.hpp"
#include "atspec/spectroscopy/thermal.hpp"

namespace atspec::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

/// Shortest round-trip decimal form.
inline std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double to_hz(double omega) { return omega / kTwoPi; }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
    if (!f) throw Error("write failed for " + path.string());
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Config echo (input units: Hz, s, rad)

inline const char* enum_name(PeakModel m) { return peak_model_name(m); }
inline const char* enum_name(CouplingOrder o) { return o == CouplingOrder::FirstOrder ? "first_order" : "exact"; }
inline const char* enum_name(DetectVariant v) { return v == DetectVariant::Destructive ? "destructive" : "qnd"; }
inline const char* enum_name(Branch b) { return b == Branch::Plus ? "plus" : "minus"; }
inline const char* enum_name(Demolition d) { return d == Demolition::ScrambleMotion ? "scramble" : "preserve"; }
inline const char* enum_name(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

inline json config_echo(const RunConfig& c) {
    const auto& s = c.system;
    json sys{{"eta", s.eta},
             {"omega_c", to_hz(s.omega_c)},
             {"omega_p", to_hz(s.omega_p)},
             {"nu", to_hz(s.nu)},
             {"delta_c", to_hz(s.delta_c)},
             {"delta_p", to_hz(s.delta_p)},
             {"gamma_sd", s.gamma_sd},
             {"kappa", s.kappa},
             {"n_th_env", s.n_th_env},
             {"phi_p", s.phi_p},
             {"phi_c", s.phi_c},
             {"fock_dim", s.fock_dim}};
    if (s.probe_eta) sys["probe_eta"] = *s.probe_eta;

    json scan{{"n_points", c.scan.n_points},
              {"shots_per_point", c.scan.shots_per_point},
              {"regime", regime_name(c.regime())},
              {"order", enum_name(c.scan.order)},
              {"model", enum_name(c.scan.model)}};
    if (c.scan.detuning_min) {
        scan["detuning_min"] = to_hz(*c.scan.detuning_min);
        scan["detuning_max"] = to_hz(*c.scan.detuning_max);
    }
    if (c.scan.probe_duration) scan["probe_duration"] = *c.scan.probe_duration;
    if (c.scan.initial.kind == MotionalInit::Kind::Fock)
        scan["initial"] = json{{"kind", "fock"}, {"n", c.scan.initial.n}};
    else
        scan["initial"] = json{{"kind", "thermal"}, {"n_bar", c.scan.initial.n_bar}};

    const auto& q = c.sequence;
    json seq{{"variant", enum_name(q.variant)}, {"branch", enum_name(q.branch)}, {"prepared", q.prepared},
             {"probed", q.probed},              {"shots", q.shots},               {"eps_bright", q.eps_bright},
             {"eps_dark", q.eps_dark},          {"demolition", enum_name(q.demolition)},
             {"n_bar_reset", q.n_bar_reset}};

    return json{{"preset", c.preset},
                {"seed", c.seed},
                {"system", sys},
                {"scan", scan},
                {"sequence", seq},
                {"thermal", {{"n_bar", c.thermal.n_bar}, {"n_max", c.thermal.n_max}, {"n_points", c.thermal.n_points}}},
                {"scaling", {{"n_list", c.scaling.n_list}}},
                {"output", {{"dir", c.output.dir}, {"format", enum_name(c.output.format)}}}};
}

/// Everything needed to rerun: feeding the manifest back as --config
/// reproduces the outputs.
inline json manifest(const std::string& command, const RunConfig& c, const json& notes = json::object()) {
    json m{{"atspec_manifest", true}, {"version", kVersion}, {"command", command}, {"seed", c.seed},
           {"config", config_echo(c)}};
    if (!notes.empty()) m["notes"] = notes;
    return m;
}

// ---------------------------------------------------------------------------
// Spectrum

inline std::string spectrum_csv(const Spectrum& s) {
    std::ostringstream o;
    o << "detuning_hz,p_excited,counts,shots\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        o << fmt(to_hz(s.detunings[i])) << ',' << fmt(s.p_excited[i]) << ',' << s.counts[i] << ',' << s.shots << '\n';
    return o.str();
}

inline json spectrum_json(const Spectrum& s) {
    json rows = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto ci = wilson_interval(s.counts[i], s.shots);
        rows.push_back({{"detuning_hz", to_hz(s.detunings[i])},
                        {"p_excited", s.p_excited[i]},
                        {"counts", s.counts[i]},
                        {"shots", s.shots},
                        {"ci68_low", ci.lo},
                        {"ci68_high", ci.hi}});
    }
    return json{{"columns", {"detuning_hz", "p_excited", "counts", "shots", "ci68_low", "ci68_high"}}, {"rows", rows}};
}

inline json fit_json(const FitResult& f) {
    json peaks = json::array();
    for (const auto& p : f.peaks)
        peaks.push_back({{"center_hz", to_hz(p.center)},
                         {"center_sigma_hz", to_hz(p.center_sigma)},
                         {"amplitude", p.amplitude},
                         {"amplitude_sigma", p.amplitude_sigma},
                         {"fwhm_hz", to_hz(p.width)},
                         {"fwhm_sigma_hz", to_hz(p.width_sigma)}});
    return json{{"model", peak_model_name(f.model)},
                {"n_peaks", f.peaks.size()},
                {"peaks", peaks},
                {"splitting_hz", to_hz(f.splitting)},
                {"splitting_sigma_hz", to_hz(f.splitting_sigma)},
                {"background", f.background},
                {"residual_norm", f.residual_norm}};
}

// ---------------------------------------------------------------------------
// Scaling

struct ScalingRow {
    int n = 0;
    double splitting = 0.0;   // rad/s
    double sigma = 0.0;
    std::string note;
};

inline std::string scaling_csv(const std::vector<ScalingRow>& rows) {
    std::ostringstream o;
    o << "n,splitting_hz,sigma_hz\n";
    for (const auto& r : rows) o << r.n << ',' << fmt(to_hz(r.splitting)) << ',' << fmt(to_hz(r.sigma)) << '\n';
    return o.str();
}

inline json scaling_rows_json(const std::vector<ScalingRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        json e{{"n", r.n}, {"splitting_hz", to_hz(r.splitting)}, {"sigma_hz", to_hz(r.sigma)}};
        if (!r.note.empty()) e["note"] = r.note;
        a.push_back(e);
    }
    return a;
}

inline json scaling_fit_json(const ScalingFit& f, SidebandRegime regime, double calibrated_gap) {
    json res = json::object();
    for (const auto& [n, r] : f.residuals) res[std::to_string(n)] = to_hz(r);
    return json{{"regime", regime_name(regime)},
                {"offset", f.offset},
                {"amplitude_hz", to_hz(f.amplitude)},
                {"amplitude_sigma_hz", to_hz(f.amplitude_sigma)},
                {"calibrated_gap_hz", to_hz(calibrated_gap)},
                {"exponent", f.exponent},
                {"exponent_sigma", f.exponent_sigma},
                {"max_relative_residual", f.max_relative_residual},
                {"residuals_hz", res}};
}

// ---------------------------------------------------------------------------
// Thermal

inline json thermal_json(const ThermalResult& r, double n_bar_input, int fock_dim) {
    json pops = json::array();
    for (std::size_t n = 0; n < r.populations.size(); ++n)
        pops.push_back({{"n", n},
                        {"population", r.populations[n]},
                        {"sigma", r.population_sigma[n]},
                        {"center_hz", to_hz(r.centers[n])},
                        {"raw_amplitude", r.raw_amplitudes[n]},
                        {"probe_correction", r.probe_correction[n]}});
    return json{{"n_bar_input", n_bar_input},
                {"n_bar_fit", r.n_bar},
                {"n_bar_sigma", r.n_bar_sigma},
                {"fock_dim", fock_dim},
                {"fwhm_hz", to_hz(r.width)},
                {"background", r.background},
                {"residual_norm", r.residual_norm},
                {"populations", pops}};
}

}  // namespace atspec::io
