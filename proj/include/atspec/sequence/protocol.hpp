// protocol.hpp: pulse sequences, fluorescence detection and Fock-state protocols
//
// Detection is a two-outcome instrument on the S manifold (|S⟩⟨S| + |S'⟩⟨S'|)⊗I.
// A physically bright ion scatters photons; under ScrambleMotion its motional
// state is replaced by a thermal state. Classical read-out flips are applied on
// top of the projective outcome.

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "atspec/core/algebra.hpp"
#include "atspec/core/random.hpp"
#include "atspec/dynamics/evolve.hpp"
#include "atspec/dynamics/pulses.hpp"
#include "atspec/model/dressed.hpp"
#include "atspec/model/hamiltonian.hpp"

namespace atspec {

enum class Outcome { Bright, Dark };

inline const char* outcome_name(Outcome o) { return o == Outcome::Bright ? "bright" : "dark"; }

enum class Demolition { ScrambleMotion, Preserve };

struct DetectionModel {
    double eps_bright = 0.0;   // P(read bright | dark ion)
    double eps_dark = 0.0;     // P(read dark | bright ion)
    Demolition demolition = Demolition::ScrambleMotion;
    double n_bar_reset = 0.5;  // motional state after scattering, under ScrambleMotion

    void validate() const {
        if (eps_bright < 0.0 || eps_bright >= 1.0 || eps_dark < 0.0 || eps_dark >= 1.0)
            throw InvalidArgument("detection error probabilities must lie in [0,1)");
        if (n_bar_reset < 0.0) throw InvalidArgument("n_bar_reset must be >= 0");
    }
};

struct FluorescenceBranches {
    double p_bright = 0.0;
    std::optional<DensityMatrix> bright;   // normalised post-state, absent if p_bright == 0
    std::optional<DensityMatrix> dark;
};

inline Operator s_manifold_projector(const HilbertSpec& spec) {
    return lift_internal(projector(Level::S) + projector(Level::SPrime), spec);
}

inline FluorescenceBranches fluorescence_instrument(const DensityMatrix& rho, const HilbertSpec& spec,
                                                    const DetectionModel& model) {
    model.validate();
    const Operator ps = s_manifold_projector(spec);
    const Operator pd = Operator::Identity(spec.dim(), spec.dim()) - ps;
    Operator rho_s = ps * rho.matrix() * ps;
    const Operator rho_d = pd * rho.matrix() * pd;
    const double w_s = rho_s.trace().real();

    if (model.demolition == Demolition::ScrambleMotion && w_s > 0.0) {
        const int nf = spec.fock_dim;
        Operator internal = Operator::Zero(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) internal(i, j) = rho_s.block(i * nf, j * nf, nf, nf).trace();
        rho_s = tensor(internal, thermal_density(model.n_bar_reset, nf).matrix());
    }

    const Operator bright = (1.0 - model.eps_dark) * rho_s + model.eps_bright * rho_d;
    const Operator dark = model.eps_dark * rho_s + (1.0 - model.eps_bright) * rho_d;

    FluorescenceBranches out;
    const double pb = bright.trace().real();
    const double pk = dark.trace().real();
    out.p_bright = std::clamp(pb / (pb + pk), 0.0, 1.0);
    if (pb > 1e-300) out.bright = DensityMatrix::normalized(bright);
    if (pk > 1e-300) out.dark = DensityMatrix::normalized(dark);
    return out;
}

// ---------------------------------------------------------------------------
// Declarative sequences

struct MotionalInit {
    enum class Kind { Fock, Thermal };
    Kind kind = Kind::Fock;
    int n = 0;
    double n_bar = 0.0;

    static MotionalInit fock(int n) { return {Kind::Fock, n, 0.0}; }
    static MotionalInit thermal(double n_bar) { return {Kind::Thermal, 0, n_bar}; }

    DensityMatrix density(int fock_dim) const {
        return kind == Kind::Fock ? fock_density(n, fock_dim) : thermal_density(n_bar, fock_dim);
    }
};

enum class TransferVariant { ToSPrime, CarrierDS };

struct InitializeOp {
    Level level = Level::S;
    MotionalInit motion;
};
struct PiPulseOp {
    PulseTransition transition;
    int calibrated_n = 0;
    double area = std::numbers::pi;
    double phase = 0.0;
};
/// Weak probe on |D⟩ ↔ |S⟩ at the given detuning, optionally with the coupling
/// field switched on and resonant with `coupling`.
struct ProbePulseOp {
    double duration = kProbeTime;
    double detuning = 0.0;
    std::optional<SidebandRegime> coupling = SidebandRegime::BSB;
};
struct DetectOp {};
struct TransferStepOp {
    TransferVariant variant = TransferVariant::ToSPrime;
};
/// Stop the sequence if the latest detection produced `abort_on`.
struct BranchOnOutcomeOp {
    Outcome abort_on = Outcome::Bright;
};

using PulseOp = std::variant<InitializeOp, PiPulseOp, ProbePulseOp, DetectOp, TransferStepOp, BranchOnOutcomeOp>;
using PulseSequence = std::vector<PulseOp>;

inline void validate_op(const PulseOp& op) {
    if (const auto* p = std::get_if<ProbePulseOp>(&op); p && !(p->duration > 0.0))
        throw InvalidArgument("ProbePulse duration must be > 0");
    if (const auto* p = std::get_if<PiPulseOp>(&op)) p->transition.validate();
}

struct MeasurementRecord {
    std::vector<Outcome> outcomes;
    std::vector<double> p_bright;   // bright probability at each detection, given the history
    DensityMatrix post_state;
    std::uint64_t shot_seed = 0;
    double probability = 1.0;       // probability of this outcome history
    bool aborted = false;
};

/// Executes pulse sequences for one configuration. Probe propagators are cached
/// per (detuning, regime), so one runner should be reused across shots.
class ProtocolRunner {
public:
    ProtocolRunner(SystemConfig cfg, DetectionModel detection, CouplingOrder order = CouplingOrder::FirstOrder,
                   IntegratorSettings settings = {})
        : cfg_(std::move(cfg)), detection_(detection), order_(order), settings_(settings), spec_(cfg_.fock_dim) {
        cfg_.validate();
        detection_.validate();
        collapses_ = collapse_matrices(collapse_operators(cfg_));
    }

    const SystemConfig& config() const { return cfg_; }
    const DetectionModel& detection() const { return detection_; }
    const HilbertSpec& spec() const { return spec_; }
    CouplingOrder order() const { return order_; }

    /// Run `seq` from `state`. With `forced` the detections take the given
    /// outcomes in order instead of sampling, and the record carries their joint
    /// probability.
    MeasurementRecord run(const PulseSequence& seq, DensityMatrix state, std::uint64_t seed,
                          const std::vector<Outcome>* forced = nullptr) const {
        Rng rng(derive_seed(seed, 0));
        MeasurementRecord rec;
        rec.shot_seed = seed;
        std::size_t forced_idx = 0;
        for (const auto& op : seq) {
            validate_op(op);
            if (const auto* init = std::get_if<InitializeOp>(&op)) {
                state = embed(init->level, init->motion.density(spec_.fock_dim), spec_);
            } else if (const auto* pulse = std::get_if<PiPulseOp>(&op)) {
                state = apply_op_pulse(state, *pulse);
            } else if (const auto* probe = std::get_if<ProbePulseOp>(&op)) {
                state = apply_probe(state, *probe);
            } else if (const auto* tr = std::get_if<TransferStepOp>(&op)) {
                state = apply_transfer(state, tr->variant);
            } else if (std::holds_alternative<DetectOp>(op)) {
                const auto br = fluorescence_instrument(state, spec_, detection_);
                Outcome o;
                if (forced) {
                    if (forced_idx >= forced->size()) throw InvalidArgument("run: not enough forced outcomes");
                    o = (*forced)[forced_idx++];
                } else {
                    o = uniform01(rng) < br.p_bright ? Outcome::Bright : Outcome::Dark;
                }
                const double p = o == Outcome::Bright ? br.p_bright : 1.0 - br.p_bright;
                const auto& post = o == Outcome::Bright ? br.bright : br.dark;
                rec.outcomes.push_back(o);
                rec.p_bright.push_back(br.p_bright);
                rec.probability *= p;
                if (!post) {
                    // impossible outcome; only reachable when forced
                    rec.probability = 0.0;
                    rec.post_state = state;
                    rec.aborted = true;
                    return rec;
                }
                state = *post;
            } else if (const auto* br = std::get_if<BranchOnOutcomeOp>(&op)) {
                if (!rec.outcomes.empty() && rec.outcomes.back() == br->abort_on) {
                    rec.aborted = true;
                    break;
                }
            }
            check_truncation(state, spec_, "sequence");
        }
        rec.post_state = std::move(state);
        return rec;
    }

    /// State just before the final detection of `seq` (no detections allowed in `seq`).
    DensityMatrix evolve_deterministic(const PulseSequence& seq, DensityMatrix state) const {
        for (const auto& op : seq)
            if (std::holds_alternative<DetectOp>(op) || std::holds_alternative<BranchOnOutcomeOp>(op))
                throw InvalidArgument("evolve_deterministic: sequence contains detections");
        return run(seq, std::move(state), 0).post_state;
    }

    /// Probe detuning that addresses Fock level n on the chosen doublet branch.
    double branch_detuning(SidebandRegime regime, int n, bool plus) const {
        const double g = sideband_rate(cfg_, regime, n, order_);
        return plus ? g : -g;
    }

private:
    DensityMatrix apply_op_pulse(const DensityMatrix& state, const PiPulseOp& op) const {
        PulseOptions po;
        po.area = op.area;
        po.phase = op.phase;
        po.order = order_;
        return apply_pulse(state, op.transition, cfg_, op.calibrated_n, po);
    }

    DensityMatrix apply_transfer(const DensityMatrix& state, TransferVariant v) const {
        const auto tr = v == TransferVariant::ToSPrime ? PulseTransition::carrier_sprime_dprime()
                                                       : PulseTransition::carrier_sd();
        PulseOptions po;
        po.order = CouplingOrder::FirstOrder;
        return apply_pulse(state, tr, cfg_, 0, po);
    }

    DensityMatrix apply_probe(const DensityMatrix& state, const ProbePulseOp& op) const {
        SystemConfig c = op.coupling ? with_regime(cfg_, *op.coupling) : cfg_;
        if (!op.coupling) c.omega_c = 0.0;
        c.delta_p = op.detuning;
        const SidebandRegime regime = op.coupling ? *op.coupling : SidebandRegime::Carrier;
        if (!collapses_.empty()) return propagate(state, build_rwa_hamiltonian(c, regime, order_), collapses_,
                                                  op.duration, settings_);
        const auto key = std::make_tuple(op.detuning, op.coupling ? static_cast<int>(*op.coupling) : -1);
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, UnitaryPropagator(build_rwa_hamiltonian(c, regime, order_))).first;
        return it->second.apply(state, op.duration);
    }

    SystemConfig cfg_;
    DetectionModel detection_;
    CouplingOrder order_;
    IntegratorSettings settings_;
    HilbertSpec spec_;
    std::vector<Operator> collapses_;
    mutable std::map<std::tuple<double, int>, UnitaryPropagator> cache_;
};

// ---------------------------------------------------------------------------
// Fock-state preparation

struct PrepareOptions {
    bool herald = false;
    bool calibrate_each_rung = true;   // false: every BSB π time uses the n=0 rate
};

struct PrepareResult {
    MeasurementRecord record;
    bool success = true;
};

/// |S,0⟩ → |S,n⟩ by alternating BSB π (|S,k⟩→|D,k+1⟩) and carrier π pulses,
/// optionally detecting after each BSB pulse and aborting on fluorescence.
inline PulseSequence fock_preparation_sequence(int n, const PrepareOptions& opt) {
    PulseSequence seq{InitializeOp{Level::S, MotionalInit::fock(0)}};
    for (int k = 0; k < n; ++k) {
        seq.push_back(PiPulseOp{PulseTransition::bsb_sd(), opt.calibrate_each_rung ? k : 0});
        if (opt.herald) {
            seq.push_back(DetectOp{});
            seq.push_back(BranchOnOutcomeOp{Outcome::Bright});
        }
        seq.push_back(PiPulseOp{PulseTransition::carrier_sd(), k + 1});
    }
    return seq;
}

inline PrepareResult prepare_fock(int n, const SystemConfig& cfg, const PrepareOptions& opt,
                                  const DetectionModel& detection, std::uint64_t seed,
                                  CouplingOrder order = CouplingOrder::FirstOrder) {
    if (n < 0) throw InvalidArgument("prepare_fock: n must be >= 0");
    if (n + 2 >= cfg.fock_dim) throw InvalidArgument("prepare_fock: n+2 must be < fock_dim");
    const ProtocolRunner runner(cfg, detection, order);
    PrepareResult res;
    res.record = runner.run(fock_preparation_sequence(n, opt), embed(Level::S, fock_density(0, cfg.fock_dim),
                                                                      HilbertSpec(cfg.fock_dim)),
                            seed);
    res.success = !res.record.aborted;
    return res;
}

// ---------------------------------------------------------------------------
// Autler-Townes Fock detection

enum class DetectVariant { Destructive, QND };
enum class Branch { Plus, Minus };

struct DetectOptions {
    Branch branch = Branch::Plus;
    DetectVariant variant = DetectVariant::Destructive;
    SidebandRegime regime = SidebandRegime::BSB;
    std::optional<double> probe_duration;   // default: dressed π time π/(√2 Ω_P)
    bool prepend_carrier_pi = false;        // start from |S,n⟩ and shelve to |D,n⟩ first
};

inline PulseSequence detection_sequence(const ProtocolRunner& runner, int probe_n, const DetectOptions& opt) {
    const auto& cfg = runner.config();
    const int k = probe_n + sideband_shift(opt.regime);
    if (probe_n < 0 || k < 0 || probe_n + 1 >= cfg.fock_dim)
        throw InvalidArgument("detect_fock: probed Fock level " + std::to_string(probe_n) + " outside truncation");
    PulseSequence seq;
    if (opt.prepend_carrier_pi) seq.push_back(PiPulseOp{PulseTransition::carrier_sd(), probe_n});
    ProbePulseOp probe;
    probe.duration = opt.probe_duration.value_or(probe_pi_time(cfg));
    probe.detuning = runner.branch_detuning(opt.regime, probe_n, opt.branch == Branch::Plus);
    probe.coupling = opt.regime;
    seq.push_back(probe);
    seq.push_back(TransferStepOp{opt.variant == DetectVariant::Destructive ? TransferVariant::ToSPrime
                                                                           : TransferVariant::CarrierDS});
    seq.push_back(DetectOp{});
    return seq;
}

/// Outcome that signals "prepared Fock state equals probed one".
inline Outcome positive_outcome(DetectVariant v) { return v == DetectVariant::Destructive ? Outcome::Bright : Outcome::Dark; }

inline MeasurementRecord detect_fock(const ProtocolRunner& runner, const DensityMatrix& state, int probe_n,
                                     const DetectOptions& opt, std::uint64_t seed) {
    return runner.run(detection_sequence(runner, probe_n, opt), state, seed);
}

inline MeasurementRecord detect_fock(const DensityMatrix& state, int probe_n, const DetectOptions& opt,
                                     const SystemConfig& cfg, const DetectionModel& detection, std::uint64_t seed) {
    return detect_fock(ProtocolRunner(cfg, detection), state, probe_n, opt, seed);
}

/// Probability of the positive outcome, without sampling.
inline double positive_probability(const ProtocolRunner& runner, const DensityMatrix& state, int probe_n,
                                   const DetectOptions& opt) {
    const std::vector<Outcome> forced{positive_outcome(opt.variant)};
    return runner.run(detection_sequence(runner, probe_n, opt), state, 0, &forced).probability;
}

/// Full instrument for one detection: outcome probabilities and both post-states.
inline FluorescenceBranches detection_branches(const ProtocolRunner& runner, const DensityMatrix& state, int probe_n,
                                               const DetectOptions& opt) {
    auto seq = detection_sequence(runner, probe_n, opt);
    seq.pop_back();
    const DensityMatrix before = runner.evolve_deterministic(seq, state);
    return fluorescence_instrument(before, runner.spec(), runner.detection());
}

// ---------------------------------------------------------------------------
// Sequential search

struct SearchResult {
    std::optional<int> found;
    MeasurementRecord record;
};

/// Probe each candidate in turn until a positive result. After a negative QND
/// result the ion sits in S, so a carrier π pulse returns it to D first.
inline SearchResult sequential_search(const ProtocolRunner& runner, DensityMatrix state,
                                      const std::vector<int>& candidates, DetectOptions opt, std::uint64_t seed) {
    SearchResult res;
    res.record.shot_seed = seed;
    res.record.post_state = state;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto rec = detect_fock(runner, state, candidates[i], opt, derive_seed(seed, i));
        res.record.outcomes.insert(res.record.outcomes.end(), rec.outcomes.begin(), rec.outcomes.end());
        res.record.p_bright.insert(res.record.p_bright.end(), rec.p_bright.begin(), rec.p_bright.end());
        state = rec.post_state;
        res.record.post_state = state;
        if (rec.outcomes.back() == positive_outcome(opt.variant)) {
            res.found = candidates[i];
            return res;
        }
        if (opt.variant == DetectVariant::QND && i + 1 < candidates.size())
            state = apply_pi_pulse(state, PulseTransition::carrier_sd(), CouplingOrder::FirstOrder,
                                   runner.config(), 0);
    }
    return res;
}

inline SearchResult sequential_search(const DensityMatrix& state, const std::vector<int>& candidates,
                                      DetectVariant variant, const SystemConfig& cfg, const DetectionModel& detection,
                                      std::uint64_t seed) {
    DetectOptions opt;
    opt.variant = variant;
    return sequential_search(ProtocolRunner(cfg, detection), state, candidates, opt, seed);
}

// ---------------------------------------------------------------------------
// Post-measurement Fock creation

struct FockCreationOptions {
    double pi_phase = 0.0;
    std::optional<double> half_phase;   // default: phase that collects the S–D coherence into |S,n⟩
};

struct FockCreationResult {
    DensityMatrix state;
    Eigen::VectorXd fock_populations;
    std::array<double, 4> internal_populations{};
    double motional_purity = 0.0;
    double half_phase = 0.0;
};

/// π pulse |D',n+1⟩ → |S,n⟩ (BSB on S–D') then π/2 pulse on |D,n⟩ ↔ |S,n⟩.
inline FockCreationResult create_fock_post_measurement(const DensityMatrix& state, int n, const SystemConfig& cfg,
                                                       const FockCreationOptions& opt = {}) {
    const HilbertSpec spec(cfg.fock_dim);
    if (n < 0 || n + 1 >= spec.fock_dim - 2)
        throw InvalidArgument("create_fock_post_measurement: n=" + std::to_string(n) + " at the truncation edge");
    if (state.dim() != spec.dim()) throw InvalidArgument("create_fock_post_measurement: dimension mismatch");

    PulseOptions pi;
    pi.phase = opt.pi_phase;
    DensityMatrix s = apply_pulse(state, PulseTransition::bsb_sdprime(), cfg, n, pi);

    PulseOptions half;
    half.area = std::numbers::pi / 2.0;
    if (opt.half_phase) {
        half.phase = *opt.half_phase;
    } else {
        const cplx coh = s(spec.index(Level::S, n), spec.index(Level::D, n));
        half.phase = std::abs(coh) > 1e-14 ? std::arg(coh) + std::numbers::pi / 2.0 : 0.0;
    }
    s = apply_pulse(s, PulseTransition::carrier_sd(), cfg, n, half);

    FockCreationResult res;
    res.fock_populations = motional_populations(s, spec);
    res.internal_populations = internal_populations(s, spec);
    const Operator red = reduce_motional(s, spec);
    res.motional_purity = (red * red).trace().real();
    res.half_phase = half.phase;
    res.state = std::move(s);
    return res;
}

}  // namespace atspec
