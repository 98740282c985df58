// evolve.hpp: Lindblad master-equation integration and unitary propagation
//
// dρ/dt = −i[H,ρ] + Σ_k (C_k ρ C_k† − ½{C_k†C_k, ρ})
//
// The generator is applied in matrix form with sparse H and C_k; no Liouvillian
// superoperator is ever built. Every term is evaluated as X − X† or X + X†,
// which keeps ρ exactly Hermitian in floating point.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "atspec/core/algebra.hpp"

namespace atspec {

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline SparseOperator to_sparse(const Operator& op, double drop = 0.0) {
    return op.sparseView(1.0, drop);
}

struct IntegratorSettings {
    enum class Method { FixedRK4, AdaptiveRK45 };
    Method method = Method::AdaptiveRK45;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.0;            // 0: unbounded; FixedRK4 uses it as the step
    long max_steps = 5'000'000;
    int positivity_stride = 0;        // check min eigenvalue every k accepted steps (0: end only)

    void validate() const {
        auto ok = [](double t) { return t > 0.0 && t <= 1e-2; };
        if (!ok(rel_tol) || !ok(abs_tol)) throw InvalidArgument("integrator tolerances must lie in (0, 1e-2]");
        if (method == Method::FixedRK4 && !(max_step > 0.0))
            throw InvalidArgument("FixedRK4 needs max_step > 0");
        if (max_step < 0.0) throw InvalidArgument("max_step must be >= 0");
    }
};

struct EvolutionDiagnostics {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    long steps = 0;
    long rejected = 0;
};

struct EvolutionResult {
    DensityMatrix final_state;
    std::vector<double> times;
    std::map<std::string, std::vector<double>> observables;
    EvolutionDiagnostics diagnostics;
};

struct NamedObservable {
    std::string name;
    Operator op;
};

namespace detail {

class LindbladGenerator {
public:
    LindbladGenerator(const Operator& h, const std::vector<Operator>& collapses) {
        Operator k = Operator::Zero(h.rows(), h.cols());
        for (const auto& c : collapses) {
            if (c.rows() != h.rows() || c.cols() != h.cols())
                throw InvalidArgument("evolve_lindblad: collapse operator dimension mismatch");
            c_.push_back(to_sparse(c));
            k += c.adjoint() * c;
        }
        // −iH_eff ρ with H_eff = H − (i/2)K; the full generator is
        // (−iH_eff ρ) + (−iH_eff ρ)† + Σ CρC†.
        heff_ = to_sparse(-kI * h - 0.5 * k);
    }

    void operator()(const Operator& rho, Operator& out) const {
        work_.noalias() = heff_ * rho;
        out = work_ + work_.adjoint();
        for (const auto& c : c_) {
            work_.noalias() = c * rho;                 // Cρ
            tmp_.noalias() = c * work_.adjoint();      // C(Cρ)† = Cρ†C† = CρC†
            out += tmp_;
        }
    }

private:
    SparseOperator heff_;
    std::vector<SparseOperator> c_;
    mutable Operator work_;
    mutable Operator tmp_;
};

inline double trace_error(const Operator& rho) { return std::abs(rho.trace().real() - 1.0); }

inline double min_eig(const Operator& rho) {
    Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace detail

/// Integrate the master equation for `duration`. Observables are recorded at
/// t = 0 and after every accepted step.
inline EvolutionResult evolve_lindblad(const DensityMatrix& rho0, const Operator& h,
                                       const std::vector<Operator>& collapses, double duration,
                                       const IntegratorSettings& settings = {},
                                       const std::vector<NamedObservable>& observables = {}) {
    settings.validate();
    if (h.rows() != rho0.dim() || h.cols() != rho0.dim())
        throw InvalidArgument("evolve_lindblad: Hamiltonian/state dimension mismatch");
    if (duration < 0.0) throw InvalidArgument("evolve_lindblad: negative duration");
    for (const auto& o : observables)
        if (o.op.rows() != rho0.dim()) throw InvalidArgument("evolve_lindblad: observable dimension mismatch");

    std::vector<SparseOperator> obs_sparse;
    for (const auto& o : observables) obs_sparse.push_back(to_sparse(o.op));

    EvolutionResult res;
    auto record = [&](double t, const Operator& rho) {
        res.times.push_back(t);
        for (std::size_t i = 0; i < observables.size(); ++i) {
            // tr(ρO) = Σ_ij ρ_ji O_ij
            double v = 0.0;
            const auto& o = obs_sparse[i];
            for (int r = 0; r < o.outerSize(); ++r)
                for (SparseOperator::InnerIterator it(o, r); it; ++it) v += (rho(it.col(), r) * it.value()).real();
            res.observables[observables[i].name].push_back(v);
        }
    };
    auto& diag = res.diagnostics;
    auto check = [&](const Operator& rho, bool eig_now) {
        diag.max_trace_error = std::max(diag.max_trace_error, detail::trace_error(rho));
        diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, hermiticity_error(rho));
        if (eig_now) diag.min_eigenvalue = std::min(diag.min_eigenvalue, detail::min_eig(rho));
    };

    Operator rho = rho0.matrix();
    record(0.0, rho);
    check(rho, true);
    if (duration == 0.0) {
        res.final_state = rho0;
        return res;
    }

    const detail::LindbladGenerator f(h, collapses);
    const Eigen::Index n = rho.rows();
    Operator k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n), y(n, n);

    double t = 0.0;
    if (settings.method == IntegratorSettings::Method::FixedRK4) {
        const long nsteps = std::max(1L, static_cast<long>(std::ceil(duration / settings.max_step - 1e-12)));
        const double dt = duration / static_cast<double>(nsteps);
        for (long s = 0; s < nsteps; ++s) {
            f(rho, k1);
            y = rho + 0.5 * dt * k1;
            f(y, k2);
            y = rho + 0.5 * dt * k2;
            f(y, k3);
            y = rho + dt * k3;
            f(y, k4);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = (s + 1) * dt;
            ++diag.steps;
            record(t, rho);
            check(rho, settings.positivity_stride > 0 && diag.steps % settings.positivity_stride == 0);
        }
    } else {
        // Dormand–Prince 5(4), FSAL.
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;

        f(rho, k1);
        // initial step from the generator scale
        const double scale = std::max(k1.cwiseAbs().maxCoeff(), 1e-300);
        double dt = std::min(duration, 0.01 / scale);
        if (settings.max_step > 0.0) dt = std::min(dt, settings.max_step);

        Operator y5(n, n), err(n, n);
        while (t < duration) {
            if (diag.steps + diag.rejected >= settings.max_steps)
                throw IntegrationError("evolve_lindblad: step budget exhausted at t=" + std::to_string(t));
            bool last = false;
            if (t + dt >= duration) {
                dt = duration - t;
                last = true;
            }
            y = rho + dt * (a21 * k1);
            f(y, k2);
            y = rho + dt * (a31 * k1 + a32 * k2);
            f(y, k3);
            y = rho + dt * (a41 * k1 + a42 * k2 + a43 * k3);
            f(y, k4);
            y = rho + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(y, k5);
            y = rho + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(y, k6);
            y5 = rho + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f(y5, k7);
            err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double en = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double sc = settings.abs_tol +
                                      settings.rel_tol * std::max(std::abs(rho(i, j)), std::abs(y5(i, j)));
                    en = std::max(en, std::abs(err(i, j)) / sc);
                }

            if (!std::isfinite(en)) throw IntegrationError("evolve_lindblad: non-finite error estimate");
            if (en <= 1.0) {
                t = last ? duration : t + dt;
                rho.swap(y5);
                k1.swap(k7);
                ++diag.steps;
                record(t, rho);
                check(rho, settings.positivity_stride > 0 && diag.steps % settings.positivity_stride == 0);
                const double fac = en == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(en, -0.2));
                dt *= fac;
            } else {
                ++diag.rejected;
                dt *= std::max(0.1, 0.9 * std::pow(en, -0.2));
            }
            if (settings.max_step > 0.0) dt = std::min(dt, settings.max_step);
            if (dt < 1e-14 * std::max(duration, 1e-300))
                throw IntegrationError("evolve_lindblad: step size underflow at t=" + std::to_string(t));
        }
    }
    check(rho, true);
    // not validated here: callers inspect the diagnostics
    res.final_state = DensityMatrix(std::move(rho), false);
    return res;
}

// ---------------------------------------------------------------------------
// Closed-system propagation

/// e^{−iHt} through the Hermitian eigendecomposition of H; reusable for many durations.
class UnitaryPropagator {
public:
    explicit UnitaryPropagator(const Operator& h) : es_(eig_hermitian(h)) {}

    Operator unitary(double t) const {
        const Eigen::VectorXcd ph = (-kI * t * es_.values.cast<cplx>()).array().exp();
        return es_.vectors * ph.asDiagonal() * es_.vectors.adjoint();
    }

    DensityMatrix apply(const DensityMatrix& rho, double t) const {
        // Work in the eigenbasis: ρ' = V†ρV, ρ'_ij ← e^{−i(E_i−E_j)t} ρ'_ij.
        Operator r = es_.vectors.adjoint() * rho.matrix() * es_.vectors;
        const Eigen::Index n = r.rows();
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) r(i, j) *= std::exp(-kI * t * (es_.values(i) - es_.values(j)));
        Operator out = es_.vectors * r * es_.vectors.adjoint();
        out = 0.5 * (out + out.adjoint()).eval();
        return DensityMatrix(std::move(out));
    }

    const EigenSystem& eigensystem() const { return es_; }

private:
    EigenSystem es_;
};

inline DensityMatrix evolve_unitary(const DensityMatrix& rho, const Operator& h, double duration) {
    if (h.rows() != rho.dim()) throw InvalidArgument("evolve_unitary: dimension mismatch");
    if (duration < 0.0) throw InvalidArgument("evolve_unitary: negative duration");
    if (duration == 0.0) return rho;
    return UnitaryPropagator(h).apply(rho, duration);
}

/// Exact unitary propagation when there is no dissipation, master equation otherwise.
inline DensityMatrix propagate(const DensityMatrix& rho, const Operator& h, const std::vector<Operator>& collapses,
                               double duration, const IntegratorSettings& settings = {}) {
    if (collapses.empty()) return evolve_unitary(rho, h, duration);
    auto res = evolve_lindblad(rho, h, collapses, duration, settings);
    const auto& d = res.diagnostics;
    if (d.max_trace_error > DensityMatrix::kTraceTol || d.min_eigenvalue < DensityMatrix::kPosTol)
        throw IntegrationError("propagate: state left the physical set (trace err " +
                               std::to_string(d.max_trace_error) + ", min eig " + std::to_string(d.min_eigenvalue) +
                               ")");
    return std::move(res.final_state);
}

}  // namespace atspec
