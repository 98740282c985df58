// algebra.hpp: dense complex linear algebra on the internal ⊗ Fock space
//
// Composite basis ordering is internal-major: index = level * fock_dim + n,
// with internal levels ordered S, S', D, D'.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "atspec/errors.hpp"

namespace atspec {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

enum class Level : int { S = 0, SPrime = 1, D = 2, DPrime = 3 };

inline constexpr std::array<Level, 4> kAllLevels{Level::S, Level::SPrime, Level::D, Level::DPrime};

inline const char* level_name(Level l) {
    switch (l) {
        case Level::S: return "S";
        case Level::SPrime: return "S'";
        case Level::D: return "D";
        case Level::DPrime: return "D'";
    }
    return "?";
}

struct HilbertSpec {
    static constexpr int internal_dim = 4;
    int fock_dim = 20;

    HilbertSpec() = default;
    explicit HilbertSpec(int nf) : fock_dim(nf) {
        if (nf < 2) throw InvalidArgument("fock_dim must be >= 2, got " + std::to_string(nf));
    }

    int dim() const { return internal_dim * fock_dim; }

    int index(Level l, int n) const {
        if (n < 0 || n >= fock_dim)
            throw InvalidArgument("Fock index " + std::to_string(n) + " outside truncation");
        return static_cast<int>(l) * fock_dim + n;
    }

    bool contains(int n) const { return n >= 0 && n < fock_dim; }

    friend bool operator==(const HilbertSpec&, const HilbertSpec&) = default;
};

// ---------------------------------------------------------------------------
// Elementary operators

inline Operator annihilation(int fock_dim) {
    if (fock_dim < 2) throw InvalidArgument("annihilation: fock_dim must be >= 2");
    Operator a = Operator::Zero(fock_dim, fock_dim);
    for (int n = 1; n < fock_dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Operator creation(int fock_dim) { return annihilation(fock_dim).adjoint(); }

inline Operator number_operator(int fock_dim) {
    Operator num = Operator::Zero(fock_dim, fock_dim);
    for (int n = 0; n < fock_dim; ++n) num(n, n) = static_cast<double>(n);
    return num;
}

/// |to⟩⟨from| on the four internal levels.
inline Operator atomic_transition(Level from, Level to) {
    if (from == to)
        throw InvalidArgument(std::string("atomic_transition: identical levels ") + level_name(from) +
                              "; use projector() for populations");
    Operator s = Operator::Zero(4, 4);
    s(static_cast<int>(to), static_cast<int>(from)) = 1.0;
    return s;
}

/// σ_mn in the |m⟩⟨n| notation.
inline Operator sigma(Level m, Level n) { return atomic_transition(n, m); }

inline Operator projector(Level l) {
    Operator p = Operator::Zero(4, 4);
    p(static_cast<int>(l), static_cast<int>(l)) = 1.0;
    return p;
}

/// Kronecker product A ⊗ B.
inline Operator tensor(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Operator lift_internal(const Operator& op4, const HilbertSpec& spec) {
    if (op4.rows() != 4) throw InvalidArgument("lift_internal: expected a 4x4 operator");
    return tensor(op4, Operator::Identity(spec.fock_dim, spec.fock_dim));
}

inline Operator lift_motional(const Operator& opF, const HilbertSpec& spec) {
    if (opF.rows() != spec.fock_dim) throw InvalidArgument("lift_motional: operator size does not match fock_dim");
    return tensor(Operator::Identity(4, 4), opF);
}

inline StateVector basis_state(const HilbertSpec& spec, Level l, int n) {
    StateVector v = StateVector::Zero(spec.dim());
    v(spec.index(l, n)) = 1.0;
    return v;
}

// ---------------------------------------------------------------------------
// Hermitian diagnostics and eigensolver

inline double hermiticity_error(const Operator& op) {
    if (op.rows() != op.cols()) return INFINITY;
    return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Operator& op, double tol = 1e-10) {
    if (op.size() == 0) return true;
    const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
    return hermiticity_error(op) <= tol * scale;
}

struct EigenSystem {
    Eigen::VectorXd values;   // ascending
    Operator vectors;         // columns are orthonormal eigenvectors
};

inline EigenSystem eig_hermitian(const Operator& op) {
    if (op.rows() != op.cols()) throw InvalidArgument("eig_hermitian: operator not square");
    if (!is_hermitian(op, 1e-10)) throw InvalidArgument("eig_hermitian: operator not Hermitian");
    Eigen::SelfAdjointEigenSolver<Operator> solver(op);
    if (solver.info() != Eigen::Success) throw Error("eig_hermitian: eigensolver failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// ---------------------------------------------------------------------------
// Density matrices

/// Validated density matrix. Construction checks Hermiticity, unit trace and
/// positivity within the library tolerances.
class DensityMatrix {
public:
    static constexpr double kHermTol = 1e-12;
    static constexpr double kTraceTol = 1e-8;
    static constexpr double kPosTol = -1e-9;

    DensityMatrix() = default;

    explicit DensityMatrix(Operator m, bool validate_now = true) : m_(std::move(m)) {
        if (validate_now) validate();
    }

    static DensityMatrix pure(const StateVector& psi) {
        const double nrm = psi.norm();
        if (nrm == 0.0) throw InvalidArgument("DensityMatrix::pure: zero vector");
        const StateVector u = psi / nrm;
        return DensityMatrix(u * u.adjoint());
    }

    /// Normalise a positive (unnormalised) operator, e.g. a Kraus branch.
    static DensityMatrix normalized(Operator m) {
        const double tr = m.trace().real();
        if (!(tr > 0.0)) throw InvalidArgument("DensityMatrix::normalized: non-positive trace");
        m /= tr;
        m = 0.5 * (m + m.adjoint()).eval();
        return DensityMatrix(std::move(m));
    }

    const Operator& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double trace() const { return m_.trace().real(); }
    double purity() const { return (m_ * m_).trace().real(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Operator> solver(m_, Eigen::EigenvaluesOnly);
        return solver.eigenvalues()(0);
    }

    void validate() const {
        if (m_.rows() != m_.cols() || m_.rows() == 0) throw InvalidArgument("density matrix not square");
        const double herm = hermiticity_error(m_);
        if (herm > kHermTol * std::max(1.0, m_.cwiseAbs().maxCoeff()))
            throw InvalidArgument("density matrix not Hermitian (err " + std::to_string(herm) + ")");
        if (std::abs(trace() - 1.0) > kTraceTol)
            throw InvalidArgument("density matrix trace " + std::to_string(trace()) + " != 1");
        if (min_eigenvalue() < kPosTol)
            throw InvalidArgument("density matrix has negative eigenvalue " + std::to_string(min_eigenvalue()));
    }

private:
    Operator m_;
};

inline cplx expectation(const DensityMatrix& rho, const Operator& op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim())
        throw InvalidArgument("expectation: dimension mismatch (" + std::to_string(rho.dim()) + " vs " +
                              std::to_string(op.rows()) + ")");
    // tr(ρO) = Σ_ij ρ_ij O_ji
    return (rho.matrix().transpose().cwiseProduct(op)).sum();
}

/// ρ = |level⟩⟨level| ⊗ ρ_motion
inline DensityMatrix embed(Level l, const DensityMatrix& motion, const HilbertSpec& spec) {
    if (motion.dim() != spec.fock_dim) throw InvalidArgument("embed: motional dimension mismatch");
    return DensityMatrix(tensor(projector(l), motion.matrix()), false);
}

/// Populations of the internal levels, in S, S', D, D' order.
inline std::array<double, 4> internal_populations(const DensityMatrix& rho, const HilbertSpec& spec) {
    std::array<double, 4> p{};
    for (Level l : kAllLevels) {
        double acc = 0.0;
        for (int n = 0; n < spec.fock_dim; ++n) acc += rho(spec.index(l, n), spec.index(l, n)).real();
        p[static_cast<int>(l)] = acc;
    }
    return p;
}

/// Reduced motional density matrix (partial trace over internal levels).
inline Operator reduce_motional(const DensityMatrix& rho, const HilbertSpec& spec) {
    const int nf = spec.fock_dim;
    Operator r = Operator::Zero(nf, nf);
    for (int l = 0; l < 4; ++l) r += rho.matrix().block(l * nf, l * nf, nf, nf);
    return r;
}

inline Eigen::VectorXd motional_populations(const DensityMatrix& rho, const HilbertSpec& spec) {
    return reduce_motional(rho, spec).diagonal().real();
}

/// Fock populations restricted to one internal level (not normalised).
inline Eigen::VectorXd level_fock_populations(const DensityMatrix& rho, const HilbertSpec& spec, Level l) {
    Eigen::VectorXd p(spec.fock_dim);
    for (int n = 0; n < spec.fock_dim; ++n) p(n) = rho(spec.index(l, n), spec.index(l, n)).real();
    return p;
}

// ---------------------------------------------------------------------------
// Truncation guard

inline constexpr double kTruncationLimit = 1e-6;

inline double top_fock_population(const DensityMatrix& rho, const HilbertSpec& spec) {
    const Eigen::VectorXd p = motional_populations(rho, spec);
    const int nf = spec.fock_dim;
    return p(nf - 1) + p(nf - 2);
}

inline void check_truncation(const DensityMatrix& rho, const HilbertSpec& spec, const std::string& where) {
    const double top = top_fock_population(rho, spec);
    if (top >= kTruncationLimit)
        throw TruncationError(where + ": population " + std::to_string(top) +
                              " in the top two Fock levels (fock_dim=" + std::to_string(spec.fock_dim) +
                              "); increase fock_dim");
}

}  // namespace atspec
