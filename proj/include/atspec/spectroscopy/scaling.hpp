// scaling.hpp: splitting versus phonon number

#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "atspec/errors.hpp"
#include "atspec/model/config.hpp"
#include "atspec/model/hamiltonian.hpp"

namespace atspec {

struct ScalingFit {
    double amplitude = 0.0;          // A in s_n = A·√(n+δ)
    double amplitude_sigma = 0.0;
    int offset = 0;                  // δ
    std::map<int, double> residuals; // s_n − A√(n+δ)
    double max_relative_residual = 0.0;
    double exponent = 0.0;           // log-log slope of s_n against n+δ; 0.5 for √ scaling
    double exponent_sigma = 0.0;
};

inline int scaling_offset(SidebandRegime regime) {
    if (regime == SidebandRegime::Carrier) throw InvalidArgument("scaling: needs RSB or BSB coupling");
    return regime == SidebandRegime::BSB ? 1 : 0;
}

/// Least-squares A of s_n = A√(n+δ) (δ = 1 BSB, 0 RSB) plus the free power-law
/// exponent as a shape check. Points with n+δ = 0 are skipped.
inline ScalingFit extract_scaling(const std::map<int, double>& splittings, SidebandRegime regime) {
    ScalingFit out;
    out.offset = scaling_offset(regime);
    std::vector<std::pair<double, double>> pts;   // (n+δ, s)
    for (const auto& [n, s] : splittings) {
        if (n < 0) throw InvalidArgument("scaling: negative phonon number");
        if (n + out.offset > 0) pts.emplace_back(n + out.offset, s);
    }
    if (pts.size() < 3)
        throw InvalidArgument("scaling: need at least 3 phonon numbers with nonzero coupling, got " +
                              std::to_string(pts.size()));

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [m, s] : pts) {
        sxx += m;
        sxy += std::sqrt(m) * s;
    }
    out.amplitude = sxy / sxx;
    double rss = 0.0;
    for (const auto& [n, s] : splittings) {
        if (n + out.offset <= 0) continue;
        const double model = out.amplitude * std::sqrt(static_cast<double>(n + out.offset));
        out.residuals[n] = s - model;
        rss += (s - model) * (s - model);
        if (model != 0.0) out.max_relative_residual = std::max(out.max_relative_residual, std::abs(s - model) / model);
    }
    const double k = static_cast<double>(pts.size());
    out.amplitude_sigma = std::sqrt(rss / (k - 1.0) / sxx);

    // log s = a + b log m
    double mx = 0.0, my = 0.0;
    int used = 0;
    for (const auto& [m, s] : pts) {
        if (s <= 0.0) continue;
        mx += std::log(m);
        my += std::log(s);
        ++used;
    }
    if (used >= 3) {
        mx /= used;
        my /= used;
        double cxx = 0.0, cxy = 0.0;
        for (const auto& [m, s] : pts) {
            if (s <= 0.0) continue;
            cxx += (std::log(m) - mx) * (std::log(m) - mx);
            cxy += (std::log(m) - mx) * (std::log(s) - my);
        }
        if (cxx > 0.0) {
            out.exponent = cxy / cxx;
            double r2 = 0.0;
            for (const auto& [m, s] : pts) {
                if (s <= 0.0) continue;
                const double e = std::log(s) - my - out.exponent * (std::log(m) - mx);
                r2 += e * e;
            }
            out.exponent_sigma = used > 2 ? std::sqrt(r2 / (used - 2) / cxx) : 0.0;
        }
    }
    return out;
}

/// Ground-state sideband Rabi rate |g| that a Rabi-flopping calibration would
/// return. Only the analytic value is provided.
inline double rabi_calibration(const SystemConfig& cfg) { return coupling_g(cfg); }

}  // namespace atspec
