// fit.hpp: symmetric multi-peak fitting of Autler-Townes spectra
//
// Model: b + Σ_k A_k [f(x − c_k; w_k) + f(x + c_k; w_k)] for doublet pairs, or
// b + A f(x − c; w) for an undressed single line. Widths are FWHM.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atspec/errors.hpp"
#include "atspec/spectroscopy/scan.hpp"

namespace atspec {

enum class PeakModel { Gaussian, Lorentzian };

inline const char* peak_model_name(PeakModel m) { return m == PeakModel::Gaussian ? "gaussian" : "lorentzian"; }

inline double peak_shape(PeakModel m, double dx, double fwhm) {
    const double u = dx / fwhm;
    if (m == PeakModel::Gaussian) return std::exp(-4.0 * std::numbers::ln2 * u * u);
    return 1.0 / (1.0 + 4.0 * u * u);
}

struct Peak {
    double center = 0.0;
    double amplitude = 0.0;
    double width = 0.0;
    double center_sigma = 0.0;
    double amplitude_sigma = 0.0;
    double width_sigma = 0.0;
};

struct FitResult {
    std::vector<Peak> peaks;        // ascending centre
    double splitting = 0.0;         // distance between the innermost symmetric pair's centres
    double splitting_sigma = 0.0;
    double background = 0.0;
    double background_sigma = 0.0;
    double residual_norm = 0.0;
    PeakModel model = PeakModel::Gaussian;
    int iterations = 0;
    int restarts = 0;
};

enum class FitSource { Auto, Probabilities, Counts };

struct FitOptions {
    std::vector<double> seed_centers;   // positive-side centres; 0 requests a single central line
    std::optional<double> seed_width;
    FitSource source = FitSource::Auto;
    int max_restarts = 4;
    int max_iterations = 400;
};

// ---------------------------------------------------------------------------
// Levenberg–Marquardt

namespace detail {

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimise ‖r(p)‖² with central-difference Jacobians.
inline LmResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                    Eigen::VectorXd p, int max_iter) {
    const Eigen::Index np = p.size();
    auto jacobian = [&](const Eigen::VectorXd& q) {
        const Eigen::VectorXd r0 = residual(q);
        Eigen::MatrixXd j(r0.size(), np);
        for (Eigen::Index k = 0; k < np; ++k) {
            const double h = 1e-7 * std::max(1e-3, std::abs(q(k)));
            Eigen::VectorXd qp = q, qm = q;
            qp(k) += h;
            qm(k) -= h;
            j.col(k) = (residual(qp) - residual(qm)) / (2.0 * h);
        }
        return j;
    };

    LmResult out;
    Eigen::VectorXd r = residual(p);
    double rss = r.squaredNorm();
    double lambda = 1e-3;
    int it = 0;
    for (; it < max_iter; ++it) {
        const Eigen::MatrixXd j = jacobian(p);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool improved = false;
        for (int inner = 0; inner < 30; ++inner) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd pn = p + step;
            const Eigen::VectorXd rn = residual(pn);
            const double rssn = rn.allFinite() ? rn.squaredNorm() : INFINITY;
            if (rssn < rss) {
                const double rel = (rss - rssn) / std::max(rss, 1e-300);
                const double step_rel = step.norm() / std::max(p.norm(), 1e-12);
                p = pn;
                r = rn;
                rss = rssn;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel < 1e-14 || step_rel < 1e-12) out.converged = true;
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
        if (!improved) {
            out.converged = true;   // no downhill step left: at a minimum
            break;
        }
        if (out.converged) break;
    }
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::Index dof = std::max<Eigen::Index>(1, r.size() - np);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    out.covariance = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse() * (rss / dof))
                                       : Eigen::MatrixXd::Constant(np, np, INFINITY);
    out.params = p;
    out.rss = rss;
    out.iterations = it;
    return out;
}

inline std::vector<double> fit_values(const Spectrum& s, FitSource src) {
    const bool use_counts = src == FitSource::Counts || (src == FitSource::Auto && !s.counts.empty() && s.shots > 0);
    if (use_counts) {
        if (s.counts.empty() || s.shots <= 0) throw InvalidArgument("fit: spectrum has no counts");
        return s.measured_fraction();
    }
    return s.p_excited;
}

/// Positive-side local maxima ordered by height (3-point smoothed data).
inline std::vector<std::size_t> local_maxima(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> sm(y);
    for (std::size_t i = 1; i + 1 < n; ++i) sm[i] = (y[i - 1] + 2.0 * y[i] + y[i + 1]) / 4.0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < -1e-12 * std::abs(x.back() - x.front())) continue;
        const double left = i > 0 ? sm[i - 1] : -INFINITY;
        const double right = i + 1 < n ? sm[i + 1] : -INFINITY;
        if (sm[i] > left && sm[i] >= right) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sm[a] > sm[b]; });
    return idx;
}

inline double half_max_width(const std::vector<double>& x, const std::vector<double>& y, std::size_t peak,
                             double base) {
    const double half = base + 0.5 * (y[peak] - base);
    std::size_t l = peak, r = peak;
    while (l > 0 && y[l] > half) --l;
    while (r + 1 < y.size() && y[r] > half) ++r;
    return std::max(x[r] - x[l], 1e-300);
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Fit `n_peak_pairs` symmetric peak pairs plus a flat background. Seeds come
/// from `opt.seed_centers` (e.g. analytic ±g√n_eff) or from the data's
/// positive-side maxima. Throws FitError if no restart yields a usable fit.
inline FitResult fit_peaks(const Spectrum& spec, int n_peak_pairs, PeakModel model, const FitOptions& opt = {}) {
    spec.validate();
    if (n_peak_pairs < 1) throw InvalidArgument("fit_peaks: need at least one peak pair");
    const std::size_t need = 4 * static_cast<std::size_t>(n_peak_pairs) + 2;
    if (spec.size() < need)
        throw InvalidArgument("fit_peaks: spectrum has " + std::to_string(spec.size()) + " points, need " +
                              std::to_string(need));
    const std::vector<double>& x = spec.detunings;
    const std::vector<double> y = detail::fit_values(spec, opt.source);
    const std::size_t n = x.size();
    const double xmin = *std::min_element(x.begin(), x.end());
    const double xmax = *std::max_element(x.begin(), x.end());
    const double span = xmax - xmin;
    const double step = span / (n - 1);
    const double scale = std::max(std::abs(xmin), std::abs(xmax));   // conditions the optimiser

    const double ymin = *std::min_element(y.begin(), y.end());
    const double ymax = *std::max_element(y.begin(), y.end());
    if (!(ymax - ymin > 1e-12)) throw FitError("fit_peaks: spectrum is flat; no peaks to fit");

    // seeds
    std::vector<double> centers = opt.seed_centers;
    std::vector<double> seed_amp;
    double width0 = opt.seed_width.value_or(0.0);
    const auto maxima = detail::local_maxima(x, y);
    if (centers.empty()) {
        for (std::size_t k = 0; k < maxima.size() && centers.size() < static_cast<std::size_t>(n_peak_pairs); ++k)
            centers.push_back(std::abs(x[maxima[k]]));
        if (centers.size() < static_cast<std::size_t>(n_peak_pairs))
            throw FitError("fit_peaks: found " + std::to_string(centers.size()) + " peaks, expected " +
                           std::to_string(n_peak_pairs));
    }
    if (centers.size() != static_cast<std::size_t>(n_peak_pairs))
        throw InvalidArgument("fit_peaks: seed count does not match n_peak_pairs");
    std::sort(centers.begin(), centers.end());
    if (width0 <= 0.0) width0 = maxima.empty() ? 4.0 * step : detail::half_max_width(x, y, maxima.front(), ymin);
    width0 = std::clamp(width0, 2.0 * step, 0.5 * span);

    // a pair whose seed sits within half a width of zero is fitted as one line
    const bool single = n_peak_pairs == 1 && centers.front() < 0.5 * width0;

    auto amplitude_at = [&](double c) {
        const auto it = std::min_element(x.begin(), x.end(),
                                         [&](double a, double b) { return std::abs(a - c) < std::abs(b - c); });
        return std::max(y[std::distance(x.begin(), it)] - ymin, 1e-3 * (ymax - ymin));
    };

    // parameter layout (scaled): [b, (c_k/scale, A_k, w_k/scale)...]
    auto model_at = [&](const Eigen::VectorXd& p, double xi) {
        double v = p(0);
        for (int k = 0; k < n_peak_pairs; ++k) {
            const double c = p(1 + 3 * k) * scale, a = p(2 + 3 * k), w = std::abs(p(3 + 3 * k)) * scale;
            v += a * peak_shape(model, xi - c, w);
            if (!single) v += a * peak_shape(model, xi + c, w);
        }
        return v;
    };
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) r(i) = model_at(p, x[i]) - y[i];
        return r;
    };

    const double width_factors[] = {1.0, 0.5, 2.0, 0.25, 4.0, 0.75, 1.5};
    std::string last_reason = "no attempt";
    for (int attempt = 0; attempt <= opt.max_restarts && attempt < 7; ++attempt) {
        const double w = std::clamp(width0 * width_factors[attempt], step, 0.5 * span);
        Eigen::VectorXd p(1 + 3 * n_peak_pairs);
        p(0) = ymin;
        for (int k = 0; k < n_peak_pairs; ++k) {
            p(1 + 3 * k) = (single ? 0.0 : centers[k]) / scale;
            p(2 + 3 * k) = amplitude_at(single ? 0.0 : centers[k]);
            p(3 + 3 * k) = w / scale;
        }
        const auto lm = detail::levenberg_marquardt(residual, p, opt.max_iterations);

        // acceptance: finite, positive amplitudes, widths inside the scan, centres inside the grid
        bool ok = lm.params.allFinite();
        FitResult res;
        res.model = model;
        res.iterations = lm.iterations;
        res.restarts = attempt;
        res.residual_norm = std::sqrt(lm.rss);
        res.background = lm.params(0);
        res.background_sigma = std::sqrt(std::max(0.0, lm.covariance(0, 0)));
        for (int k = 0; k < n_peak_pairs && ok; ++k) {
            const double c = lm.params(1 + 3 * k) * scale;
            const double a = lm.params(2 + 3 * k);
            const double wk = std::abs(lm.params(3 + 3 * k)) * scale;
            const double sc = std::sqrt(std::max(0.0, lm.covariance(1 + 3 * k, 1 + 3 * k))) * scale;
            const double sa = std::sqrt(std::max(0.0, lm.covariance(2 + 3 * k, 2 + 3 * k)));
            const double sw = std::sqrt(std::max(0.0, lm.covariance(3 + 3 * k, 3 + 3 * k))) * scale;
            if (!(a > 0.0) || !(wk > 0.25 * step) || !(wk < span) || !(std::abs(c) <= 0.5 * span) ||
                !std::isfinite(sc) || !std::isfinite(sa) || a < 2.0 * sa) {
                ok = false;
                last_reason = "peak " + std::to_string(k) + " degenerate (A=" + std::to_string(a) +
                              ", w=" + std::to_string(wk) + ")";
                break;
            }
            if (single) {
                res.peaks.push_back({c, a, wk, sc, sa, sw});
            } else {
                res.peaks.push_back({-std::abs(c), a, wk, sc, sa, sw});
                res.peaks.push_back({std::abs(c), a, wk, sc, sa, sw});
            }
        }
        if (!ok) continue;
        std::sort(res.peaks.begin(), res.peaks.end(), [](const Peak& a, const Peak& b) { return a.center < b.center; });
        if (!single) {
            // innermost pair
            const auto inner = std::min_element(res.peaks.begin(), res.peaks.end(), [](const Peak& a, const Peak& b) {
                return std::abs(a.center) < std::abs(b.center);
            });
            res.splitting = 2.0 * std::abs(inner->center);
            res.splitting_sigma = 2.0 * inner->center_sigma;
        }
        return res;
    }
    throw FitError("fit_peaks: no convergence after " + std::to_string(opt.max_restarts + 1) +
                   " attempts (" + last_reason + ")");
}

// ---------------------------------------------------------------------------
// Fixed-centre fit (amplitudes linear, common width by 1-D search)

struct FixedCenterFit {
    Eigen::VectorXd amplitudes;       // one per centre (shared by ±centre)
    Eigen::VectorXd amplitude_sigma;
    double width = 0.0;
    double background = 0.0;
    double residual_norm = 0.0;
};

inline FixedCenterFit fit_fixed_centers(const Spectrum& spec, const std::vector<double>& centers, PeakModel model,
                                        double width_hint, FitSource source = FitSource::Auto) {
    spec.validate();
    if (centers.empty()) throw InvalidArgument("fit_fixed_centers: no centres");
    const auto& x = spec.detunings;
    const std::vector<double> y = detail::fit_values(spec, source);
    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index k = static_cast<Eigen::Index>(centers.size());
    if (n < k + 2) throw InvalidArgument("fit_fixed_centers: too few points");
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

    auto design = [&](double w) {
        Eigen::MatrixXd a(n, k + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, 0) = 1.0;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double c = centers[j];
                a(i, j + 1) = peak_shape(model, x[i] - c, w) + (c != 0.0 ? peak_shape(model, x[i] + c, w) : 0.0);
            }
        }
        return a;
    };
    auto rss_at = [&](double w) {
        const Eigen::MatrixXd a = design(w);
        const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(yv);
        return (a * beta - yv).squaredNorm();
    };

    // golden-section search in log width
    double lo = std::log(0.2 * width_hint), hi = std::log(5.0 * width_hint);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
    double f1 = rss_at(std::exp(c1)), f2 = rss_at(std::exp(c2));
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = rss_at(std::exp(c1));
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = rss_at(std::exp(c2));
        }
    }
    const double w = std::exp(0.5 * (lo + hi));
    const Eigen::MatrixXd a = design(w);
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(yv);
    const double rss = (a * beta - yv).squaredNorm();
    const double s2 = rss / std::max<Eigen::Index>(1, n - k - 2);
    const Eigen::MatrixXd cov = (a.transpose() * a).ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1)) * s2;

    FixedCenterFit out;
    out.width = w;
    out.background = beta(0);
    out.amplitudes = beta.tail(k);
    out.amplitude_sigma = cov.diagonal().tail(k).cwiseMax(0.0).cwiseSqrt();
    out.residual_norm = std::sqrt(rss);
    return out;
}

}  // namespace atspec
