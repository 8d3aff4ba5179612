// Divergences between distributions: closed-form KL for diagonal Gaussians,
// 1D total variation by adaptive quadrature, a Monte Carlo TV estimator for
// general dimension, 1D Wasserstein-2, a histogram TV proxy, and the Pinsker
// upper bound relating the two.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stllab/linalg.hpp"
#include "stllab/rng.hpp"

namespace stllab {

struct DiagGaussian {
    Vec mean;
    Vec var;

    DiagGaussian() = default;
    DiagGaussian(Vec m, Vec v) : mean(std::move(m)), var(std::move(v)) {
        if (mean.size() != var.size())
            throw std::invalid_argument("DiagGaussian: mean/var size mismatch");
        for (double s2 : var)
            if (!(s2 > 0.0)) throw std::invalid_argument("DiagGaussian: variance must be > 0");
    }

    std::size_t dim() const { return mean.size(); }

    double log_pdf(const Vec& z) const {
        if (z.size() != dim()) throw std::invalid_argument("log_pdf: dimension mismatch");
        double lp = 0.0;
        for (std::size_t k = 0; k < dim(); ++k) {
            const double d = z[k] - mean[k];
            lp += -0.5 * std::log(2.0 * std::numbers::pi * var[k]) - 0.5 * d * d / var[k];
        }
        return lp;
    }

    Vec sample(RngStream& rng) const {
        Vec z(dim());
        for (std::size_t k = 0; k < dim(); ++k) z[k] = mean[k] + std::sqrt(var[k]) * rng.gaussian();
        return z;
    }
};

// KL(p || q) = sum_k 1/2 ( log(q_k/p_k) + p_k/q_k + (mu_pk - mu_qk)^2/q_k - 1 ).
inline double kl_diag_gauss(const DiagGaussian& p, const DiagGaussian& q) {
    if (p.dim() != q.dim()) throw std::invalid_argument("kl_diag_gauss: dimension mismatch");
    double kl = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const double md = p.mean[k] - q.mean[k];
        kl += 0.5 * (std::log(q.var[k] / p.var[k]) + p.var[k] / q.var[k] + md * md / q.var[k] - 1.0);
    }
    return std::max(kl, 0.0);
}

namespace detail {

// Adaptive Simpson quadrature, absolute tolerance.
inline double simpson_segment(const std::function<double(double)>& f, double a, double b,
                              double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double eps,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson_segment(f, a, m, fa, flm, fm);
    const double right = simpson_segment(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

// Pre-stratified into uniform panels so narrow bumps inside a wide window
// cannot be missed by an early convergence accept.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth = 48, int panels = 64) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h, hi = lo + h;
        const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
        const double whole = simpson_segment(f, lo, hi, fa, fm, fb);
        total += adaptive_simpson_rec(f, lo, hi, fa, fm, fb, whole, eps / panels, depth);
    }
    return total;
}

inline double gauss_pdf(double z, double mean, double var) {
    const double d = z - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace detail

// 1/2 int |p - q| over mean-span +- 12 max sigma; Gaussian mass outside that
// window is below 1e-30.
inline double tv_gauss_1d(const DiagGaussian& p, const DiagGaussian& q) {
    if (p.dim() != 1 || q.dim() != 1) throw std::invalid_argument("tv_gauss_1d: 1D only");
    const double sp = std::sqrt(p.var[0]), sq = std::sqrt(q.var[0]);
    const double smax = std::max(sp, sq);
    const double lo = std::min(p.mean[0], q.mean[0]) - 12.0 * smax;
    const double hi = std::max(p.mean[0], q.mean[0]) + 12.0 * smax;
    auto f = [&](double z) {
        return std::abs(detail::gauss_pdf(z, p.mean[0], p.var[0]) -
                        detail::gauss_pdf(z, q.mean[0], q.var[0]));
    };
    const double integral = detail::adaptive_simpson(f, lo, hi, 1e-8);
    return std::clamp(0.5 * integral, 0.0, 1.0);
}

struct TvEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

// Monte Carlo TV for densities given through their log-pdfs:
//   TV(p, q) = E_{z ~ (p+q)/2} [ |p - q| / (p + q) ] = E[ tanh(|log p - log q| / 2) ].
// Sampling from the equal mixture keeps the integrand in [0,1], so the
// estimator has finite variance for any pair.
inline TvEstimate tv_mc(const std::function<double(const Vec&)>& log_p,
                        const std::function<double(const Vec&)>& log_q,
                        const std::function<Vec(RngStream&)>& sample_p,
                        const std::function<Vec(RngStream&)>& sample_q,
                        std::size_t m, RngStream& rng) {
    if (m < 1000) throw std::invalid_argument("tv_mc: m must be >= 1000");
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const bool from_p = rng.uniform01() < 0.5;
        const Vec z = from_p ? sample_p(rng) : sample_q(rng);
        const double lp = log_p(z), lq = log_q(z);
        double term;
        if (!std::isfinite(lp) && !std::isfinite(lq))
            term = 0.0;  // both components vanish; measure-zero guard
        else if (!std::isfinite(lp) || !std::isfinite(lq))
            term = 1.0;
        else
            term = std::tanh(0.5 * std::abs(lp - lq));
        s += term;
        s2 += term * term;
    }
    const double mean = s / static_cast<double>(m);
    const double var = std::max(0.0, s2 / static_cast<double>(m) - mean * mean);
    return TvEstimate{mean, std::sqrt(var / static_cast<double>(m))};
}

inline TvEstimate tv_mc(const DiagGaussian& p, const DiagGaussian& q, std::size_t m,
                        RngStream& rng) {
    return tv_mc([&](const Vec& z) { return p.log_pdf(z); },
                 [&](const Vec& z) { return q.log_pdf(z); },
                 [&](RngStream& r) { return p.sample(r); },
                 [&](RngStream& r) { return q.sample(r); }, m, rng);
}

// W2 between 1D Gaussians: sqrt((mu_p - mu_q)^2 + (sigma_p - sigma_q)^2).
inline double w2_gauss_1d(const DiagGaussian& p, const DiagGaussian& q) {
    if (p.dim() != 1 || q.dim() != 1) throw std::invalid_argument("w2_gauss_1d: 1D only");
    const double dm = p.mean[0] - q.mean[0];
    const double ds = std::sqrt(p.var[0]) - std::sqrt(q.var[0]);
    return std::sqrt(dm * dm + ds * ds);
}

// Pinsker: TV <= sqrt(KL/2), capped at the TV range.
inline double pinsker_tv_upper(double kl) {
    if (kl < 0.0) throw std::invalid_argument("pinsker_tv_upper: kl must be >= 0");
    return std::min(1.0, std::sqrt(0.5 * kl));
}

// Empirical TV between 1D samples over a common equal-width binning.
inline double tv_hist(const std::vector<double>& samples_p, const std::vector<double>& samples_q,
                      std::size_t bins) {
    if (samples_p.empty() || samples_q.empty()) throw std::invalid_argument("tv_hist: empty input");
    if (bins < 2) throw std::invalid_argument("tv_hist: bins must be >= 2");
    double lo = samples_p[0], hi = samples_p[0];
    for (double v : samples_p) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : samples_q) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (lo == hi) return 0.0;  // all mass in one bin for both samples
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> hp(bins, 0.0), hq(bins, 0.0);
    auto drop = [&](std::vector<double>& h, double v) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        h[std::min(b, bins - 1)] += 1.0;
    };
    for (double v : samples_p) drop(hp, v);
    for (double v : samples_q) drop(hq, v);
    double tv = 0.0;
    for (std::size_t b = 0; b < bins; ++b)
        tv += std::abs(hp[b] / static_cast<double>(samples_p.size()) -
                       hq[b] / static_cast<double>(samples_q.size()));
    return 0.5 * tv;
}

}  // namespace stllab
