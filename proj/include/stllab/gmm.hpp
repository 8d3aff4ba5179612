// Conditional Gaussian mixture generator with closed-form estimation, the
// averaged linear classifier, the quadratic loss, and exact population /
// empirical risks.  Labels live in {-1, +1}; x | y ~ N(y mu, sigma^2 I) for
// the true model and N(mu_hat_y, diag(sigma_hat^2)) for fitted models.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "stllab/dataset.hpp"
#include "stllab/divergence.hpp"
#include "stllab/linalg.hpp"
#include "stllab/rng.hpp"

namespace stllab {

struct TrueGmm {
    Vec mu;         // unit vector
    double sigma2;  // isotropic noise variance

    TrueGmm(Vec mu_, double sigma2_) : mu(std::move(mu_)), sigma2(sigma2_) {
        if (!(sigma2 > 0.0)) throw std::invalid_argument("TrueGmm: sigma2 must be > 0");
        if (std::abs(norm2(mu) - 1.0) > 1e-12)
            throw std::invalid_argument("TrueGmm: mu must be a unit vector");
    }

    std::size_t dim() const { return mu.size(); }
};

struct GmmParams {
    Vec mu_plus;
    Vec mu_minus;
    Vec sigma2;  // shared diagonal variances, per coordinate

    std::size_t dim() const { return mu_plus.size(); }
};

inline Dataset sample_true(const TrueGmm& model, std::size_t m, RngStream& rng) {
    if (m < 1) throw std::invalid_argument("sample_true: m must be >= 1");
    Dataset out(model.dim());
    const double sd = std::sqrt(model.sigma2);
    for (std::size_t i = 0; i < m; ++i) {
        const double y = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        Vec x(model.dim());
        for (std::size_t k = 0; k < model.dim(); ++k) x[k] = y * model.mu[k] + sd * rng.gaussian();
        out.add_scalar(std::move(x), y, kRealOrigin);
    }
    return out;
}

// mu_hat_y = class means; sigma_hat_k^2 = sum_y (n_y/n) * (per-class Bessel
// variance in coordinate k).  Requires at least two points per class.
inline GmmParams fit_gmm(const Dataset& data) {
    const std::size_t d = data.dim();
    std::size_t n_plus = 0, n_minus = 0;
    Vec mp(d, 0.0), mm(d, 0.0);
    for (const auto& p : data) {
        if (p.label() > 0) {
            ++n_plus;
            for (std::size_t k = 0; k < d; ++k) mp[k] += p.x[k];
        } else {
            ++n_minus;
            for (std::size_t k = 0; k < d; ++k) mm[k] += p.x[k];
        }
    }
    if (n_plus < 2 || n_minus < 2) throw std::runtime_error("fit_gmm: degenerate class");
    for (std::size_t k = 0; k < d; ++k) {
        mp[k] /= static_cast<double>(n_plus);
        mm[k] /= static_cast<double>(n_minus);
    }
    Vec ssq_plus(d, 0.0), ssq_minus(d, 0.0);
    for (const auto& p : data) {
        const Vec& mu = p.label() > 0 ? mp : mm;
        Vec& ssq = p.label() > 0 ? ssq_plus : ssq_minus;
        for (std::size_t k = 0; k < d; ++k) {
            const double dlt = p.x[k] - mu[k];
            ssq[k] += dlt * dlt;
        }
    }
    const double n = static_cast<double>(data.size());
    Vec s2(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        s2[k] = (static_cast<double>(n_plus) / n) * ssq_plus[k] / static_cast<double>(n_plus - 1) +
                (static_cast<double>(n_minus) / n) * ssq_minus[k] / static_cast<double>(n_minus - 1);
    }
    return GmmParams{std::move(mp), std::move(mm), std::move(s2)};
}

// y uniform on {-1,+1} (exact Bernoulli(1/2) draws unless stratified), then
// x | y ~ N(mu_hat_y, diag(sigma_hat^2)).  Zero variances are legal and give
// point masses at the class means.
inline Dataset sample_gmm(const GmmParams& params, std::size_t m, RngStream& rng, int origin,
                          bool stratified = false) {
    if (m < 1) throw std::invalid_argument("sample_gmm: m must be >= 1");
    Dataset out(params.dim());
    Vec sd(params.dim());
    for (std::size_t k = 0; k < params.dim(); ++k) {
        if (params.sigma2[k] < 0.0) throw std::invalid_argument("sample_gmm: negative variance");
        sd[k] = std::sqrt(params.sigma2[k]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        double y;
        if (stratified)
            y = (i % 2 == 0) ? 1.0 : -1.0;
        else
            y = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        const Vec& mu = y > 0 ? params.mu_plus : params.mu_minus;
        Vec x(params.dim());
        for (std::size_t k = 0; k < params.dim(); ++k) x[k] = mu[k] + sd[k] * rng.gaussian();
        out.add_scalar(std::move(x), y, origin);
    }
    return out;
}

// theta_hat = (1/m) sum y_i x_i
inline Vec fit_linear_classifier(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("fit_linear_classifier: empty dataset");
    Vec theta(data.dim(), 0.0);
    for (const auto& p : data) {
        const double y = p.label();
        for (std::size_t k = 0; k < data.dim(); ++k) theta[k] += y * p.x[k];
    }
    for (auto& v : theta) v /= static_cast<double>(data.size());
    return theta;
}

// l(theta, (x,y)) = (1/(2 sigma^2)) ||x - y theta||^2 with sigma^2 taken from
// the data-generating model.
inline double gmm_loss(const Vec& theta, const Vec& x, double y, double sigma2_true) {
    if (!(sigma2_true > 0.0)) throw std::invalid_argument("gmm_loss: sigma2 must be > 0");
    double s = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double d = x[k] - y * theta[k];
        s += d * d;
    }
    return s / (2.0 * sigma2_true);
}

inline double empirical_risk(const Vec& theta, const Dataset& data, double sigma2_true) {
    if (data.empty()) throw std::invalid_argument("empirical_risk: empty dataset");
    double s = 0.0;
    for (const auto& p : data) s += gmm_loss(theta, p.x, p.label(), sigma2_true);
    return s / static_cast<double>(data.size());
}

// Closed form under x | y ~ N(y mu, sigma^2 I):
//   R(theta) = (||mu - theta||^2 + d sigma^2) / (2 sigma^2).
inline double population_risk_gmm(const Vec& theta, const TrueGmm& model) {
    const double dd = static_cast<double>(model.dim());
    const double md = dot(sub(model.mu, theta), sub(model.mu, theta));
    return (md + dd * model.sigma2) / (2.0 * model.sigma2);
}

// Risk of theta under a fitted mixture (uniform labels, diagonal Gaussians),
// normalised by the true sigma^2.  Used as the closed-form shift proxy.
inline double population_risk_under_fitted(const Vec& theta, const GmmParams& params,
                                           double sigma2_true) {
    double a = 0.0, b = 0.0, vs = 0.0;
    for (std::size_t k = 0; k < params.dim(); ++k) {
        const double dp = params.mu_plus[k] - theta[k];
        const double dm = params.mu_minus[k] + theta[k];
        a += dp * dp;
        b += dm * dm;
        vs += params.sigma2[k];
    }
    return (0.5 * a + 0.5 * b + vs) / (2.0 * sigma2_true);
}

// Joint KL between two fitted mixtures.  Exact because the label marginal is
// uniform in both:
//   KL = 1/2 KL(N(mu+_p, S_p) || N(mu+_q, S_q)) + 1/2 KL(N(mu-_p, S_p) || N(mu-_q, S_q)).
inline double joint_kl_gmm(const GmmParams& p, const GmmParams& q) {
    if (p.dim() != q.dim()) throw std::invalid_argument("joint_kl_gmm: dimension mismatch");
    for (double v : q.sigma2)
        if (!(v > 0.0)) throw std::runtime_error("joint_kl_gmm: singular reference");
    for (double v : p.sigma2)
        if (!(v > 0.0)) throw std::runtime_error("joint_kl_gmm: singular reference");
    const DiagGaussian pp(p.mu_plus, p.sigma2), pm(p.mu_minus, p.sigma2);
    const DiagGaussian qp(q.mu_plus, q.sigma2), qm(q.mu_minus, q.sigma2);
    return 0.5 * kl_diag_gauss(pp, qp) + 0.5 * kl_diag_gauss(pm, qm);
}

// Generator adapter for the STL loop: refits the mixture each generation and
// clamps fitted variances to `variance_floor` before sampling, counting the
// clamping events.
struct GmmGenerator {
    using Params = GmmParams;

    double variance_floor = 1e-12;
    bool stratified = false;
    mutable std::size_t clamp_events = 0;

    Params fit(const Dataset& data) const {
        GmmParams p = fit_gmm(data);
        for (auto& v : p.sigma2) {
            if (v < variance_floor) {
                v = variance_floor;
                ++clamp_events;
            }
        }
        return p;
    }

    Dataset sample(const Params& params, std::size_t m, RngStream& rng, int origin) const {
        return sample_gmm(params, m, rng, origin, stratified);
    }
};

}  // namespace stllab
