// Projected SGD with the 1/(kappa t) schedule, the logistic loss, and
// empirical estimators for uniform stability and recursive stability.
//
// Both estimators couple their paired runs through shared derived streams:
// the index path, probe draws and replacement draws are identical for the
// original and the perturbed dataset, so with a zero replacement the
// estimate is exactly zero.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "stllab/dataset.hpp"
#include "stllab/linalg.hpp"
#include "stllab/rng.hpp"

namespace stllab {

struct SgdConfig {
    double kappa = 1.0;   // smoothness constant; step eta_t = c_eta / (kappa t)
    std::size_t T = 0;    // iteration count (callers usually set T = 4n)
    double c_eta = 1.0;
    double radius = 10.0; // euclidean projection radius for the iterates
    Vec init;             // empty means the zero vector
};

// Loss interface: value and gradient in w at a data point.
struct PointLoss {
    std::function<double(const Vec& w, const LabeledPoint& z)> value;
    std::function<Vec(const Vec& w, const LabeledPoint& z)> grad;
};

// Binary logistic loss with y in {0,1}:
//   value = log(1 + exp(s)) - y s,  s = w.x   (stable branch)
//   grad  = (sigmoid(s) - y) x
inline double logistic_value(const Vec& w, const Vec& x, double y) {
    const double s = dot(w, x);
    // log(1+e^s) = max(s,0) + log1p(e^{-|s|})
    return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))) - y * s;
}

inline Vec logistic_grad(const Vec& w, const Vec& x, double y) {
    const double s = dot(w, x);
    const double sig = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    Vec g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = (sig - y) * x[k];
    return g;
}

inline PointLoss logistic_loss() {
    return PointLoss{
        [](const Vec& w, const LabeledPoint& z) { return logistic_value(w, z.x, z.label()); },
        [](const Vec& w, const LabeledPoint& z) { return logistic_grad(w, z.x, z.label()); }};
}

// w_{t+1} = Pi_R( w_t - eta_t grad l(w_t, z_{i_t}) ), i_t uniform with
// replacement, eta_t = c_eta/(kappa t).  Deterministic given the seed.
inline Vec sgd_train(const Dataset& data, const PointLoss& loss, const SgdConfig& cfg,
                     std::uint64_t seed) {
    if (cfg.T < 1) throw std::invalid_argument("sgd_train: T must be >= 1");
    if (!(cfg.kappa > 0.0)) throw std::invalid_argument("sgd_train: kappa must be > 0");
    if (!(cfg.radius > 0.0)) throw std::invalid_argument("sgd_train: radius must be > 0");
    if (data.empty()) throw std::invalid_argument("sgd_train: empty dataset");
    Vec w = cfg.init.empty() ? Vec(data.dim(), 0.0) : cfg.init;
    if (w.size() != data.dim()) throw std::invalid_argument("sgd_train: init dimension mismatch");
    RngStream rng = make_stream(seed, 0, Purpose::Train);
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        const auto i = static_cast<std::size_t>(rng.uniform_below(data.size()));
        const Vec g = loss.grad(w, data[i]);
        const double eta = cfg.c_eta / (cfg.kappa * static_cast<double>(t));
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] -= eta * g[k];
            if (!std::isfinite(w[k]))
                throw std::runtime_error("sgd_train: non-finite gradient step at iteration " +
                                         std::to_string(t));
        }
        const double nw = norm2(w);
        if (nw > cfg.radius)
            for (auto& v : w) v *= cfg.radius / nw;
    }
    return w;
}

struct StabilityReport {
    double estimate = 0.0;      // max over trials
    double p95 = 0.0;           // nearest-rank 95th percentile over trials
    std::size_t trials = 0;
    std::size_t n = 0;
    std::size_t probe = 0;
    double theoretical_rate = 0.0;  // 16 rho^2 log(n) / n, when rho is known
    std::vector<double> trial_values;
};

inline double nearest_rank_p95(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
    return v[std::max<std::size_t>(rank, 1) - 1];
}

inline double sgd_stability_rate(double rho, std::size_t n) {
    return 16.0 * rho * rho * std::log(static_cast<double>(n)) / static_cast<double>(n);
}

// Empirical uniform stability:  per trial draw S of size n, replace one
// uniformly chosen point with a fresh draw, train both datasets on the same
// derived seed, and take the max loss difference over a probe set (fresh
// draws plus the replaced pair).  The probe max is a lower bound on the sup
// over the whole domain, so bound-domination checks stay valid.
inline StabilityReport estimate_uniform_stability(
    const std::function<LabeledPoint(RngStream&)>& sampler,
    const std::function<Vec(const Dataset&, std::uint64_t train_seed)>& learner,
    const std::function<double(const Vec&, const LabeledPoint&)>& loss_value, std::size_t n,
    std::size_t trials, std::size_t probe, std::uint64_t seed, double rho = 0.0) {
    if (trials < 1 || probe < 1)
        throw std::invalid_argument("estimate_uniform_stability: trials and probe must be >= 1");
    StabilityReport rep;
    rep.trials = trials;
    rep.n = n;
    rep.probe = probe;
    if (rho > 0.0) rep.theoretical_rate = sgd_stability_rate(rho, n);
    rep.trial_values.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, t, Purpose::Run);
        RngStream data_rng = make_stream(trial_seed, 0, Purpose::DataInit);
        Dataset s;
        for (std::size_t i = 0; i < n; ++i) {
            LabeledPoint p = sampler(data_rng);
            s.add(std::move(p.x), std::move(p.y), p.origin);
        }
        RngStream rep_rng = make_stream(trial_seed, 0, Purpose::Replace);
        const auto pos = static_cast<std::size_t>(rep_rng.uniform_below(n));
        LabeledPoint fresh = sampler(rep_rng);
        Dataset s_prime = s;
        const LabeledPoint old = s_prime[pos];
        s_prime[pos] = fresh;

        const std::uint64_t train_seed = derive_seed(trial_seed, 0, Purpose::Train);
        const Vec w = learner(s, train_seed);
        const Vec w_prime = learner(s_prime, train_seed);

        RngStream probe_rng = make_stream(trial_seed, 0, Purpose::Probe);
        double sup = 0.0;
        for (std::size_t i = 0; i < probe; ++i) {
            const LabeledPoint z = sampler(probe_rng);
            sup = std::max(sup, std::abs(loss_value(w, z) - loss_value(w_prime, z)));
        }
        sup = std::max(sup, std::abs(loss_value(w, old) - loss_value(w_prime, old)));
        sup = std::max(sup, std::abs(loss_value(w, fresh) - loss_value(w_prime, fresh)));
        rep.trial_values.push_back(sup);
    }
    rep.estimate = *std::max_element(rep.trial_values.begin(), rep.trial_values.end());
    rep.p95 = nearest_rank_p95(rep.trial_values);
    return rep;
}

// Empirical recursive stability:  per trial draw S_0, build S_0' by one
// replacement, run both chains with the same master seed (coupled
// randomness) and measure the supplied distance at the final generation.
template <typename Out>
StabilityReport estimate_recursive_stability(
    const std::function<Dataset(RngStream&)>& s0_sampler,
    const std::function<void(Dataset&, RngStream&)>& replace_one,
    const std::function<Out(const Dataset&, std::uint64_t chain_seed)>& chain,
    const std::function<double(const Out&, const Out&)>& distance, std::size_t trials,
    std::uint64_t seed) {
    if (trials < 1)
        throw std::invalid_argument("estimate_recursive_stability: trials must be >= 1");
    StabilityReport rep;
    rep.trials = trials;
    rep.trial_values.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, t, Purpose::Run);
        RngStream data_rng = make_stream(trial_seed, 0, Purpose::DataInit);
        const Dataset s0 = s0_sampler(data_rng);
        rep.n = s0.size();
        Dataset s0_prime = s0;
        RngStream rep_rng = make_stream(trial_seed, 0, Purpose::Replace);
        replace_one(s0_prime, rep_rng);

        const std::uint64_t chain_seed = derive_seed(trial_seed, 0, Purpose::Sample);
        const Out a = chain(s0, chain_seed);
        const Out b = chain(s0_prime, chain_seed);
        rep.trial_values.push_back(distance(a, b));
    }
    rep.estimate = *std::max_element(rep.trial_values.begin(), rep.trial_values.end());
    rep.p95 = nearest_rank_p95(rep.trial_values);
    return rep;
}

}  // namespace stllab
