// Acceptance suite: the eleven checks that gate the lab.  Each criterion
// prints one pass/fail line with its headline numbers and wall time.  All
// thresholds are fixed here, in code.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stllab/bounds.hpp"
#include "stllab/config.hpp"
#include "stllab/csv.hpp"
#include "stllab/divergence.hpp"
#include "stllab/experiments.hpp"
#include "stllab/gmm.hpp"
#include "stllab/rng.hpp"
#include "stllab/sgd.hpp"
#include "stllab/transformer.hpp"

namespace stllab {
namespace acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline ExperimentConfig make_cfg(const std::string& experiment, std::uint64_t seed,
                                 const std::map<std::string, std::string>& params) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.seed = seed;
    for (const auto& [k, v] : params) cfg.params[k] = v;
    return resolve_config(std::move(cfg));
}

inline std::map<long long, double> mean_by_generation(const std::vector<ResultRow>& rows,
                                                      const std::string& metric) {
    std::map<long long, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows)
        if (r.metric == metric) {
            acc[r.generation].first += r.value;
            acc[r.generation].second += 1;
        }
    std::map<long long, double> out;
    for (const auto& [g, a] : acc) out[g] = a.first / static_cast<double>(a.second);
    return out;
}

inline std::map<long long, double> median_by_generation(const std::vector<ResultRow>& rows,
                                                        const std::string& metric) {
    std::map<long long, std::vector<double>> acc;
    for (const auto& r : rows)
        if (r.metric == metric) acc[r.generation].push_back(r.value);
    std::map<long long, double> out;
    for (auto& [g, v] : acc) out[g] = group_stats(v).median;
    return out;
}

}  // namespace detail

// 1. Softmax lemma: ||softmax(z)||_inf <= e^{2c}/n and the l1 perturbation
//    inequality, zero violations over 1e4 trials per (c, n) cell.
inline CriterionResult criterion_softmax_lemma() {
    CriterionResult res{1, "softmax lemma suite"};
    std::size_t violations = 0, trials_total = 0;
    RngStream rng(101);
    for (double c : {0.5, 1.0, 2.0}) {
        for (std::size_t n : {2ULL, 8ULL, 64ULL}) {
            const double cap_inf = std::exp(2.0 * c) / static_cast<double>(n);
            for (int t = 0; t < 10000; ++t) {
                Vec z(n), z2(n);
                for (std::size_t k = 0; k < n; ++k) {
                    z[k] = rng.uniform(-c, c);
                    z2[k] = rng.uniform(-c, c);
                }
                const Vec s = softmax(z), s2 = softmax(z2);
                double inf_norm = 0, l1_diff = 0, eps_l1 = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    inf_norm = std::max(inf_norm, s[k]);
                    l1_diff += std::abs(s[k] - s2[k]);
                    eps_l1 += std::abs(z2[k] - z[k]);
                }
                if (inf_norm > cap_inf + 1e-12) ++violations;
                if (l1_diff > cap_inf * eps_l1 + 1e-12) ++violations;
                ++trials_total;
            }
        }
    }
    res.pass = violations == 0;
    std::ostringstream os;
    os << violations << " violations over " << trials_total << " trials";
    res.detail = os.str();
    return res;
}

struct TfGridOutcome {
    std::size_t violations = 0;
    std::size_t cells = 0;
    double worst_ratio = 0.0;
    std::size_t scaling_failures = 0;
    std::size_t scaling_comparisons = 0;
};

// Shared grid for criteria 2 and 3.  Weights and trial seeds are drawn per
// (L, B_W, alpha, i) group and shared across n, so the n-scaling comparison
// is paired: same transformer, same task stream, different context size.
inline TfGridOutcome run_tf_grid() {
    TfGridOutcome out;
    const std::size_t d = 5, trials = 50;
    // medians keyed by (L, B_W, alpha, i) -> n -> median
    std::map<std::string, std::map<std::size_t, double>> medians;
    std::vector<experiments::TfCell> cells;
    std::vector<std::size_t> groups;
    {
        std::size_t g = 0;
        for (int L : {1, 2})
            for (double bw : {0.25, 0.5})
                for (double alpha : {0.0, 0.25, 0.5})
                    for (int i : {1, 2, 3}) {
                        for (std::size_t n : {8ULL, 16ULL, 32ULL}) {
                            cells.push_back(experiments::TfCell{n, L, bw, alpha, i});
                            groups.push_back(g);
                        }
                        ++g;
                    }
    }

    auto slots = for_each_cell(cells.size(), [&](std::size_t ci) {
        const auto& cell = cells[ci];
        const std::uint64_t master = derive_seed(2024, groups[ci], Purpose::Task);
        RngStream wrng(derive_seed(2024, groups[ci], Purpose::Weights));
        const TransformerWeights weights = experiments::nondegenerate_weights(cell.L, d, cell.b_w, wrng, cell.alpha, cell.gens);
        const auto rep = experiments::tf_cell_stability(cell, d, trials, master, &weights);
        const double bound = transformer_stability_bound(static_cast<double>(cell.n), cell.L,
                                                         cell.b_w, cell.alpha, cell.gens,
                                                         TfBoundForm::Full);
        std::vector<ResultRow> rows;  // smuggle outcome through rows
        std::size_t viol = 0;
        double worst = 0.0;
        for (double v : rep.trial_values) {
            if (v > bound) ++viol;
            worst = std::max(worst, v / bound);
        }
        std::vector<double> vals = rep.trial_values;
        rows.push_back({"", 0, 0, 0, 0, 0, "viol", static_cast<double>(viol)});
        rows.push_back({"", 0, 0, 0, 0, 0, "worst", worst});
        rows.push_back({"", 0, 0, 0, 0, 0, "median", group_stats(vals).median});
        return rows;
    });
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const auto& cell = cells[ci];
        out.cells += 1;
        out.violations += static_cast<std::size_t>(slots[ci][0].value);
        out.worst_ratio = std::max(out.worst_ratio, slots[ci][1].value);
        std::ostringstream key;
        key << cell.L << "/" << cell.b_w << "/" << cell.alpha << "/" << cell.gens;
        medians[key.str()][cell.n] = slots[ci][2].value;
    }
    for (const auto& [key, by_n] : medians) {
        out.scaling_comparisons += 1;
        if (!(by_n.at(32) < by_n.at(8))) out.scaling_failures += 1;
    }
    return out;
}

// 2. Transformer bound domination on the full grid, zero violations.
inline CriterionResult criterion_tf_bound_domination(const TfGridOutcome& grid) {
    CriterionResult res{2, "transformer bound domination"};
    res.pass = grid.violations == 0;
    std::ostringstream os;
    os << grid.violations << " violations over " << grid.cells << " cells x 50 trials"
       << ", worst emp/bound ratio " << std::fixed << std::setprecision(4) << grid.worst_ratio;
    res.detail = os.str();
    return res;
}

// 3. Stability scaling in n: median at n=32 strictly below median at n=8 in
//    every (L, B_W, alpha, i) cell.
inline CriterionResult criterion_tf_scaling(const TfGridOutcome& grid) {
    CriterionResult res{3, "transformer stability n-scaling"};
    res.pass = grid.scaling_failures == 0;
    std::ostringstream os;
    os << grid.scaling_failures << " of " << grid.scaling_comparisons
       << " cells fail median(n=32) < median(n=8)";
    res.detail = os.str();
    return res;
}

// 4. GMM collapse vs containment: alpha=0 drift grows linearly (positive
//    slope, R^2 >= 0.8 on the mean curve); alpha=0.5 median drift at i=10 is
//    at most twice the median at i=1.
inline CriterionResult criterion_gmm_collapse_containment() {
    CriterionResult res{4, "gmm collapse vs containment"};
    const std::map<std::string, std::string> base = {
        {"n", "500"}, {"d", "2"}, {"generations", "10"}, {"seeds", "200"}};
    auto cfg0 = detail::make_cfg("gmm-stl", 77, base);
    cfg0.params["alpha"] = "0";
    auto cfg5 = detail::make_cfg("gmm-stl", 77, base);
    cfg5.params["alpha"] = "0.5";

    const auto rows0 = run_experiment(cfg0);
    const auto mean0 = detail::mean_by_generation(rows0, "joint_kl_to_gen0");
    std::vector<double> xs, ys;
    for (long long i = 1; i <= 10; ++i) {
        xs.push_back(static_cast<double>(i));
        ys.push_back(mean0.at(i));
    }
    const auto fit = least_squares(xs, ys);
    const double rho = spearman_rho(xs, ys);  // mean drift increasing in i

    const auto rows5 = run_experiment(cfg5);
    const auto med5 = detail::median_by_generation(rows5, "joint_kl_to_gen0");
    const double containment = med5.at(10) / med5.at(1);

    res.pass = fit.slope > 0.0 && fit.r2 >= 0.8 && rho > 0.9 && containment <= 2.0;
    std::ostringstream os;
    os << "alpha=0 slope " << format_g17(fit.slope) << " (>0), R2 " << std::setprecision(4)
       << fit.r2 << " (>=0.8), spearman " << rho << " (>0.9); alpha=0.5 median drift ratio i10/i1 "
       << containment << " (<=2)";
    res.detail = os.str();
    return res;
}

// 5. Gaussian collapse monotonicity: mean W2 to the true model increasing in
//    i over 20 generations (Spearman rho > 0.9).
inline CriterionResult criterion_gauss_collapse() {
    CriterionResult res{5, "gaussian collapse monotonicity"};
    const auto cfg = detail::make_cfg(
        "gauss-collapse", 31, {{"n", "100"}, {"generations", "20"}, {"seeds", "500"}});
    const auto rows = run_experiment(cfg);
    const auto mean = detail::mean_by_generation(rows, "w2_to_true");
    std::vector<double> xs, ys;
    for (long long i = 1; i <= 20; ++i) {
        xs.push_back(static_cast<double>(i));
        ys.push_back(mean.at(i));
    }
    const double rho = spearman_rho(xs, ys);
    res.pass = rho > 0.9;
    std::ostringstream os;
    os << "spearman rho " << std::setprecision(4) << rho << " (>0.9), mean W2 at i=1 "
       << format_g17(mean.at(1)) << ", at i=20 " << format_g17(mean.at(20));
    res.detail = os.str();
    return res;
}

// 6. GMM generalization-gap rate: log-log slope of the mean |R_pop - R_emp|
//    against n within [-0.65, -0.35] at alpha=0.5, i=3.
inline CriterionResult criterion_gmm_gap_rate() {
    CriterionResult res{6, "gmm generalization-gap rate"};
    std::vector<double> xs, ys;
    for (long long n : {250, 500, 1000, 2000, 4000}) {
        auto cfg = detail::make_cfg("gmm-stl", 55,
                                    {{"n", std::to_string(n)},
                                     {"d", "2"},
                                     {"alpha", "0.5"},
                                     {"generations", "3"},
                                     {"seeds", "100"}});
        const auto rows = run_experiment(cfg);
        double acc = 0;
        std::size_t cnt = 0;
        for (const auto& r : rows)
            if (r.metric == "gap" && r.generation == 3) {
                acc += r.value;
                ++cnt;
            }
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(acc / static_cast<double>(cnt)));
    }
    const auto fit = least_squares(xs, ys);
    res.pass = fit.slope >= -0.65 && fit.slope <= -0.35;
    std::ostringstream os;
    os << "log-log slope " << std::setprecision(4) << fit.slope << " in [-0.65,-0.35], R2 "
       << fit.r2;
    res.detail = os.str();
    return res;
}

// 7. SGD uniform-stability rate: beta_hat(n) * n / log n varies by at most a
//    factor 3 over n in {64,128,256,512} (beta_hat = p95 of the trial sups).
inline CriterionResult criterion_sgd_stability_rate() {
    CriterionResult res{7, "sgd uniform-stability rate"};
    const auto cfg = detail::make_cfg(
        "sgd-stability", 91,
        {{"n_list", "64,128,256,512"}, {"trials", "200"}, {"probe", "512"}});
    const auto rows = run_experiment(cfg);
    double lo = 1e300, hi = 0.0;
    std::ostringstream curve;
    for (const auto& r : rows)
        if (r.metric == "beta_hat_p95") {
            const double scaled =
                r.value * static_cast<double>(r.n) / std::log(static_cast<double>(r.n));
            lo = std::min(lo, scaled);
            hi = std::max(hi, scaled);
            curve << " n=" << r.n << ":" << std::setprecision(3) << scaled;
        }
    const double ratio = hi / lo;
    res.pass = ratio <= 3.0;
    std::ostringstream os;
    os << "max/min of p95*n/log(n) = " << std::setprecision(4) << ratio << " (<=3);" << curve.str();
    res.detail = os.str();
    return res;
}

// 8. Experiments-table trend: full-synthetic loop-6 loss at least 3x its
//    loop-1 loss, mixed loop-6 at most 1.5x its loop-1, and the full arm
//    above the mixed arm at loop 6.  100 seeds, matched noise streams.
inline CriterionResult criterion_icl_trend() {
    CriterionResult res{8, "icl mixed vs full-synthetic trend"};
    const std::map<std::string, std::string> base = {{"seeds", "100"}, {"loops", "6"}};
    auto cfg_full = detail::make_cfg("icl-stl", 13, base);
    cfg_full.params["alpha"] = "0";
    auto cfg_mixed = detail::make_cfg("icl-stl", 13, base);
    cfg_mixed.params["alpha"] = "0.5";

    const auto mean_full = detail::mean_by_generation(run_experiment(cfg_full), "eval_mse");
    const auto mean_mixed = detail::mean_by_generation(run_experiment(cfg_mixed), "eval_mse");
    const double full_ratio = mean_full.at(6) / mean_full.at(1);
    const double mixed_ratio = mean_mixed.at(6) / mean_mixed.at(1);
    const bool separated = mean_full.at(6) > mean_mixed.at(6);
    res.pass = full_ratio >= 3.0 && mixed_ratio <= 1.5 && separated;
    std::ostringstream os;
    os << "full loop6/loop1 " << std::setprecision(4) << full_ratio << " (>=3), mixed "
       << mixed_ratio << " (<=1.5), full6 " << format_g17(mean_full.at(6)) << " > mixed6 "
       << format_g17(mean_mixed.at(6));
    res.detail = os.str();
    return res;
}

// 9. Divergence oracles: KL vs test-side quadrature (1e-6 on 20 pairs),
//    tv_mc within 4 stderr of tv_gauss_1d on >=95 of 100 pairs at m=1e5,
//    Pinsker with zero violations on 1000 pairs.
inline CriterionResult criterion_divergence_oracles() {
    CriterionResult res{9, "divergence oracles"};
    RngStream rng(202);

    auto simpson = [](const std::function<double(double)>& f, double a, double b) {
        const int n = 40001;
        const double h = (b - a) / (n - 1);
        double s = f(a) + f(b);
        for (int i = 1; i < n - 1; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    auto pdf = [](double z, double m, double v) {
        return std::exp(-0.5 * (z - m) * (z - m) / v) / std::sqrt(2.0 * 3.14159265358979323846 * v);
    };

    std::size_t kl_fail = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const double mp = rng.uniform(-2, 2), mq = rng.uniform(-2, 2);
        const double vp = rng.uniform(0.3, 3), vq = rng.uniform(0.3, 3);
        auto f = [&](double z) {
            const double p = pdf(z, mp, vp);
            return p > 0 ? p * std::log(p / pdf(z, mq, vq)) : 0.0;
        };
        const double span = 14.0 * std::sqrt(std::max(vp, vq));
        const double oracle = simpson(f, std::min(mp, mq) - span, std::max(mp, mq) + span);
        const double closed = kl_diag_gauss(DiagGaussian(Vec{mp}, Vec{vp}),
                                            DiagGaussian(Vec{mq}, Vec{vq}));
        if (std::abs(oracle - closed) > 1e-6) ++kl_fail;
    }

    std::size_t tv_ok = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const DiagGaussian p(Vec{rng.uniform(-2, 2)}, Vec{rng.uniform(0.3, 3)});
        const DiagGaussian q(Vec{rng.uniform(-2, 2)}, Vec{rng.uniform(0.3, 3)});
        const double exact = tv_gauss_1d(p, q);
        const auto est = tv_mc(p, q, 100000, rng);
        if (std::abs(est.estimate - exact) <= 4.0 * std::max(est.stderr_, 1e-12)) ++tv_ok;
    }

    std::size_t pinsker_fail = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const DiagGaussian p(Vec{rng.uniform(-2, 2)}, Vec{rng.uniform(0.3, 3)});
        const DiagGaussian q(Vec{rng.uniform(-2, 2)}, Vec{rng.uniform(0.3, 3)});
        if (tv_gauss_1d(p, q) > pinsker_tv_upper(kl_diag_gauss(p, q)) + 1e-9) ++pinsker_fail;
    }

    res.pass = kl_fail == 0 && tv_ok >= 95 && pinsker_fail == 0;
    std::ostringstream os;
    os << "kl mismatches " << kl_fail << "/20, tv_mc within 4se " << tv_ok
       << "/100 (>=95), pinsker violations " << pinsker_fail << "/1000";
    res.detail = os.str();
    return res;
}

// 10. Bound-evaluator algebra: drift continuity at alpha=0, the asymptotic
//     alpha threshold, thm4 finiteness at i=20, and lambda*(n) nonincreasing.
inline CriterionResult criterion_bound_algebra() {
    CriterionResult res{10, "bound-evaluator algebra"};
    bool ok = true;
    std::ostringstream os;

    for (int i = 1; i <= 20 && ok; ++i)
        if (std::abs(drift_factor(1e-9, i) - i) > 1e-6 * i) {
            ok = false;
            os << "drift continuity failed at i=" << i << "; ";
        }
    for (double bw : {0.25, 0.5, 1.0})
        for (int L : {1, 2, 3}) {
            const double limit = 1.0 - std::pow(b_tilde(bw), -static_cast<double>(L));
            if (std::abs(alpha_threshold(bw, L, 0, true) - limit) > 1e-12) {
                ok = false;
                os << "alpha threshold asymptote failed; ";
            }
        }
    {
        BoundInputs in;
        in.n = 64;
        in.i = 20;
        in.lambda = 1.0;
        in.delta = 0.1;
        in.M = 1.0;
        in.rho = 1.0;
        in.B_W = 1.0;
        in.L = 2;
        const auto r = thm4_rhs(in);
        if (!std::isfinite(r.total) || !(r.total > 0)) {
            ok = false;
            os << "thm4 not finite at i=20; ";
        }
    }
    {
        double prev = 1e300;
        std::ostringstream lam;
        for (double n : {1e2, 1e3, 1e4}) {
            const auto r = solve_lambda_star(n, 5, 1.0, 1.0, 0.5, 2, 0.1);
            if (r.status != LambdaStarResult::Status::Crossing || r.lambda > prev * (1 + 1e-9)) {
                ok = false;
                os << "lambda*(n) not nonincreasing; ";
                break;
            }
            lam << " n=" << n << ":" << format_g17(r.lambda);
            prev = r.lambda;
        }
        os << "lambda*" << lam.str();
    }
    res.pass = ok;
    res.detail = os.str();
    return res;
}

// 11. Reproducibility: repeated runs with the same (config, seed) produce
//     byte-identical CSV.
inline CriterionResult criterion_reproducibility() {
    CriterionResult res{11, "byte-identical reruns"};
    bool ok = true;
    for (const auto& [exp, params] :
         std::vector<std::pair<std::string, std::map<std::string, std::string>>>{
             {"gmm-stl", {{"n", "120"}, {"generations", "4"}, {"seeds", "3"}}},
             {"icl-stl", {{"seeds", "2"}, {"tasks", "4"}}},
             {"tf-stability",
              {{"n_list", "8"}, {"l_list", "1"}, {"bw_list", "0.5"}, {"alpha_list", "0.5"},
               {"gen_list", "2"}, {"trials", "5"}}},
             {"lambda-star", {}}}) {
        const auto cfg = detail::make_cfg(exp, 5, params);
        const std::string a = to_csv(run_experiment(cfg));
        const std::string b = to_csv(run_experiment(cfg));
        if (a != b || a.empty()) ok = false;
    }
    res.pass = ok;
    res.detail = ok ? "4 experiments re-run byte-identically" : "byte mismatch between reruns";
    return res;
}

inline std::vector<CriterionResult> run_all(std::ostream& os) {
    std::vector<CriterionResult> results;
    auto timed = [&](std::function<CriterionResult()> fn) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r = fn();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        os << (r.pass ? "[PASS]" : "[FAIL]") << " criterion " << r.id << " (" << r.name << "): "
           << r.detail << "  [" << std::fixed << std::setprecision(1) << r.seconds << "s]\n"
           << std::defaultfloat;
        os.flush();
        results.push_back(r);
    };
    timed(criterion_softmax_lemma);
    {
        const auto t0 = std::chrono::steady_clock::now();
        const TfGridOutcome grid = run_tf_grid();
        const double grid_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto c2 = criterion_tf_bound_domination(grid);
        c2.seconds = grid_s;
        os << (c2.pass ? "[PASS]" : "[FAIL]") << " criterion 2 (" << c2.name << "): " << c2.detail
           << "  [" << std::fixed << std::setprecision(1) << c2.seconds << "s]\n"
           << std::defaultfloat;
        results.push_back(c2);
        auto c3 = criterion_tf_scaling(grid);
        os << (c3.pass ? "[PASS]" : "[FAIL]") << " criterion 3 (" << c3.name << "): " << c3.detail
           << "  [shared grid]\n";
        results.push_back(c3);
        os.flush();
    }
    timed(criterion_gmm_collapse_containment);
    timed(criterion_gauss_collapse);
    timed(criterion_gmm_gap_rate);
    timed(criterion_sgd_stability_rate);
    timed(criterion_icl_trend);
    timed(criterion_divergence_oracles);
    timed(criterion_bound_algebra);
    timed(criterion_reproducibility);
    return results;
}

inline int run_main(std::ostream& os) {
    const auto results = run_all(os);
    std::size_t failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    os << (failed == 0 ? "ACCEPTANCE: all criteria passed"
                       : "ACCEPTANCE: " + std::to_string(failed) + " criteria FAILED")
       << " (" << results.size() << " total)\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace acceptance
}  // namespace stllab
