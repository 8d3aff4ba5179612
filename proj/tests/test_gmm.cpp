#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stllab/gmm.hpp"

using namespace stllab;
using Catch::Approx;

namespace {

// Naive two-pass reference estimator, independent of fit_gmm.
GmmParams ref_fit(const Dataset& data) {
    const std::size_t d = data.dim();
    Vec mp(d, 0), mm(d, 0);
    double np = 0, nm = 0;
    for (const auto& p : data) {
        if (p.label() > 0) {
            np += 1;
            for (std::size_t k = 0; k < d; ++k) mp[k] += p.x[k];
        } else {
            nm += 1;
            for (std::size_t k = 0; k < d; ++k) mm[k] += p.x[k];
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        mp[k] /= np;
        mm[k] /= nm;
    }
    Vec s2(d, 0);
    for (std::size_t k = 0; k < d; ++k) {
        double vp = 0, vm = 0;
        for (const auto& p : data) {
            if (p.label() > 0)
                vp += (p.x[k] - mp[k]) * (p.x[k] - mp[k]);
            else
                vm += (p.x[k] - mm[k]) * (p.x[k] - mm[k]);
        }
        s2[k] = (np / (np + nm)) * vp / (np - 1) + (nm / (np + nm)) * vm / (nm - 1);
    }
    return GmmParams{mp, mm, s2};
}

TrueGmm true2d() { return TrueGmm(Vec{1.0, 0.0}, 1.0); }

}  // namespace

TEST_CASE("fit_gmm hand example") {
    Dataset d(2);
    d.add_scalar(Vec{1, 0}, 1, 0);
    d.add_scalar(Vec{3, 0}, 1, 0);
    d.add_scalar(Vec{-1, 0}, -1, 0);
    d.add_scalar(Vec{-3, 0}, -1, 0);
    const auto p = fit_gmm(d);
    CHECK(p.mu_plus[0] == Approx(2.0));
    CHECK(p.mu_plus[1] == Approx(0.0));
    CHECK(p.mu_minus[0] == Approx(-2.0));
    CHECK(p.sigma2[0] == Approx(2.0));
    CHECK(p.sigma2[1] == Approx(0.0).margin(1e-15));
}

TEST_CASE("fit_gmm degenerate class and identical points") {
    Dataset d(1);
    d.add_scalar(Vec{1.0}, 1, 0);
    d.add_scalar(Vec{2.0}, 1, 0);
    d.add_scalar(Vec{-1.0}, -1, 0);
    CHECK_THROWS_WITH(fit_gmm(d), Catch::Matchers::ContainsSubstring("degenerate class"));

    Dataset same(1);
    for (int i = 0; i < 3; ++i) same.add_scalar(Vec{5.0}, 1, 0);
    for (int i = 0; i < 3; ++i) same.add_scalar(Vec{-5.0}, -1, 0);
    CHECK(fit_gmm(same).sigma2[0] == 0.0);
}

TEST_CASE("fit_gmm matches naive reference on random datasets") {
    RngStream rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        Dataset d(3);
        const std::size_t n = 8 + rng.uniform_below(40);
        std::size_t np = 0, nm = 0;
        for (std::size_t i = 0; i < n || np < 2 || nm < 2; ++i) {
            const double y = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            (y > 0 ? np : nm) += 1;
            d.add_scalar(rng.gaussian_vec(3), y, 0);
        }
        const auto a = fit_gmm(d);
        const auto b = ref_fit(d);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(a.mu_plus[k] == Approx(b.mu_plus[k]).margin(1e-12));
            CHECK(a.mu_minus[k] == Approx(b.mu_minus[k]).margin(1e-12));
            CHECK(a.sigma2[k] == Approx(b.sigma2[k]).margin(1e-12));
        }
    }
}

TEST_CASE("sample_true degenerate noise and label balance") {
    RngStream rng(5);
    const TrueGmm tiny(Vec{1.0, 0.0}, 1e-18);
    const auto d = sample_true(tiny, 200, rng);
    for (const auto& p : d) {
        CHECK(std::abs(p.x[0] - p.label() * 1.0) < 1e-6);
        CHECK(std::abs(p.x[1]) < 1e-6);
    }
    double mean_y = 0.0;
    RngStream rng2(6);
    const auto big = sample_true(true2d(), 1000000, rng2);
    for (const auto& p : big) mean_y += p.label();
    mean_y /= static_cast<double>(big.size());
    CHECK(std::abs(mean_y) <= 0.01);
}

TEST_CASE("sample_true per-class covariance is sigma^2 I") {
    RngStream rng(7);
    const auto d = sample_true(true2d(), 100000, rng);
    double n = 0;
    Vec mean(2, 0.0);
    for (const auto& p : d)
        if (p.label() > 0) {
            n += 1;
            for (int k = 0; k < 2; ++k) mean[k] += p.x[k];
        }
    for (auto& v : mean) v /= n;
    double c00 = 0, c11 = 0, c01 = 0;
    for (const auto& p : d)
        if (p.label() > 0) {
            c00 += (p.x[0] - mean[0]) * (p.x[0] - mean[0]);
            c11 += (p.x[1] - mean[1]) * (p.x[1] - mean[1]);
            c01 += (p.x[0] - mean[0]) * (p.x[1] - mean[1]);
        }
    CHECK(c00 / n == Approx(1.0).epsilon(0.05));
    CHECK(c11 / n == Approx(1.0).epsilon(0.05));
    CHECK(std::abs(c01 / n) < 0.05);
}

TEST_CASE("sample_gmm point mass at zero variance and fit/sample round trip") {
    const GmmParams pm{Vec{2, 1}, Vec{-2, -1}, Vec{0, 0}};
    RngStream rng(8);
    const auto d = sample_gmm(pm, 100, rng, 1);
    for (const auto& p : d) {
        const Vec& mu = p.label() > 0 ? pm.mu_plus : pm.mu_minus;
        CHECK(p.x[0] == mu[0]);
        CHECK(p.x[1] == mu[1]);
        CHECK(p.origin == 1);
    }

    const GmmParams gp{Vec{1.0, 0.5}, Vec{-1.0, -0.5}, Vec{1.5, 0.7}};
    RngStream rng2(9);
    const auto big = sample_gmm(gp, 1000000, rng2, 1);
    const auto refit = fit_gmm(big);
    for (int k = 0; k < 2; ++k) {
        CHECK(refit.mu_plus[k] == Approx(gp.mu_plus[k]).margin(0.02 * (1 + std::abs(gp.mu_plus[k]))));
        CHECK(refit.sigma2[k] == Approx(gp.sigma2[k]).epsilon(0.02));
    }
}

TEST_CASE("linear classifier") {
    Dataset a(2);
    a.add_scalar(Vec{1, 0}, 1, 0);
    a.add_scalar(Vec{-1, 0}, -1, 0);
    CHECK(fit_linear_classifier(a) == Vec{1, 0});

    Dataset b(2);
    b.add_scalar(Vec{2, 0}, 1, 0);
    b.add_scalar(Vec{0, 2}, -1, 0);
    CHECK(fit_linear_classifier(b) == Vec{1, -1});

    Dataset c(2);
    c.add_scalar(Vec{0, 0}, 1, 0);
    CHECK(fit_linear_classifier(c) == Vec{0, 0});

    CHECK_THROWS_AS(fit_linear_classifier(Dataset(2)), std::invalid_argument);
}

TEST_CASE("gmm_loss") {
    const Vec theta{1.0, 1.0};
    CHECK(gmm_loss(theta, Vec{1, 1}, 1.0, 1.0) == 0.0);
    CHECK(gmm_loss(Vec{0, 0}, Vec{1, 1}, 1.0, 1.0) == Approx(1.0));
    RngStream rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec th = rng.gaussian_vec(3);
        const Vec x = rng.gaussian_vec(3);
        CHECK(gmm_loss(th, x, 1.0, 0.7) == Approx(gmm_loss(th, Vec{-x[0], -x[1], -x[2]}, -1.0, 0.7)));
    }
}

TEST_CASE("population risk closed form vs Monte Carlo") {
    const auto model = true2d();
    CHECK(population_risk_gmm(model.mu, model) == Approx(1.0));  // d/2 with d=2
    CHECK(population_risk_gmm(Vec{0, 0}, model) == Approx((1.0 + 2.0 * model.sigma2) / (2.0 * model.sigma2)));

    const Vec theta{0.4, -0.3};
    RngStream rng(13);
    double acc = 0.0;
    const int m = 2000000;
    const auto sample = sample_true(model, m, rng);
    for (const auto& p : sample) acc += gmm_loss(theta, p.x, p.label(), model.sigma2);
    acc /= m;
    CHECK(population_risk_gmm(theta, model) == Approx(acc).epsilon(0.005));

    // risk is minimised at theta = mu over a coarse grid
    const double at_mu = population_risk_gmm(model.mu, model);
    for (double dx : {-0.5, -0.1, 0.1, 0.5})
        for (double dy : {-0.5, 0.0, 0.5}) {
            if (dx == 0.0 && dy == 0.0) continue;
            CHECK(population_risk_gmm(Vec{1.0 + dx, dy}, model) >= at_mu);
        }
}

TEST_CASE("empirical risk") {
    const Vec theta{2.0, 0.0};
    Dataset d(2);
    d.add_scalar(Vec{2, 0}, 1, 0);
    d.add_scalar(Vec{-2, 0}, -1, 0);
    CHECK(empirical_risk(theta, d, 1.0) == 0.0);

    Dataset one(2);
    one.add_scalar(Vec{0.5, 0.5}, 1, 0);
    CHECK(empirical_risk(theta, one, 1.0) == Approx(gmm_loss(theta, Vec{0.5, 0.5}, 1.0, 1.0)));

    // law of large numbers against the closed form
    RngStream rng(17);
    const auto model = true2d();
    const auto big = sample_true(model, 100000, rng);
    const double emp = empirical_risk(theta, big, model.sigma2);
    const double pop = population_risk_gmm(theta, model);
    CHECK(std::abs(emp - pop) < 0.1);
}

TEST_CASE("joint KL of fitted mixtures") {
    const GmmParams p{Vec{0.0}, Vec{-0.0}, Vec{1.0}};
    const GmmParams q{Vec{1.0}, Vec{-1.0}, Vec{1.0}};
    CHECK(joint_kl_gmm(p, p) == 0.0);
    CHECK(joint_kl_gmm(p, q) == Approx(0.5));
    const GmmParams r{Vec{0.5}, Vec{-1.5}, Vec{2.0}};
    CHECK(joint_kl_gmm(q, r) != Approx(joint_kl_gmm(r, q)).epsilon(1e-6));
    const GmmParams sing{Vec{0.0}, Vec{0.0}, Vec{0.0}};
    CHECK_THROWS_WITH(joint_kl_gmm(p, sing), Catch::Matchers::ContainsSubstring("singular reference"));
}

TEST_CASE("mean estimator is unbiased across resamples") {
    const auto model = true2d();
    RngStream rng(19);
    const int reps = 2000, n = 60;
    double acc0 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Dataset d = sample_true(model, n, rng);
        // regenerate until both classes have two points (rare at n=60)
        while (true) {
            std::size_t np = 0;
            for (const auto& p : d)
                if (p.label() > 0) ++np;
            if (np >= 2 && d.size() - np >= 2) break;
            d = sample_true(model, n, rng);
        }
        acc0 += fit_gmm(d).mu_plus[0];
    }
    acc0 /= reps;
    // standard error of the mean-of-means is about sigma/sqrt(reps * n/2)
    CHECK(acc0 == Approx(1.0).margin(3.0 / std::sqrt(reps * n / 2.0)));
}

TEST_CASE("fit/sample consistency: joint KL of truth vs fit on 1e6 samples") {
    const auto model = true2d();
    const GmmParams truth{model.mu, Vec{-model.mu[0], -model.mu[1]},
                          Vec{model.sigma2, model.sigma2}};
    RngStream rng(23);
    const auto sample = sample_true(model, 1000000, rng);
    const auto fitted = fit_gmm(sample);
    CHECK(joint_kl_gmm(truth, fitted) <= 10.0 * 2.0 / 1e6);
}

TEST_CASE("GmmGenerator clamps variances and counts events") {
    GmmGenerator gen;
    Dataset same(1);
    for (int i = 0; i < 4; ++i) same.add_scalar(Vec{1.0}, 1, 0);
    for (int i = 0; i < 4; ++i) same.add_scalar(Vec{-1.0}, -1, 0);
    const auto p = gen.fit(same);
    CHECK(p.sigma2[0] == 1e-12);
    CHECK(gen.clamp_events == 1);
}
