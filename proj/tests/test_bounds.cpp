#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stllab/bounds.hpp"

using namespace stllab;
using Catch::Approx;

TEST_CASE("b_tilde") {
    CHECK(b_tilde(0.0) == 1.0);
    CHECK(b_tilde(0.5) == Approx(5.43656365691809).margin(1e-12));
    CHECK(b_tilde(1.0) == Approx(22.16716829679195).margin(1e-12));
    CHECK_THROWS_AS(b_tilde(-0.1), std::invalid_argument);
}

TEST_CASE("drift_factor values and properties") {
    CHECK(drift_factor(1.0, 5) == Approx(1.0));
    CHECK(drift_factor(0.0, 7) == 7.0);
    CHECK(drift_factor(0.5, 2) == Approx(1.5));
    CHECK(drift_factor(0.3, 0) == 0.0);
    CHECK_THROWS_AS(drift_factor(1.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(drift_factor(-0.1, 3), std::invalid_argument);

    // continuity at alpha = 0
    for (int i = 1; i <= 20; ++i)
        CHECK(std::abs(drift_factor(1e-9, i) - i) <= 1e-6 * i);
    // nondecreasing in i, nonincreasing in alpha
    for (double a : {0.1, 0.4, 0.9})
        for (int i = 1; i < 12; ++i) CHECK(drift_factor(a, i + 1) >= drift_factor(a, i));
    for (int i : {1, 5, 10})
        CHECK(drift_factor(0.2, i) >= drift_factor(0.6, i));
}

TEST_CASE("alpha_threshold") {
    CHECK(alpha_threshold(0.0, 2, 3) == Approx(0.0).margin(1e-15));
    CHECK(alpha_threshold(0.5, 1, 1) == Approx(0.9661661791908468).margin(1e-12));
    // asymptotic limit 1 - Btilde^{-L}
    for (double bw : {0.25, 0.5, 1.0})
        CHECK(alpha_threshold(bw, 2, 0, true) ==
              Approx(1.0 - std::pow(b_tilde(bw), -2.0)).margin(1e-12));
    CHECK_THROWS_AS(alpha_threshold(0.5, 1, 0), std::invalid_argument);
}

TEST_CASE("transformer stability bound forms") {
    const double bt = b_tilde(0.5);
    // alpha=1, i>=1, full form collapses to 2 B^L / (2n+1)
    CHECK(transformer_stability_bound(8, 1, 0.5, 1.0, 3, TfBoundForm::Full) ==
          Approx(2.0 * bt / 17.0).margin(1e-12));
    // alpha=0, i=1 full form
    CHECK(transformer_stability_bound(8, 1, 0.5, 0.0, 1, TfBoundForm::Full) ==
          Approx(2.0 * (8.0 / 17.0) * bt * bt / 17.0).margin(1e-12));
    // theorem form vanishes at alpha=1 (the known theorem/proof discrepancy)
    CHECK(transformer_stability_bound(8, 1, 0.5, 1.0, 2, TfBoundForm::Theorem) == 0.0);
    CHECK(transformer_stability_bound(8, 1, 0.5, 0.0, 2, TfBoundForm::Theorem) ==
          Approx(std::pow(bt, 3.0) / 17.0).margin(1e-12));

    // full form: nonincreasing in n, nondecreasing in B_W and L
    for (double alpha : {0.0, 0.25, 0.5})
        for (int i : {1, 2, 3}) {
            for (double n : {4.0, 8.0, 16.0, 32.0})
                CHECK(transformer_stability_bound(2 * n, 2, 0.5, alpha, i, TfBoundForm::Full) <=
                      transformer_stability_bound(n, 2, 0.5, alpha, i, TfBoundForm::Full) + 1e-15);
            CHECK(transformer_stability_bound(16, 2, 0.5, alpha, i, TfBoundForm::Full) <=
                  transformer_stability_bound(16, 2, 0.75, alpha, i, TfBoundForm::Full));
            CHECK(transformer_stability_bound(16, 1, 0.5, alpha, i, TfBoundForm::Full) <=
                  transformer_stability_bound(16, 2, 0.5, alpha, i, TfBoundForm::Full));
        }
}

TEST_CASE("thm1_rhs") {
    BoundInputs in;
    in.n = 100;
    in.alpha = 0.5;
    in.i = 3;
    in.M = 2.0;
    in.beta_n = 0.01;
    in.gamma_n_i = 0.02;
    in.d_tv = 0.05;

    SECTION("delta near 1 kills the log(1/delta) terms") {
        in.delta = 1.0 - 1e-15;
        const auto r = thm1_rhs(in);
        CHECK(r.term("recursive-stability") == Approx(0.0).margin(1e-10));
        CHECK(r.term("uniform-stability") == Approx(0.0).margin(1e-8));
        CHECK(r.total == Approx(in.d_tv * in.M * drift_factor(in.alpha, in.i)).margin(1e-7));
    }
    SECTION("alpha = 1 structure") {
        in.delta = 0.1;
        in.alpha = 1.0;
        const auto r = thm1_rhs(in);
        CHECK(r.term("cumulative-shift") == Approx(in.d_tv * in.M));
        // the sqrt((1-alpha) n) part of the stability term vanishes
        const double logd = std::log(10.0);
        CHECK(r.term("uniform-stability") == Approx(in.beta_n * std::log(100.0) * logd));
    }
    SECTION("all-zero inputs give zero total") {
        BoundInputs z;
        z.n = 10;
        z.delta = 0.5;
        z.M = 0.0;
        z.rho = 0.0;
        const auto r = thm1_rhs(z);
        CHECK(r.total == 0.0);
        CHECK(r.floored_log);  // log(n*alpha) = log(0) floored
    }
    SECTION("proof form splits the stability log term") {
        in.delta = 0.1;
        in.alpha = 0.5;
        const auto loose = thm1_rhs(in, false);
        const auto fine = thm1_rhs(in, true);
        CHECK(fine.term("uniform-stability") <= loose.term("uniform-stability"));
    }
    SECTION("delta validation") {
        in.delta = 1.5;
        CHECK_THROWS_AS(thm1_rhs(in), std::invalid_argument);
    }
    SECTION("total is the exact sum of terms and terms are nonnegative") {
        in.delta = 0.05;
        const auto r = thm1_rhs(in);
        double s = 0;
        for (const auto& t : r.terms) {
            CHECK(t.value >= 0.0);
            s += t.value;
        }
        CHECK(r.total == s);
    }
}

TEST_CASE("thm3_rhs") {
    BoundInputs in;
    in.n = 256;
    in.delta = 0.1;
    in.M = 1.0;
    in.rho = 1.0;
    in.B_W = 0.5;
    in.L = 2;
    in.i = 3;

    SECTION("alpha = 1 leaves only the shift term") {
        in.alpha = 1.0;
        const auto r = thm3_rhs(in);
        CHECK(r.term("mixed-generalization-sqrt") == 0.0);
        CHECK(r.term("mixed-generalization-fast") == 0.0);
        CHECK(r.term("cumulative-shift") ==
              Approx(std::pow(256.0, -0.25) * std::log(10.0)).margin(1e-12));
    }
    SECTION("i = 0 kills the shift term") {
        in.alpha = 0.5;
        in.i = 0;
        CHECK(thm3_rhs(in).term("cumulative-shift") == 0.0);
    }
    SECTION("doubling n reduces every term") {
        in.alpha = 0.5;
        const auto a = thm3_rhs(in);
        in.n = 512;
        const auto b = thm3_rhs(in);
        for (std::size_t k = 0; k < a.terms.size(); ++k)
            CHECK(b.terms[k].value <= a.terms[k].value);
    }
}

TEST_CASE("thm4_rhs frozen hand evaluation") {
    BoundInputs in;
    in.n = 16;
    in.i = 1;
    in.lambda = 1.0;
    in.delta = std::exp(-1.0);
    in.M = 1.0;
    in.rho = 1.0;
    in.B_W = 1.0;
    in.L = 1;
    const auto r = thm4_rhs(in);
    CHECK(r.term("cumulative-shift") == Approx(1.7328679513998633).margin(1e-10));
    CHECK(r.term("mixed-generalization-fast") == Approx(26.60945186198166).margin(1e-8));
    CHECK(r.term("mixed-generalization-slow") == Approx(0.125).margin(1e-12));
    CHECK(r.total == Approx(28.467319813381526).margin(1e-8));
}

TEST_CASE("thm4_rhs limits and guards") {
    BoundInputs in;
    in.n = 100;
    in.i = 4;
    in.delta = 0.1;
    in.M = 1.0;
    in.rho = 1.0;
    in.B_W = 0.5;
    in.L = 2;

    SECTION("huge lambda removes the generalization terms") {
        in.lambda = 1e6;
        const auto r = thm4_rhs(in);
        CHECK(r.term("mixed-generalization-fast") < 1e-4);
        CHECK(r.term("mixed-generalization-slow") < 1e-5);
        in.lambda = 1e3;
        const auto r2 = thm4_rhs(in);
        CHECK(r2.term("cumulative-shift") < r.term("cumulative-shift"));
        CHECK(r2.term("mixed-generalization-fast") > r.term("mixed-generalization-fast"));
    }
    SECTION("M = rho = 0 gives zero total") {
        in.lambda = 1.0;
        in.M = 0.0;
        in.rho = 0.0;
        CHECK(thm4_rhs(in).total == 0.0);
    }
    SECTION("i = 20 stays finite through the log-gamma path") {
        in.lambda = 1.0;
        in.i = 20;
        in.B_W = 1.0;
        in.L = 2;
        const auto r = thm4_rhs(in);
        CHECK(std::isfinite(r.total));
        CHECK(r.total > 0.0);
    }
    SECTION("lambda validation") {
        in.lambda = 0.0;
        CHECK_THROWS_AS(thm4_rhs(in), std::invalid_argument);
    }
}

TEST_CASE("gmm_bound_rhs") {
    BoundInputs in;
    in.n = 100;
    in.d = 2;
    in.alpha = 0.5;
    in.i = 3;
    in.delta = 0.1;

    SECTION("stability at alpha=0 is the linear accumulation regime") {
        in.alpha = 0.0;
        in.i = 6;
        const auto r = gmm_bound_rhs(in, GmmBoundForm::Stability);
        CHECK(r.total == Approx(6.0 * std::pow(100.0, -0.5) * std::log(100.0 * 2.0 / 0.1)).margin(1e-12));
    }
    SECTION("i = 0 stability is zero") {
        in.i = 0;
        CHECK(gmm_bound_rhs(in, GmmBoundForm::Stability).total == 0.0);
    }
    SECTION("generalization hand evaluation at n=100, d=2, alpha=0.5, i=3, delta=0.1") {
        const auto r = gmm_bound_rhs(in, GmmBoundForm::Generalization);
        CHECK(r.term("mixed-generalization") == Approx(9.445602176447874).margin(1e-9));
        CHECK(r.term("cumulative-shift") == Approx(19.220023017963097).margin(1e-9));
    }
}

TEST_CASE("solve_lambda_star") {
    SECTION("generalization terms identically zero: condition always violated") {
        const auto r = solve_lambda_star(100, 0, 0.0, 1.0, 0.5, 2, 0.1);
        CHECK(r.status == LambdaStarResult::Status::AlwaysViolated);
        CHECK_FALSE(r.finite());
    }
    SECTION("an enormous comparison constant forces satisfaction from the lower bracket") {
        const auto r = solve_lambda_star(100, 5, 1.0, 1.0, 0.5, 2, 0.1, 1e12);
        CHECK(r.status == LambdaStarResult::Status::AlwaysHolds);
        CHECK(r.lambda == Approx(1e-6));
    }
    SECTION("lambda* is nonincreasing in n at the default parameter point") {
        double prev = 1e18;
        for (double n : {1e2, 1e3, 1e4}) {
            const auto r = solve_lambda_star(n, 5, 1.0, 1.0, 0.5, 2, 0.1);
            REQUIRE(r.status == LambdaStarResult::Status::Crossing);
            CHECK(r.lambda <= prev + 1e-9);
            prev = r.lambda;
        }
    }
    SECTION("the returned crossing separates the two sign regions") {
        const auto r = solve_lambda_star(1e3, 5, 1.0, 1.0, 0.5, 2, 0.1);
        REQUIRE(r.status == LambdaStarResult::Status::Crossing);
        auto f = [&](double lambda) {
            BoundInputs in;
            in.n = 1e3;
            in.i = 5;
            in.rho = 1.0;
            in.M = 1.0;
            in.B_W = 0.5;
            in.L = 2;
            in.delta = 0.1;
            in.lambda = lambda;
            const auto rep = thm4_rhs(in);
            return rep.term("cumulative-shift") - rep.term("mixed-generalization-fast") -
                   rep.term("mixed-generalization-slow");
        };
        const double below = f(r.lambda * (1.0 - 1e-6));
        const double above = f(r.lambda * (1.0 + 1e-6));
        CHECK(std::abs(f(r.lambda)) <= 1e-6 * std::max(1.0, std::abs(f(2.0 * r.lambda))));
        CHECK((below <= 0.0) != (above <= 0.0));
    }
}
