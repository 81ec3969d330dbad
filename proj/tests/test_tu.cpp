#include "doctest.h"

#include <matchmarket/datagen.hpp>
#include <matchmarket/tu.hpp>

#include <cmath>
#include <stdexcept>

using namespace matchmarket;

namespace {

// Independent oracle for the 2x2 equilibrium: damped Newton with a
// finite-difference Jacobian on the raw 4-variable root system
//   f_c = A_c^2 + A_c * (K B)_c - 1,   f_j = B_j^2 + B_j * (K^T A)_j - 1,
// sharing no code with the production solver.
Eigen::Vector4d newton_2x2(const Eigen::Matrix2d& K) {
    auto F = [&](const Eigen::Vector4d& x) {
        Eigen::Vector2d A = x.head<2>(), B = x.tail<2>();
        Eigen::Vector4d f;
        Eigen::Vector2d sa = K * B, sb = K.transpose() * A;
        f << A(0) * A(0) + A(0) * sa(0) - 1.0, A(1) * A(1) + A(1) * sa(1) - 1.0,
             B(0) * B(0) + B(0) * sb(0) - 1.0, B(1) * B(1) + B(1) * sb(1) - 1.0;
        return f;
    };
    Eigen::Vector4d x = Eigen::Vector4d::Constant(0.5);
    for (int it = 0; it < 200; ++it) {
        Eigen::Vector4d f = F(x);
        if (f.cwiseAbs().maxCoeff() < 1e-14) break;
        Eigen::Matrix4d Jac;
        const double h = 1e-7;
        for (int k = 0; k < 4; ++k) {
            Eigen::Vector4d xp = x, xm = x;
            xp(k) += h;
            xm(k) -= h;
            Jac.col(k) = (F(xp) - F(xm)) / (2 * h);
        }
        Eigen::Vector4d step = Jac.fullPivLu().solve(f);
        double damp = 1.0;
        while (damp > 1e-4 && F(x - damp * step).cwiseAbs().maxCoeff() >=
                                  f.cwiseAbs().maxCoeff())
            damp /= 2;
        x -= damp * step;
    }
    return x;
}

}  // namespace

TEST_SUITE("tu") {

TEST_CASE("symmetric 1x1 zero-preference market has the closed-form fixed point") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Zero(1, 1);
    prefs.p_jc = MatrixX<double>::Zero(1, 1);
    for (double beta : {0.2, 1.0, 10.0}) {
        auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = beta, .tol = 1e-13});
        CHECK(eq.converged);
        CHECK(eq.mu(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        // Unmatched masses are the squared roots: A^2 = B^2 = 1/2.
        CHECK(eq.mu_c0(0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(eq.mu_0j(0) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("2x2 fixed point matches an independent Newton solve") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj.resize(2, 2);
    prefs.p_cj << 0.9, 0.1, 0.2, 0.8;
    prefs.p_jc.resize(2, 2);
    prefs.p_jc << 0.3, 0.6, 0.7, 0.4;

    auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0, .tol = 1e-12});
    REQUIRE(eq.converged);
    CHECK(eq.residual < 1e-12);

    Eigen::Matrix2d K = ((prefs.p_cj + prefs.p_jc.transpose()) / 2.0).array().exp();
    Eigen::Vector4d x = newton_2x2(K);
    Eigen::Vector2d A = x.head<2>(), B = x.tail<2>();
    for (int c = 0; c < 2; ++c) {
        CHECK(eq.mu_c0(c) == doctest::Approx(A(c) * A(c)).epsilon(1e-9));
        CHECK(eq.mu_0j(c) == doctest::Approx(B(c) * B(c)).epsilon(1e-9));
        for (int j = 0; j < 2; ++j)
            CHECK(eq.mu(c, j) == doctest::Approx(K(c, j) * A(c) * B(j)).epsilon(1e-9));
    }
}

TEST_CASE("equilibrium satisfies the marginal constraints on random markets") {
    for (std::uint64_t seed : {3u, 17u, 99u}) {
        auto prefs = generate_market(SyntheticConfig{.n = 9, .lambda = 0.5, .seed = seed});
        auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0, .tol = 1e-10});
        REQUIRE(eq.converged);
        for (Index c = 0; c < prefs.num_candidates(); ++c)
            CHECK(eq.mu_c0(c) + eq.mu.row(c).sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (Index j = 0; j < prefs.num_jobs(); ++j)
            CHECK(eq.mu_0j(j) + eq.mu.col(j).sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((eq.mu.array() > 0.0).all());
        CHECK((eq.mu_c0.array() > 0.0).all());
        CHECK((eq.mu_0j.array() > 0.0).all());
        CHECK((eq.mu_c0.array() < 1.0).all());
        CHECK((eq.mu_0j.array() < 1.0).all());
        // mu factors exactly through the kernel and the outside-option roots.
        MatrixX<double> K =
            ((prefs.p_cj + prefs.p_jc.transpose()) / (2.0 * eq.beta)).array().exp();
        MatrixX<double> rebuilt =
            K.array() * (eq.mu_c0.array().sqrt().matrix() *
                         eq.mu_0j.array().sqrt().matrix().transpose())
                            .array();
        CHECK((eq.mu - rebuilt).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("ranking by matched mass equals ranking by log-kernel score") {
    // log mu(c,j) = (p_cj + p_jc)/(2 beta) + log A_c + log B_j, so within a row
    // the ordering by mu equals the ordering by p_cj + p_jc + 2 beta log B_j.
    auto prefs = generate_market(SyntheticConfig{.n = 8, .lambda = 0.4, .seed = 21});
    for (double beta : {0.5, 1.0, 4.0}) {
        auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = beta});
        REQUIRE(eq.converged);
        auto pol = tu_policy(eq);
        VectorX<double> logB = eq.mu_0j.array().sqrt().log().matrix();
        for (Index c = 0; c < prefs.num_candidates(); ++c) {
            VectorX<double> score = prefs.p_cj.row(c).transpose() +
                                    prefs.p_jc.col(c) + 2.0 * beta * logB;
            CHECK(ranking_from_scores(score) == pol.rankings[static_cast<std::size_t>(c)]);
        }
    }
}

TEST_CASE("tu_policy sorts matched mass descending with index tie-break") {
    EquilibriumMatching<double> eq;
    eq.mu.resize(1, 3);
    eq.mu << 0.1, 0.3, 0.2;
    eq.mu_c0 = VectorX<double>::Constant(1, 0.4);
    eq.mu_0j = VectorX<double>::Constant(3, 0.5);
    eq.converged = true;
    auto pol = tu_policy(eq);
    CHECK(pol.rankings[0] == Ranking({1, 2, 0}));
}

TEST_CASE("tu_policy refuses an unconverged equilibrium unless forced") {
    auto prefs = generate_market(SyntheticConfig{.n = 6, .lambda = 0.5, .seed = 2});
    auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0, .tol = 1e-12, .max_iters = 2});
    CHECK_FALSE(eq.converged);
    CHECK(eq.iterations == 2);
    CHECK_THROWS_AS(tu_policy(eq), NotConvergedError);
    CHECK_NOTHROW(tu_policy(eq, /*force=*/true));
}

TEST_CASE("kernel overflow at tiny beta raises a numerical error naming beta") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Constant(2, 2, 1.0);
    prefs.p_jc = MatrixX<double>::Constant(2, 2, 1.0);
    try {
        solve_ipfp(prefs, TUConfig<double>{.beta = 1e-6});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }
}

TEST_CASE("config validation rejects non-positive parameters") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Constant(1, 1, 0.5);
    prefs.p_jc = MatrixX<double>::Constant(1, 1, 0.5);
    CHECK_THROWS_AS(solve_ipfp(prefs, TUConfig<double>{.beta = 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(solve_ipfp(prefs, TUConfig<double>{.beta = -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(solve_ipfp(prefs, TUConfig<double>{.tol = 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(solve_ipfp(prefs, TUConfig<double>{.max_iters = 0}), std::invalid_argument);
}

TEST_CASE("uniform preference shifts preserve rankings outside near-ties") {
    // Adding one constant to every entry of both matrices multiplies the whole
    // kernel by a constant. The equilibrium outside-option masses shift
    // slightly and non-uniformly, so pairs of jobs with nearly identical
    // matched mass can swap; every other pair must keep its order.
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto prefs = generate_market(SyntheticConfig{.n = 7, .lambda = 0.3, .seed = seed});
        // Compress into [0, 0.6] so the +0.3 shift stays inside [0, 1].
        prefs.p_cj *= 0.6;
        prefs.p_jc *= 0.6;
        auto shifted = prefs;
        shifted.p_cj.array() += 0.3;
        shifted.p_jc.array() += 0.3;
        auto eq1 = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0});
        auto eq2 = solve_ipfp(shifted, TUConfig<double>{.beta = 1.0});
        REQUIRE(eq1.converged);
        REQUIRE(eq2.converged);
        for (Index c = 0; c < prefs.num_candidates(); ++c) {
            for (Index a = 0; a < prefs.num_jobs(); ++a) {
                for (Index b = a + 1; b < prefs.num_jobs(); ++b) {
                    double d1 = eq1.mu(c, a) - eq1.mu(c, b);
                    double d2 = eq2.mu(c, a) - eq2.mu(c, b);
                    if (d1 * d2 < 0.0) {
                        double rel = std::abs(d1) / std::max(eq1.mu(c, a), eq1.mu(c, b));
                        CHECK(rel < 0.01);  // inversions only among near-ties
                    }
                }
            }
        }
    }
}

TEST_CASE("recovered transfers reproduce both normalized softmax demands") {
    auto prefs = generate_market(SyntheticConfig{.n = 7, .lambda = 0.5, .seed = 13});
    const double beta = 0.8;
    auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = beta, .tol = 1e-11});
    REQUIRE(eq.converged);
    auto tau = recover_transfers(prefs, eq);

    const Index C = prefs.num_candidates(), J = prefs.num_jobs();
    for (Index c = 0; c < C; ++c) {
        // Candidate-side softmax over J+1 options (outside option has p = tau = 0).
        double denom = 1.0;
        for (Index j = 0; j < J; ++j)
            denom += std::exp((prefs.p_cj(c, j) + tau(c, j)) / beta);
        for (Index j = 0; j < J; ++j) {
            double demand = std::exp((prefs.p_cj(c, j) + tau(c, j)) / beta) / denom;
            CHECK(demand == doctest::Approx(eq.mu(c, j)).epsilon(1e-7));
        }
        CHECK(1.0 / denom == doctest::Approx(eq.mu_c0(c)).epsilon(1e-7));
    }
    for (Index j = 0; j < J; ++j) {
        // Employer-side softmax: the employer pays the transfer.
        double denom = 1.0;
        for (Index c = 0; c < C; ++c)
            denom += std::exp((prefs.p_jc(j, c) - tau(c, j)) / beta);
        for (Index c = 0; c < C; ++c) {
            double demand = std::exp((prefs.p_jc(j, c) - tau(c, j)) / beta) / denom;
            CHECK(demand == doctest::Approx(eq.mu(c, j)).epsilon(1e-7));
        }
        CHECK(1.0 / denom == doctest::Approx(eq.mu_0j(j)).epsilon(1e-7));
    }
}

TEST_CASE("transfers vanish on the symmetric 1x1 zero-preference market") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Zero(1, 1);
    prefs.p_jc = MatrixX<double>::Zero(1, 1);
    auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0, .tol = 1e-13});
    auto tau = recover_transfers(prefs, eq);
    CHECK(std::abs(tau(0, 0)) < 1e-12);
}

TEST_CASE("transfers refuse an unconverged equilibrium") {
    auto prefs = generate_market(SyntheticConfig{.n = 4, .lambda = 0.5, .seed = 1});
    auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = 1.0, .max_iters = 1});
    CHECK_THROWS_AS(recover_transfers(prefs, eq), NotConvergedError);
}

TEST_CASE("iteration counts grow as beta shrinks toward the unit-mass regime") {
    // Smaller beta sharpens the kernel and slows the alternating updates; the
    // count is deterministic for a fixed market, so pin a sanity ordering.
    auto prefs = generate_market(SyntheticConfig{.n = 10, .lambda = 0.5, .seed = 4});
    auto it_at = [&](double beta) {
        auto eq = solve_ipfp(prefs, TUConfig<double>{.beta = beta});
        REQUIRE(eq.converged);
        return eq.iterations;
    };
    CHECK(it_at(0.25) >= it_at(1.0));
    CHECK(it_at(1.0) >= it_at(4.0));
}

}  // TEST_SUITE
