#include "doctest.h"

#include <matchmarket/assignment.hpp>
#include <matchmarket/datagen.hpp>
#include <matchmarket/simulator.hpp>
#include <matchmarket/sw.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace matchmarket;

namespace {

std::vector<Examination<double>> closed_form_kinds() {
    return {Examination<double>::inv(), Examination<double>::log(),
            Examination<double>::exp()};
}

// Random stochastic policy: per candidate, a strict convex mixture of the
// uniform matrix and a random permutation matrix (always doubly stochastic,
// strictly positive, away from the polytope boundary).
StochasticPolicy<double> random_policy(Index C, Index J, SplitMix64& rng) {
    StochasticPolicy<double> pol;
    for (Index c = 0; c < C; ++c) {
        MatrixX<double> m = MatrixX<double>::Constant(J, J, 0.5 / static_cast<double>(J));
        Ranking perm(static_cast<std::size_t>(J));
        std::iota(perm.begin(), perm.end(), Index{0});
        for (Index i = J - 1; i > 0; --i) {
            const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        for (Index k = 0; k < J; ++k) m(perm[static_cast<std::size_t>(k)], k) += 0.5;
        pol.matrices.push_back(std::move(m));
    }
    return pol;
}

PreferenceMatrices<double> random_prefs(Index C, Index J, SplitMix64& rng) {
    PreferenceMatrices<double> prefs;
    prefs.p_cj.resize(C, J);
    prefs.p_jc.resize(J, C);
    for (Index c = 0; c < C; ++c)
        for (Index j = 0; j < J; ++j) prefs.p_cj(c, j) = uniform01(rng);
    for (Index j = 0; j < J; ++j)
        for (Index c = 0; c < C; ++c) prefs.p_jc(j, c) = uniform01(rng);
    return prefs;
}

}  // namespace

TEST_SUITE("sw") {

TEST_CASE("expected_exposure of the identity picks v at each job's own slot") {
    auto exam = Examination<double>::inv();
    MatrixX<double> id = MatrixX<double>::Identity(4, 4);
    auto e = expected_exposure(id, exam);
    for (Index j = 0; j < 4; ++j)
        CHECK(e(j) == doctest::Approx(1.0 / static_cast<double>(j + 1)).epsilon(1e-12));
}

TEST_CASE("expected_exposure of the uniform matrix is the mean examination") {
    auto exam = Examination<double>::inv();
    MatrixX<double> u = MatrixX<double>::Constant(5, 5, 0.2);
    double mean = (1.0 + 0.5 + 1.0 / 3 + 0.25 + 0.2) / 5.0;
    auto e = expected_exposure(u, exam);
    for (Index j = 0; j < 5; ++j) CHECK(e(j) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("expected_exposure of a permutation matrix reads v at the assigned slot") {
    auto exam = Examination<double>::exp();
    Ranking perm = {2, 0, 1};  // slot k shows job perm[k]
    MatrixX<double> p = MatrixX<double>::Zero(3, 3);
    for (Index k = 0; k < 3; ++k) p(perm[static_cast<std::size_t>(k)], k) = 1.0;
    auto e = expected_exposure(p, exam);
    CHECK(e(2) == doctest::Approx(exam.value(1.0)));
    CHECK(e(0) == doctest::Approx(exam.value(2.0)));
    CHECK(e(1) == doctest::Approx(exam.value(3.0)));
    MatrixX<double> rect = MatrixX<double>::Zero(2, 3);
    CHECK_THROWS_AS(expected_exposure(rect, exam), std::invalid_argument);
}

TEST_CASE("single-pair objective is the product of the two scores") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Constant(1, 1, 0.7);
    prefs.p_jc = MatrixX<double>::Constant(1, 1, 0.4);
    StochasticPolicy<double> pol;
    pol.matrices = {MatrixX<double>::Constant(1, 1, 1.0)};
    for (const auto& exam : closed_form_kinds()) {
        // v(1) = 1 for every kind, so the bound collapses to p_cj * p_jc.
        CHECK(approx_sw(pol, prefs, exam) == doctest::Approx(0.28).epsilon(1e-12));
        auto grads = grad_approx_sw(pol, prefs, exam);
        REQUIRE(grads.size() == 1);
        CHECK(grads[0](0, 0) == doctest::Approx(0.28).epsilon(1e-12));
    }
}

TEST_CASE("two candidates on one job: the dispreferred one discounts for the rival") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj.resize(2, 1);
    prefs.p_cj << 0.8, 0.6;
    prefs.p_jc.resize(1, 2);
    prefs.p_jc << 0.9, 0.5;  // employer strictly prefers candidate 0
    StochasticPolicy<double> pol;
    pol.matrices.assign(2, MatrixX<double>::Constant(1, 1, 1.0));
    auto exam = Examination<double>::inv();
    // 0.8*0.9*v(1) + 0.6*0.5*v(1 + 0.8), exposures are v(1) = 1.
    double expect = 0.72 + 0.3 / 1.8;
    CHECK(approx_sw(pol, prefs, exam) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("tied employer scores share the competitor load instead of stacking") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj.resize(2, 1);
    prefs.p_cj << 0.8, 0.6;
    prefs.p_jc = MatrixX<double>::Constant(1, 2, 0.7);  // exact tie
    StochasticPolicy<double> pol;
    pol.matrices.assign(2, MatrixX<double>::Constant(1, 1, 1.0));
    auto exam = Examination<double>::inv();
    // Neither candidate strictly precedes the other: both keep v(1) = 1.
    CHECK(approx_sw(pol, prefs, exam) == doctest::Approx(0.7 * 1.4).epsilon(1e-12));
}

TEST_CASE("zero preferences give zero objective and zero gradient") {
    PreferenceMatrices<double> prefs;
    prefs.p_cj = MatrixX<double>::Zero(3, 3);
    prefs.p_jc = MatrixX<double>::Zero(3, 3);
    StochasticPolicy<double> pol;
    pol.matrices.assign(3, MatrixX<double>::Constant(3, 3, 1.0 / 3.0));
    auto exam = Examination<double>::inv();
    CHECK(approx_sw(pol, prefs, exam) == 0.0);
    for (const auto& g : grad_approx_sw(pol, prefs, exam))
        CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
    SplitMix64 rng(404);
    const double h = 1e-6;
    for (const auto& exam : closed_form_kinds()) {
        for (int trial = 0; trial < 7; ++trial) {
            const Index J = (trial % 2 == 0) ? 4 : 5;
            const Index C = 3 + (trial % 3);
            auto prefs = random_prefs(C, J, rng);
            auto pol = random_policy(C, J, rng);
            auto grads = grad_approx_sw(pol, prefs, exam);

            double max_abs_grad = 0;
            for (const auto& g : grads)
                max_abs_grad = std::max(max_abs_grad, g.cwiseAbs().maxCoeff());
            REQUIRE(max_abs_grad > 0);

            for (Index c = 0; c < C; ++c) {
                for (Index j = 0; j < J; ++j) {
                    for (Index k = 0; k < J; ++k) {
                        auto bumped = pol;
                        bumped.matrices[static_cast<std::size_t>(c)](j, k) += h;
                        double up = approx_sw(bumped, prefs, exam);
                        bumped.matrices[static_cast<std::size_t>(c)](j, k) -= 2 * h;
                        double down = approx_sw(bumped, prefs, exam);
                        double fd = (up - down) / (2 * h);
                        double an = grads[static_cast<std::size_t>(c)](j, k);
                        CHECK(std::abs(an - fd) <= 1e-5 * std::max(1.0, max_abs_grad));
                    }
                }
            }
        }
    }
}

TEST_CASE("the bound never exceeds the exact expected match count") {
    SplitMix64 rng(808);
    for (const auto& exam : closed_form_kinds()) {
        for (int trial = 0; trial < 100; ++trial) {
            const Index C = 2 + static_cast<Index>(rng() % 3);  // 2..4
            const Index J = 2 + static_cast<Index>(rng() % 3);
            auto prefs = random_prefs(C, J, rng);
            auto pol = random_policy(C, J, rng);
            double bound = approx_sw(pol, prefs, exam);
            double exact = exact_sw(pol, prefs, exam);
            CHECK(bound <= exact + 1e-12);
        }
    }
}

TEST_CASE("sorting by gradient score solves the per-candidate linear step exactly") {
    // The per-candidate linear maximization has cost G(j,k) = g(j) * v(k+1).
    // Check, by enumerating all |J|! permutations, that pairing jobs in
    // decreasing g order with slots in decreasing v order attains the maximum,
    // and that the general assignment solver agrees.
    SplitMix64 rng(909);
    for (const auto& exam : closed_form_kinds()) {
        for (Index J = 2; J <= 5; ++J) {
            for (int trial = 0; trial < 10; ++trial) {
                VectorX<double> g(J);
                for (Index j = 0; j < J; ++j) g(j) = uniform01(rng) * 2.0 - 1.0;
                VectorX<double> v(J);
                for (Index k = 0; k < J; ++k)
                    v(k) = exam.value(static_cast<double>(k + 1));
                MatrixX<double> G = g * v.transpose();

                auto score = [&](const Ranking& perm) {
                    double total = 0;
                    for (Index k = 0; k < J; ++k)
                        total += G(perm[static_cast<std::size_t>(k)], k);
                    return total;
                };

                Ranking perm(static_cast<std::size_t>(J));
                std::iota(perm.begin(), perm.end(), Index{0});
                double best = -1e300;
                do {
                    best = std::max(best, score(perm));
                } while (std::next_permutation(perm.begin(), perm.end()));

                CHECK(score(ranking_from_scores(g)) == doctest::Approx(best).epsilon(1e-12));

                auto sigma = solve_assignment(MatrixX<double>(-G));
                // solve_assignment maps rows (jobs) to columns (slots); invert
                // to slot -> job before scoring.
                Ranking slot_to_job(static_cast<std::size_t>(J));
                for (Index j = 0; j < J; ++j)
                    slot_to_job[static_cast<std::size_t>(sigma[static_cast<std::size_t>(j)])] = j;
                CHECK(score(slot_to_job) == doctest::Approx(best).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("the optimizer returns a certified mixture of permutations") {
    auto prefs = generate_market(SyntheticConfig{.n = 6, .lambda = 0.5, .seed = 77});
    SWConfig<double> cfg;
    cfg.timesteps = 12;
    auto sol = solve_sw_full(prefs, cfg);

    const Index C = prefs.num_candidates();
    const Index J = prefs.num_jobs();
    CHECK(sol.policy.num_candidates() == C);
    CHECK_NOTHROW(sol.policy.validate(1e-9));

    REQUIRE(static_cast<Index>(sol.decompositions.size()) == C);
    for (Index c = 0; c < C; ++c) {
        const auto& d = sol.decompositions[static_cast<std::size_t>(c)];
        double wsum = 0;
        for (const auto& t : d.terms) {
            CHECK(t.weight > 0.0);
            CHECK(is_permutation_of_n(t.permutation, J));
            wsum += t.weight;
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
        // Uniform start contributes at most J cyclic shifts; each step adds one atom.
        CHECK(static_cast<Index>(d.terms.size()) <= cfg.timesteps + J);
        // The returned policy IS the decomposition's reconstruction.
        CHECK((d.reconstruct(J) - sol.policy.matrices[static_cast<std::size_t>(c)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-15);
    }

    REQUIRE(static_cast<Index>(sol.objective_trace.size()) == cfg.timesteps + 1);
    for (double f : sol.objective_trace) CHECK(std::isfinite(f));
    for (std::size_t t = 1; t < sol.objective_trace.size(); ++t)
        CHECK(sol.objective_trace[t] >= sol.objective_trace[t - 1] - 1e-9);

    // The trace starts at the uniform-policy objective and ends at the final
    // policy's objective.
    StochasticPolicy<double> uniform;
    uniform.matrices.assign(static_cast<std::size_t>(C),
                            MatrixX<double>::Constant(J, J, 1.0 / static_cast<double>(J)));
    CHECK(sol.objective_trace.front() ==
          doctest::Approx(approx_sw(uniform, prefs, cfg.examination)).epsilon(1e-12));
    CHECK(sol.objective_trace.back() ==
          doctest::Approx(approx_sw(sol.policy, prefs, cfg.examination)).epsilon(1e-9));

    // And the optimizer should actually improve on the uniform start here.
    CHECK(sol.objective_trace.back() > sol.objective_trace.front());

    // The thin wrapper returns the same policy.
    auto pol = solve_sw(prefs, cfg);
    CHECK(pol.matrices.size() == sol.policy.matrices.size());
    for (std::size_t c = 0; c < pol.matrices.size(); ++c)
        CHECK((pol.matrices[c] - sol.policy.matrices[c]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solver configuration is validated") {
    auto prefs = generate_market(SyntheticConfig{.n = 3, .lambda = 0.5, .seed = 1});
    SWConfig<double> cfg;
    cfg.timesteps = 0;
    CHECK_THROWS_AS(solve_sw(prefs, cfg), std::invalid_argument);
    cfg.timesteps = 5;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(solve_sw(prefs, cfg), std::invalid_argument);
    cfg.eta = 1.5;
    CHECK_THROWS_AS(solve_sw(prefs, cfg), std::invalid_argument);
    cfg.eta = 0.2;
    cfg.examination = Examination<double>::table({1.0, 0.5});
    CHECK_THROWS_AS(solve_sw(prefs, cfg), std::invalid_argument);
}

TEST_CASE("eta = 1 keeps iterates at vertices and stays feasible") {
    auto prefs = generate_market(SyntheticConfig{.n = 4, .lambda = 0.5, .seed = 3});
    SWConfig<double> cfg;
    cfg.timesteps = 5;
    cfg.eta = 1.0;
    auto sol = solve_sw_full(prefs, cfg);
    CHECK_NOTHROW(sol.policy.validate(1e-9));
    for (const auto& d : sol.decompositions) CHECK(d.terms.size() == 1);
}

}  // TEST_SUITE
