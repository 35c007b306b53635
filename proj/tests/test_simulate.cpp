#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ist/simulate.hpp"
#include "support/oracles.hpp"

namespace sim = ist::simulate;

TEST_CASE("gen_tensor_trial basics") {
    SUBCASE("zero perturbation is bitwise identical") {
        const auto trial = sim::gen_tensor_trial(10, 3, 0.0, 42);
        for (std::size_t t = 0; t < trial.exact.stored_count(); ++t)
            CHECK(trial.exact.packed()[t] == trial.perturbed.packed()[t]);
    }

    SUBCASE("perturbation norm is exact") {
        for (double eps : {0.1, 0.01, 1e-4}) {
            const auto trial = sim::gen_tensor_trial(12, 4, eps, 7);
            ist::OmegaTensor<double> diff(12);
            for (std::size_t t = 0; t < diff.stored_count(); ++t)
                diff.packed()[t] = trial.perturbed.packed()[t] - trial.exact.packed()[t];
            CHECK(omega_norm(diff) == doctest::Approx(eps).epsilon(1e-12));
        }
    }

    SUBCASE("fixed seeds replay exactly") {
        const auto a = sim::gen_tensor_trial(9, 2, 0.05, 1234);
        const auto b = sim::gen_tensor_trial(9, 2, 0.05, 1234);
        for (std::size_t t = 0; t < a.perturbed.stored_count(); ++t)
            CHECK(a.perturbed.packed()[t] == b.perturbed.packed()[t]);
        for (int m = 0; m < 2; ++m)
            CHECK((a.factors[static_cast<std::size_t>(m)] -
                   b.factors[static_cast<std::size_t>(m)])
                      .norm() == 0.0);
    }

    SUBCASE("rank bound is enforced") {
        CHECK_THROWS_AS(sim::gen_tensor_trial(6, 3, 0.1, 0), ist::InputError);
    }
}

TEST_CASE("gen_gmm_instance basics") {
    SUBCASE("single component always has weight one") {
        const auto inst = sim::gen_gmm_instance(6, 1, 500, 3);
        CHECK(inst.params.weights(0) == 1.0);
        for (int l : inst.labels) CHECK(l == 0);
    }

    SUBCASE("weights are frequencies and sum to one exactly") {
        const auto inst = sim::gen_gmm_instance(8, 3, 1000, 9);
        CHECK(inst.params.weights.sum() == 1.0);
        std::vector<int> counts(3, 0);
        for (int l : inst.labels) ++counts[static_cast<std::size_t>(l)];
        for (int i = 0; i < 2; ++i)
            CHECK(inst.params.weights(i) == doctest::Approx(counts[static_cast<std::size_t>(i)] / 1000.0));
    }

    SUBCASE("sample mean approaches the mixture mean") {
        const auto inst = sim::gen_gmm_instance(6, 2, 100000, 21);
        Eigen::VectorXd mixture_mean = Eigen::VectorXd::Zero(6);
        for (int i = 0; i < 2; ++i)
            mixture_mean += inst.params.weights(i) * inst.params.means[static_cast<std::size_t>(i)];
        const Eigen::VectorXd sample_mean = inst.samples.colwise().mean();
        // std error per coordinate is about sigma/sqrt(n) ~ 0.006
        CHECK((sample_mean - mixture_mean).cwiseAbs().maxCoeff() < 0.05);
    }

    SUBCASE("covariances are entrywise squares") {
        const auto inst = sim::gen_gmm_instance(7, 2, 100, 5);
        for (const auto& c : inst.params.diag_covs) CHECK((c.array() >= 0.0).all());
    }
}

TEST_CASE("evaluate_fit alignment and accuracy") {
    // widely separated means: the truth classifies essentially perfectly
    const auto inst = sim::gen_gmm_instance(8, 3, 4000, 17, /*mean_scale=*/25.0);

    SUBCASE("truth scores near perfectly") {
        const auto rep = sim::evaluate_fit(inst, inst.params);
        CHECK(rep.accuracy >= 0.999);
    }

    SUBCASE("component order does not matter") {
        ist::gmm::GmmParams rev = inst.params;
        std::reverse(rev.means.begin(), rev.means.end());
        std::reverse(rev.diag_covs.begin(), rev.diag_covs.end());
        rev.weights = inst.params.weights.reverse();
        const auto a = sim::evaluate_fit(inst, inst.params);
        const auto b = sim::evaluate_fit(inst, rev);
        CHECK(a.accuracy == b.accuracy);
    }

    SUBCASE("single component is trivially perfect") {
        const auto solo = sim::gen_gmm_instance(6, 1, 200, 2);
        CHECK(sim::evaluate_fit(solo, solo.params).accuracy == 1.0);
    }

    SUBCASE("posterior and likelihood modes both work") {
        const auto a = sim::evaluate_fit(inst, inst.params, ist::gmm::ScoreMode::likelihood);
        const auto b = sim::evaluate_fit(inst, inst.params, ist::gmm::ScoreMode::posterior);
        CHECK(a.accuracy >= 0.999);
        CHECK(b.accuracy >= 0.999);
    }
}

TEST_CASE("run_table1 on exact inputs and small noisy configs") {
    SUBCASE("zero noise gives near-zero errors") {
        const auto sum = sim::run_table1(10, 2, 0.0, 3, 11);
        for (const auto& row : sum.rows) {
            CHECK_FALSE(row.failed);
            CHECK(row.abs_error <= 1e-8);
        }
    }

    SUBCASE("noisy trials approximate better than the raw perturbation") {
        const auto sum = sim::run_table1(12, 2, 0.1, 5, 23);
        for (const auto& row : sum.rows) {
            CHECK_FALSE(row.failed);
            CHECK(row.rel_error < 1.0);
        }
        CHECK(sum.abs_mean < 0.1);
    }

    SUBCASE("results are identical across thread counts") {
        const auto a = sim::run_table1(10, 2, 0.05, 4, 31, /*threads=*/1);
        const auto b = sim::run_table1(10, 2, 0.05, 4, 31, /*threads=*/2);
        for (int t = 0; t < 4; ++t) {
            CHECK(a.rows[static_cast<std::size_t>(t)].rel_error ==
                  b.rows[static_cast<std::size_t>(t)].rel_error);
            CHECK(a.rows[static_cast<std::size_t>(t)].abs_error ==
                  b.rows[static_cast<std::size_t>(t)].abs_error);
        }
    }

    SUBCASE("replays are byte-identical") {
        const auto a = sim::run_table1(10, 2, 0.05, 4, 31);
        const auto b = sim::run_table1(10, 2, 0.05, 4, 31);
        for (int t = 0; t < 4; ++t) {
            CHECK(a.rows[static_cast<std::size_t>(t)].rel_error ==
                  b.rows[static_cast<std::size_t>(t)].rel_error);
            CHECK(a.rows[static_cast<std::size_t>(t)].abs_error ==
                  b.rows[static_cast<std::size_t>(t)].abs_error);
        }
    }

    SUBCASE("zero trials yield an empty report") {
        const auto sum = sim::run_table1(10, 2, 0.1, 0, 0);
        CHECK(sum.rows.empty());
    }
}

TEST_CASE("run_table2 smoke") {
    const auto sum = sim::run_table2(10, 1, 2000, 2, 13);
    CHECK(sum.failures == 0);
    CHECK(sum.mean_accuracy == 1.0); // single component

    const auto two = sim::run_table2(12, 2, 3000, 2, 19);
    CHECK(two.failures == 0);
    CHECK(two.mean_accuracy > 0.8);
}
