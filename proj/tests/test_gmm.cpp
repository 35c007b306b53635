#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ist/align.hpp"
#include "ist/gmm.hpp"
#include "ist/rng.hpp"
#include "ist/simulate.hpp"
#include "support/oracles.hpp"

using ist::cdouble;
using ist::CounterRng;
namespace gm = ist::gmm;

namespace {

gm::GmmParams make_params(int d, int r, std::uint64_t seed, double mean_scale = 1.0) {
    // reuse the synthetic generator; the samples are discarded
    return ist::simulate::gen_gmm_instance(d, r, 1000, seed, mean_scale).params;
}

} // namespace

TEST_CASE("sample_moments on tiny inputs") {
    Eigen::MatrixXd one(1, 4);
    one << 1, 2, 0, 0;
    const auto mp = gm::sample_moments(one);
    CHECK((mp.m1 - one.row(0).transpose()).norm() == 0.0);
    CHECK(mp.m3(0, 0, 1) == doctest::Approx(2.0));
    CHECK(mp.m3(0, 1, 1) == doctest::Approx(4.0));
    CHECK(mp.m3(1, 1, 1) == doctest::Approx(8.0));

    Eigen::MatrixXd pair(2, 4);
    pair.row(0) << 1, -2, 3, 0.5;
    pair.row(1) = -pair.row(0);
    const auto zero = gm::sample_moments(pair);
    CHECK(zero.m1.norm() == 0.0);
    double total = 0.0;
    for (auto v : zero.m3.packed()) total += std::abs(v);
    CHECK(total == 0.0);

    Eigen::MatrixXd bad(1, 4);
    bad << 1, std::nan(""), 0, 0;
    CHECK_THROWS_AS(gm::sample_moments(bad), ist::InputError);
    CHECK_THROWS_AS(gm::sample_moments(Eigen::MatrixXd(1, 3)), ist::InputError);
}

TEST_CASE("sample moments converge to the analytic moments") {
    const int d = 5;
    gm::GmmParams p;
    p.d = d;
    p.r = 1;
    p.weights = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd mu(d), var(d);
    mu << 0.5, -1.0, 0.25, 1.5, -0.75;
    var << 1.0, 0.5, 2.0, 0.25, 1.5;
    p.means = {mu};
    p.diag_covs = {var};
    const auto exact = gm::exact_moments(p);

    const std::size_t n = 200000;
    CounterRng rng(99);
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(n), d);
    for (std::size_t t = 0; t < n; ++t)
        for (int a = 0; a < d; ++a)
            samples(static_cast<Eigen::Index>(t), a) = mu(a) + std::sqrt(var(a)) * rng.normal();
    const auto mp = gm::sample_moments(samples);

    // third-moment entries have standard errors well below 0.1 at this n;
    // allow 5 of those
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int k = j; k < d; ++k)
                CHECK(std::abs(mp.m3(i, j, k) - exact.m3(i, j, k)) < 0.5);
    CHECK((mp.m1 - exact.m1).norm() < 0.05);
}

TEST_CASE("exact_moments closed forms") {
    gm::GmmParams point;
    point.d = 4;
    point.r = 1;
    point.weights = Eigen::VectorXd::Ones(1);
    point.means = {Eigen::VectorXd::Zero(4)};
    point.means[0](0) = 1.0;
    point.diag_covs = {Eigen::VectorXd::Zero(4)};
    const auto mp = gm::exact_moments(point);
    CHECK(mp.m3(0, 0, 0) == 1.0);
    double total = 0.0;
    for (auto v : mp.m3.packed()) total += std::abs(v);
    CHECK(total == 1.0);

    gm::GmmParams iso;
    iso.d = 4;
    iso.r = 1;
    iso.weights = Eigen::VectorXd::Ones(1);
    iso.means = {Eigen::VectorXd::Ones(4)};
    iso.diag_covs = {Eigen::VectorXd::Ones(4)};
    const auto mi = gm::exact_moments(iso);
    CHECK(mi.m3(0, 0, 0) == doctest::Approx(4.0));
    CHECK(mi.m3(0, 1, 2) == doctest::Approx(1.0));
}

TEST_CASE("distinct-index entries of the moments never see the covariances") {
    const auto p = make_params(8, 3, 4242);
    const auto mp = gm::exact_moments(p);
    std::vector<double> w(p.weights.data(), p.weights.data() + p.r);
    const auto pure = ist::from_rank_one_sum<double>(w, p.means);
    const auto fa = omega_extract(mp.m3);
    const auto fb = omega_extract(pure);
    for (std::size_t t = 0; t < fa.stored_count(); ++t)
        CHECK(fa.packed()[t] == fb.packed()[t]); // bitwise: the a_j terms never land here
}

TEST_CASE("realify unwinds cube roots of unity") {
    CounterRng rng(7);
    const Eigen::VectorXd q = oracle::random_vector(rng, 6);
    CHECK((gm::realify(q.cast<cdouble>()) - q).norm() == 0.0);

    const cdouble tau2(-0.5, std::sqrt(3.0) / 2.0);
    const Eigen::VectorXcd twisted = tau2 * q.cast<cdouble>();
    CHECK((gm::realify(twisted) - q).norm() < 1e-14);

    Eigen::VectorXcd noisy = q.cast<cdouble>();
    for (int t = 0; t < 6; ++t) noisy(t) += cdouble(0.0, 1e-6 * rng.normal());
    CHECK((gm::realify(noisy) - q).norm() < 1e-5);

    // invariance: any cube root of unity on a real vector realifies back
    const cdouble tau3 = std::conj(tau2);
    CHECK((gm::realify(tau3 * q.cast<cdouble>()) - q).norm() < 1e-14);
}

TEST_CASE("recover_weights on exact inputs") {
    SUBCASE("single component") {
        Eigen::VectorXd mu(4);
        mu << 1, -2, 0.5, 3;
        const auto wm = gm::recover_weights(mu, {mu});
        CHECK(wm.weights(0) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK((wm.means[0] - mu).norm() < 1e-10);
    }

    SUBCASE("two components from exact moments") {
        const auto p = make_params(8, 2, 11);
        const auto mp = gm::exact_moments(p);
        std::vector<Eigen::VectorXd> q;
        for (int i = 0; i < 2; ++i)
            q.push_back(std::pow(p.weights(i), 1.0 / 3.0) * p.means[static_cast<std::size_t>(i)]);
        const auto wm = gm::recover_weights(mp.m1, q);
        for (int i = 0; i < 2; ++i) {
            CHECK(std::abs(wm.weights(i) - p.weights(i)) < 1e-8);
            CHECK((wm.means[static_cast<std::size_t>(i)] - p.means[static_cast<std::size_t>(i)]).norm() < 1e-8);
        }
    }

    SUBCASE("a vanishing weight is an error that names the component") {
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4), e2 = Eigen::VectorXd::Zero(4);
        e1(0) = 1.0;
        e2(1) = 1.0;
        try {
            gm::recover_weights(e1, {e1, e2});
            FAIL("expected a degenerate-component error");
        } catch (const ist::NumericalError& e) {
            CHECK(std::string(e.what()).find("component 2") != std::string::npos);
        }
    }

    SUBCASE("error scales linearly with factor noise") {
        const auto p = make_params(8, 2, 13);
        const auto mp = gm::exact_moments(p);
        double errs[2];
        int idx = 0;
        for (double noise : {1e-3, 1e-5}) {
            CounterRng rng(21);
            std::vector<Eigen::VectorXd> q;
            for (int i = 0; i < 2; ++i)
                q.push_back(std::pow(p.weights(i), 1.0 / 3.0) * p.means[static_cast<std::size_t>(i)] +
                            noise * oracle::random_vector(rng, 8));
            const auto wm = gm::recover_weights(mp.m1, q);
            errs[idx++] = (wm.weights - p.weights).cwiseAbs().maxCoeff();
        }
        CHECK(errs[0] < 1e-1);
        CHECK(errs[1] < errs[0]);
        CHECK(errs[0] / errs[1] > 10.0); // two decades of noise, at least one decade of error
    }
}

TEST_CASE("joint_refine behaves at and near stationary points") {
    const auto p = make_params(8, 2, 303);
    const auto mp = gm::exact_moments(p);
    const auto f = omega_extract(mp.m3);

    gm::WeightsMeans exact_start;
    exact_start.weights = p.weights;
    exact_start.means = p.means;
    const auto at_opt = gm::joint_refine(mp.m1, f, exact_start);
    CHECK(at_opt.objective <= 1e-16);
    for (int i = 0; i < 2; ++i)
        CHECK((at_opt.wm.means[static_cast<std::size_t>(i)] - p.means[static_cast<std::size_t>(i)]).norm() < 1e-8);

    CounterRng rng(31);
    gm::WeightsMeans off;
    off.weights = p.weights;
    off.means = p.means;
    for (auto& m : off.means) m += 1e-2 * oracle::random_vector(rng, 8);
    // zero-iteration run reports the objective at the start
    const auto before = gm::joint_refine(mp.m1, f, off, {0, 1e-6});
    const auto after = gm::joint_refine(mp.m1, f, off);
    CHECK(after.objective <= before.objective / 10.0);
    CHECK(after.wm.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("recover_covariances closed cases") {
    SUBCASE("single component, unit variances") {
        gm::GmmParams p;
        p.d = 4;
        p.r = 1;
        p.weights = Eigen::VectorXd::Ones(1);
        Eigen::VectorXd mu(4);
        mu << 1, 2, 3, 4;
        p.means = {mu};
        p.diag_covs = {Eigen::VectorXd::Ones(4)};
        const auto mp = gm::exact_moments(p);
        const auto covs = gm::recover_covariances(mp.m3, p.weights, p.means, {mu});
        CHECK((covs.diag_covs[0] - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("point masses give zero variances") {
        gm::GmmParams p;
        p.d = 4;
        p.r = 1;
        p.weights = Eigen::VectorXd::Ones(1);
        Eigen::VectorXd mu(4);
        mu << -1, 0.5, 2, 1;
        p.means = {mu};
        p.diag_covs = {Eigen::VectorXd::Zero(4)};
        const auto mp = gm::exact_moments(p);
        const auto covs = gm::recover_covariances(mp.m3, p.weights, p.means, {mu});
        CHECK(covs.diag_covs[0].cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("two components, d = 8") {
        const auto p = make_params(8, 2, 515);
        const auto mp = gm::exact_moments(p);
        std::vector<Eigen::VectorXd> q;
        for (int i = 0; i < 2; ++i)
            q.push_back(std::pow(p.weights(i), 1.0 / 3.0) * p.means[static_cast<std::size_t>(i)]);
        const auto covs = gm::recover_covariances(mp.m3, p.weights, p.means, q);
        for (int i = 0; i < 2; ++i)
            CHECK((covs.diag_covs[static_cast<std::size_t>(i)] -
                   p.diag_covs[static_cast<std::size_t>(i)])
                      .cwiseAbs()
                      .maxCoeff() < 1e-8);
    }
}

TEST_CASE("fit on exact moments recovers every parameter block") {
    const auto p = make_params(20, 3, 606);
    const auto mp = gm::exact_moments(p);
    const auto fit = gm::fit_moments(mp, 3, {});
    const auto align = ist::align::align_gmm(fit.params, p);
    CHECK(align.max_weight_error < 1e-6);
    CHECK(align.max_mean_error < 1e-6);
    CHECK(align.max_cov_error < 1e-6);
    CHECK(fit.params.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fit postconditions hold on noisy data") {
    const auto instance = ist::simulate::gen_gmm_instance(12, 2, 4000, 771);
    const auto fit = gm::fit(instance.samples, 2, {});
    CHECK(fit.params.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((fit.params.weights.array() >= 0.0).all());
    for (const auto& c : fit.params.diag_covs) CHECK((c.array() >= 0.0).all());

    const auto rep = ist::simulate::evaluate_fit(instance, fit.params);
    CHECK(rep.accuracy >= 0.9);
}

TEST_CASE("fit rejects out-of-range component counts") {
    Eigen::MatrixXd samples(10, 6);
    samples.setRandom();
    try {
        gm::fit(samples, 3, {});
        FAIL("expected a bound error");
    } catch (const ist::InputError& e) {
        CHECK(std::string(e.what()).find("d/2-1") != std::string::npos);
    }
}

TEST_CASE("log_density closed form and stability") {
    gm::GmmParams p;
    p.d = 4;
    p.r = 1;
    p.weights = Eigen::VectorXd::Ones(1);
    p.means = {Eigen::VectorXd::Zero(4)};
    Eigen::VectorXd var(4);
    var << 1.0, 2.0, 0.5, 1.0;
    p.diag_covs = {var};

    const auto at_mean = gm::log_density(p, Eigen::VectorXd::Zero(4));
    double expect = -2.0 * std::log(2.0 * 3.14159265358979323846);
    for (int j = 0; j < 4; ++j) expect -= 0.5 * std::log(var(j));
    CHECK(at_mean(0) == doctest::Approx(expect).epsilon(1e-12));

    // two identical components score identically
    gm::GmmParams twin;
    twin.d = 4;
    twin.r = 2;
    twin.weights = Eigen::VectorXd::Constant(2, 0.5);
    twin.means = {p.means[0], p.means[0]};
    twin.diag_covs = {var, var};
    CounterRng rng(8);
    const Eigen::VectorXd y = oracle::random_vector(rng, 4);
    const auto scores = gm::log_density(twin, y);
    CHECK(scores(0) == scores(1));

    // zero variances are floored, not fatal
    gm::GmmParams flat = p;
    flat.diag_covs = {Eigen::VectorXd::Zero(4)};
    CHECK(std::isfinite(gm::log_density(flat, y)(0)));
}

TEST_CASE("log_density matches an extended-precision evaluation") {
    CounterRng rng(1234);
    const auto p = make_params(6, 2, 88);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd y = oracle::random_vector(rng, 6);
        const auto fast = gm::log_density(p, y);
        for (int i = 0; i < 2; ++i) {
            long double acc = std::log((long double)p.weights(i));
            const double floor =
                std::max(1e-8, 1e-3 * p.diag_covs[static_cast<std::size_t>(i)].maxCoeff());
            for (int j = 0; j < 6; ++j) {
                const long double var =
                    std::max(p.diag_covs[static_cast<std::size_t>(i)](j), floor);
                const long double diff = y(j) - p.means[static_cast<std::size_t>(i)](j);
                acc += -0.5L * (std::log(2.0L * 3.141592653589793238462643L * var) +
                                diff * diff / var);
            }
            CHECK(std::abs(fast(i) - static_cast<double>(acc)) < 1e-12 * std::abs(acc));
        }
    }
}

TEST_CASE("parameter error scales linearly with moment noise") {
    const auto p = make_params(20, 3, 909);
    const auto mp = gm::exact_moments(p);

    CounterRng rng(55);
    ist::SymTensor3<double> dir(20);
    for (auto& v : dir.packed()) v = rng.normal();
    const double dir_norm = hs_norm(dir);

    double errs[2];
    int idx = 0;
    for (double eps : {1e-3, 1e-4}) {
        gm::MomentPair noisy{mp.m1, mp.m3, mp.n_samples};
        auto dst = noisy.m3.packed();
        const auto src = dir.packed();
        for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += eps / dir_norm * src[t];
        const auto fit = gm::fit_moments(noisy, 3, {});
        const auto align = ist::align::align_gmm(fit.params, p);
        errs[idx++] = std::max({align.max_weight_error, align.max_mean_error, align.max_cov_error});
    }
    const double ratio = errs[0] / errs[1];
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 30.0);
}
