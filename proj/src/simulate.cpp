#include "ist/simulate.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "ist/align.hpp"
#include "ist/decomp.hpp"
#include "ist/rng.hpp"

namespace ist::simulate {
namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs fn(trial) for trial = 0..trials-1 over the requested worker count;
// each trial writes only its own slot, aggregation stays in trial order.
template <class Fn>
void for_each_trial(int trials, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, trials));
    if (threads == 1) {
        for (int t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (int t = w; t < trials; t += threads) fn(t);
        });
    for (auto& th : pool) th.join();
}

} // namespace

TensorTrial gen_tensor_trial(int d, int r, double eps, std::uint64_t seed) {
    decomp::check_rank_bound(d, r);
    if (eps < 0.0) throw InputError("perturbation norm must be nonnegative");

    CounterRng rng(seed, /*stream=*/1);
    std::vector<Eigen::VectorXd> factors(static_cast<std::size_t>(r));
    for (auto& p : factors) {
        p.resize(d);
        for (int t = 0; t < d; ++t) p(t) = rng.normal();
    }

    OmegaTensor<double> exact(d);
    for (const auto& p : factors) add_rank_one(exact, 1.0, p);

    OmegaTensor<double> perturbed = exact;
    if (eps > 0.0) {
        CounterRng prng(seed, /*stream=*/2);
        OmegaTensor<double> noise(d);
        for (auto& v : noise.packed()) v = prng.normal();
        const double norm = omega_norm(noise);
        if (norm > 0.0) {
            const double scale = eps / norm;
            auto pv = perturbed.packed();
            const auto nv = noise.packed();
            for (std::size_t t = 0; t < pv.size(); ++t) pv[t] += scale * nv[t];
        }
    }
    return {std::move(exact), std::move(perturbed), std::move(factors)};
}

SynthInstance gen_gmm_instance(int d, int r, std::size_t n, std::uint64_t seed,
                               double mean_scale) {
    decomp::check_rank_bound(d, r);
    if (n < 1) throw InputError("need at least one sample");

    SynthInstance out;
    out.seed = seed;

    CounterRng label_rng(seed, /*stream=*/3);
    out.labels.resize(n);
    std::vector<std::size_t> counts(static_cast<std::size_t>(r), 0);
    for (auto& l : out.labels) {
        l = static_cast<int>(label_rng.below(static_cast<std::uint64_t>(r)));
        ++counts[static_cast<std::size_t>(l)];
    }

    out.params.d = d;
    out.params.r = r;
    out.params.weights.resize(r);
    double partial = 0.0;
    for (int i = 0; i + 1 < r; ++i) {
        out.params.weights(i) =
            static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(n);
        partial += out.params.weights(i);
    }
    out.params.weights(r - 1) = 1.0 - partial; // frequencies sum to one exactly

    CounterRng param_rng(seed, /*stream=*/4);
    out.params.means.resize(static_cast<std::size_t>(r));
    out.params.diag_covs.resize(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        auto& mu = out.params.means[static_cast<std::size_t>(i)];
        auto& var = out.params.diag_covs[static_cast<std::size_t>(i)];
        mu.resize(d);
        var.resize(d);
        for (int t = 0; t < d; ++t) mu(t) = mean_scale * param_rng.normal();
        for (int t = 0; t < d; ++t) {
            const double g = param_rng.normal();
            var(t) = g * g;
        }
    }

    CounterRng sample_rng(seed, /*stream=*/5);
    out.samples.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t t = 0; t < n; ++t) {
        const int l = out.labels[t];
        const auto& mu = out.params.means[static_cast<std::size_t>(l)];
        const auto& var = out.params.diag_covs[static_cast<std::size_t>(l)];
        for (int a = 0; a < d; ++a)
            out.samples(static_cast<Eigen::Index>(t), a) =
                mu(a) + std::sqrt(var(a)) * sample_rng.normal();
    }
    return out;
}

TrialReport evaluate_fit(const SynthInstance& instance, const gmm::GmmParams& fitted,
                         gmm::ScoreMode mode) {
    if (fitted.r != instance.params.r)
        throw InputError("fitted component count does not match the instance");
    const auto alignment = align::align_gmm(fitted, instance.params);

    const gmm::DensityScorer scorer(fitted, mode);
    const Eigen::Index n = instance.samples.rows();
    const int d = instance.params.d;
    std::vector<double> row(static_cast<std::size_t>(d));
    std::size_t hits = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int a = 0; a < d; ++a) row[static_cast<std::size_t>(a)] = instance.samples(t, a);
        const int best = scorer.best_component(row.data());
        if (alignment.perm[static_cast<std::size_t>(best)] ==
            instance.labels[static_cast<std::size_t>(t)])
            ++hits;
    }
    TrialReport rep;
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(n);
    return rep;
}

Table1Summary run_table1(int d, int r, double eps, int trials, std::uint64_t seed, int threads,
                         bool refine) {
    decomp::check_rank_bound(d, r);
    if (eps < 0.0) throw InputError("perturbation norm must be nonnegative");
    Table1Summary sum;
    sum.d = d;
    sum.r = r;
    sum.eps = eps;
    sum.trials = trials;
    if (trials <= 0) return sum;
    sum.rows.resize(static_cast<std::size_t>(trials));

    for_each_trial(trials, threads, [&](int t) {
        TrialReport rep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const TensorTrial trial =
                gen_tensor_trial(d, r, eps, seed + static_cast<std::uint64_t>(t));
            const auto t1 = std::chrono::steady_clock::now();
            decomp::ProjectionConfig cfg;
            cfg.seed = seed + static_cast<std::uint64_t>(t);
            decomp::ApproxOptions opts;
            opts.refine = refine;
            const auto dec = decomp::approximate(trial.perturbed, r, cfg, opts);
            rep.seconds = seconds_since(t1);
            rep.abs_error = decomp::omega_residual(trial.exact, dec.vectors);
            rep.rel_error = eps > 0.0 ? dec.omega_residual / eps : 0.0;
        } catch (const std::exception&) {
            rep.seconds = seconds_since(t0);
            rep.failed = true;
        }
        sum.rows[static_cast<std::size_t>(t)] = rep;
    });

    bool first = true;
    int ok = 0;
    for (const auto& rep : sum.rows) {
        if (rep.failed) continue;
        ++ok;
        sum.rel_mean += rep.rel_error;
        sum.abs_mean += rep.abs_error;
        sum.mean_seconds += rep.seconds;
        if (first) {
            sum.rel_min = sum.rel_max = rep.rel_error;
            sum.abs_min = sum.abs_max = rep.abs_error;
            first = false;
        } else {
            sum.rel_min = std::min(sum.rel_min, rep.rel_error);
            sum.rel_max = std::max(sum.rel_max, rep.rel_error);
            sum.abs_min = std::min(sum.abs_min, rep.abs_error);
            sum.abs_max = std::max(sum.abs_max, rep.abs_error);
        }
    }
    if (ok > 0) {
        sum.rel_mean /= ok;
        sum.abs_mean /= ok;
        sum.mean_seconds /= ok;
    }
    return sum;
}

Table2Summary run_table2(int d, int r, std::size_t n, int trials, std::uint64_t seed,
                         double mean_scale, gmm::ScoreMode mode, int threads) {
    decomp::check_rank_bound(d, r);
    if (n < 1) throw InputError("need at least one sample per trial");
    Table2Summary sum;
    sum.d = d;
    sum.r = r;
    sum.samples = n;
    sum.trials = trials;
    if (trials <= 0) return sum;
    sum.rows.resize(static_cast<std::size_t>(trials));

    for_each_trial(trials, threads, [&](int t) {
        TrialReport rep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const SynthInstance instance =
                gen_gmm_instance(d, r, n, seed + static_cast<std::uint64_t>(t), mean_scale);
            const auto t1 = std::chrono::steady_clock::now();
            gmm::FitOptions opts;
            opts.seed = seed + static_cast<std::uint64_t>(t);
            const auto fitted = gmm::fit(instance.samples, r, opts);
            rep.seconds = seconds_since(t1);
            rep.accuracy = evaluate_fit(instance, fitted.params, mode).accuracy;
        } catch (const std::exception&) {
            rep.seconds = seconds_since(t0);
            rep.failed = true;
        }
        sum.rows[static_cast<std::size_t>(t)] = rep;
    });

    int ok = 0;
    for (const auto& rep : sum.rows) {
        if (rep.failed) {
            ++sum.failures;
            continue;
        }
        ++ok;
        sum.mean_accuracy += rep.accuracy;
        sum.mean_seconds += rep.seconds;
    }
    if (ok > 0) {
        sum.mean_accuracy /= ok;
        sum.mean_seconds /= ok;
    }
    return sum;
}

} // namespace ist::simulate
