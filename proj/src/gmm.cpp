#include "ist/gmm.hpp"

#include <cmath>
#include <limits>

#include "ist/detail/realify.hpp"
#include "ist/kernels.hpp"

namespace ist::gmm {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
// The covariance fit can return exact zeros for small variances; evaluating
// a density with a near-zero variance swings the log-likelihood by 1e8 and
// silences the whole component. Floor each variance at 1e-3 of its
// component's largest variance (1e-8 absolute minimum) during evaluation.
constexpr double kVarFloorAbs = 1e-8;
constexpr double kVarFloorRel = 1e-3;

void check_params(const GmmParams& p) {
    if (p.d < 1 || p.r < 1) throw InputError("mixture needs d >= 1 and r >= 1");
    if (p.weights.size() != p.r || static_cast<int>(p.means.size()) != p.r ||
        static_cast<int>(p.diag_covs.size()) != p.r)
        throw InputError("mixture parameter blocks disagree on the component count");
    for (const auto& m : p.means)
        if (m.size() != p.d) throw InputError("mean vector length does not match dimension");
    for (const auto& c : p.diag_covs) {
        if (c.size() != p.d) throw InputError("covariance vector length does not match dimension");
        if ((c.array() < 0.0).any()) throw InputError("diagonal covariances must be nonnegative");
    }
}

} // namespace

MomentPair sample_moments(const Eigen::MatrixXd& samples) {
    const Eigen::Index n = samples.rows();
    const int d = static_cast<int>(samples.cols());
    if (n < 1) throw InputError("need at least one sample");
    if (d < 4) throw InputError("moment pipeline needs dimension d >= 4");
    if (!samples.allFinite()) throw InputError("samples contain non-finite values");

    MomentPair mp{Eigen::VectorXd::Zero(d), SymTensor3<double>(d), static_cast<std::size_t>(n)};
    auto m3 = mp.m3.packed();
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int a = 0; a < d; ++a) row[static_cast<std::size_t>(a)] = samples(t, a);
        kernels::axpy(static_cast<std::size_t>(d), 1.0, row.data(), mp.m1.data());
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double c = row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
                kernels::axpy(static_cast<std::size_t>(d - j), c, row.data() + j,
                              m3.data() + mp.m3.run_offset(i, j));
            }
    }
    const double inv = 1.0 / static_cast<double>(n);
    mp.m1 *= inv;
    for (auto& v : m3) v *= inv;
    return mp;
}

MomentPair exact_moments(const GmmParams& params) {
    check_params(params);
    const int d = params.d;
    MomentPair mp{Eigen::VectorXd::Zero(d), SymTensor3<double>(d), 0};
    for (int i = 0; i < params.r; ++i) {
        mp.m1 += params.weights(i) * params.means[static_cast<std::size_t>(i)];
        add_rank_one(mp.m3, params.weights(i), params.means[static_cast<std::size_t>(i)]);
    }
    // a_j = sum_i w_i sigma_ij^2 mu_i populates the repeated-index entries
    Eigen::MatrixXd a(d, d); // column j = a_j
    a.setZero();
    for (int i = 0; i < params.r; ++i)
        for (int j = 0; j < d; ++j)
            a.col(j) += params.weights(i) * params.diag_covs[static_cast<std::size_t>(i)](j) *
                        params.means[static_cast<std::size_t>(i)];
    auto vals = mp.m3.packed();
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int k = j; k < d; ++k, ++idx) {
                if (i == j && j == k)
                    vals[idx] += 3.0 * a(i, i);
                else if (i == j)
                    vals[idx] += a(k, i);
                else if (j == k)
                    vals[idx] += a(i, j);
            }
    return mp;
}

Eigen::VectorXd realify(const Eigen::VectorXcd& p) { return detail::realify_min_imag(p); }

WeightsMeans recover_weights(const Eigen::VectorXd& m1, const std::vector<Eigen::VectorXd>& q) {
    const int r = static_cast<int>(q.size());
    if (r < 1) throw InputError("need at least one factor");
    const int d = static_cast<int>(m1.size());
    Eigen::MatrixXd design(d, r);
    for (int i = 0; i < r; ++i) design.col(i) = q[static_cast<std::size_t>(i)];
    if (numkit::numeric_rank(design).rank < r)
        throw NumericalError("realified factors are not linearly independent");

    const auto sol = numkit::nnls({design, m1});
    WeightsMeans out;
    out.weights.resize(r);
    out.means.resize(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        const double beta = sol.x(i);
        if (beta <= 0.0)
            throw NumericalError("component " + std::to_string(i + 1) +
                                 " has zero weight in the first-moment fit");
        out.weights(i) = std::pow(beta, 1.5);
        out.means[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)] / std::sqrt(beta);
    }
    return out;
}

namespace {

// objective = ||sum w_i mu_i - m1||^2 + 6 * sum_{i<j<k} (model - data)^2
class RefineObjective {
public:
    RefineObjective(const Eigen::VectorXd& m1, const OmegaTensor<double>& f, int r)
        : m1_(m1), f_(f), r_(r), d_(f.dim()) {}

    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
        grad.setZero(x.size());
        const auto w = x.head(r_);
        Eigen::VectorXd m1res = -m1_;
        for (int i = 0; i < r_; ++i) m1res += w(i) * mean(x, i);

        OmegaTensor<double> model(d_);
        for (int i = 0; i < r_; ++i) add_rank_one(model, w(i), Eigen::VectorXd(mean(x, i)));
        auto mv = model.packed();
        const auto dv = f_.packed();
        Eigen::VectorXd resid(static_cast<Eigen::Index>(mv.size()));
        for (std::size_t t = 0; t < mv.size(); ++t)
            resid(static_cast<Eigen::Index>(t)) = mv[t] - dv[t];

        const double obj = m1res.squaredNorm() + 6.0 * resid.squaredNorm();

        for (int i = 0; i < r_; ++i) {
            const auto mu = mean(x, i);
            // weight gradient
            double gw = 2.0 * m1res.dot(mu);
            std::size_t idx = 0;
            for (int a = 0; a + 2 < d_; ++a)
                for (int b = a + 1; b + 1 < d_; ++b) {
                    const double c = mu(a) * mu(b);
                    const std::size_t len = static_cast<std::size_t>(d_ - 1 - b);
                    gw += 12.0 * c *
                          kernels::dot(len, resid.data() + idx, mu.data() + b + 1);
                    idx += len;
                }
            grad(i) += gw;
            // mean gradient
            auto gm = grad.segment(r_ + static_cast<Eigen::Index>(i) * d_, d_);
            gm += 2.0 * w(i) * m1res;
            idx = 0;
            for (int a = 0; a + 2 < d_; ++a)
                for (int b = a + 1; b + 1 < d_; ++b)
                    for (int c = b + 1; c < d_; ++c, ++idx) {
                        const double v = 12.0 * w(i) * resid(static_cast<Eigen::Index>(idx));
                        gm(a) += v * mu(b) * mu(c);
                        gm(b) += v * mu(a) * mu(c);
                        gm(c) += v * mu(a) * mu(b);
                    }
        }
        return obj;
    }

    Eigen::Map<const Eigen::VectorXd> mean(const Eigen::VectorXd& x, int i) const {
        return {x.data() + r_ + static_cast<Eigen::Index>(i) * d_, d_};
    }

private:
    const Eigen::VectorXd& m1_;
    const OmegaTensor<double>& f_;
    int r_;
    int d_;
};

} // namespace

RefineResult joint_refine(const Eigen::VectorXd& m1hat, const OmegaTensor<double>& f_omega,
                          const WeightsMeans& start, const numkit::SimplexOptions& opts) {
    const int r = static_cast<int>(start.weights.size());
    const int d = f_omega.dim();
    Eigen::VectorXd x0(r + static_cast<Eigen::Index>(r) * d);
    const double wsum = start.weights.sum();
    if (wsum <= 0.0) throw NumericalError("weights sum to zero entering refinement");
    x0.head(r) = start.weights / wsum;
    for (int i = 0; i < r; ++i)
        x0.segment(r + static_cast<Eigen::Index>(i) * d, d) = start.means[static_cast<std::size_t>(i)];

    RefineObjective objective(m1hat, f_omega, r);
    RefineResult out;
    try {
        const auto sol = numkit::simplex_minimize(
            [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return objective(x, g); }, x0, r,
            opts);
        out.wm.weights = sol.x.head(r);
        out.wm.means.resize(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i)
            out.wm.means[static_cast<std::size_t>(i)] =
                sol.x.segment(r + static_cast<Eigen::Index>(i) * d, d);
        out.objective = sol.objective;
    } catch (const std::exception&) {
        out.wm.weights = x0.head(r);
        out.wm.means = start.means;
        out.wm.refine_failed = true;
        Eigen::VectorXd g(x0.size());
        out.objective = objective(x0, g);
    }
    return out;
}

CovarianceResult recover_covariances(const SymTensor3<double>& m3hat,
                                     const Eigen::VectorXd& weights,
                                     const std::vector<Eigen::VectorXd>& means,
                                     const std::vector<Eigen::VectorXd>& q) {
    const int d = m3hat.dim();
    const int r = static_cast<int>(q.size());

    SymTensor3<double> recon(d);
    for (const auto& qi : q) add_rank_one(recon, 1.0, qi);

    Eigen::MatrixXd design(d, r);
    for (int i = 0; i < r; ++i) design.col(i) = weights(i) * means[static_cast<std::size_t>(i)];

    CovarianceResult out;
    out.rank_deficient = numkit::numeric_rank(design).rank < r;
    out.diag_covs.assign(static_cast<std::size_t>(r), Eigen::VectorXd::Zero(d));

    Eigen::VectorXd aj(d);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            if (i == j)
                aj(i) = (m3hat(j, j, j) - recon(j, j, j)) / 3.0;
            else
                aj(i) = m3hat(j, i, j) - recon(j, i, j);
        }
        const auto sol = numkit::nnls({design, aj});
        if (sol.rank_deficient) out.rank_deficient = true;
        for (int i = 0; i < r; ++i) out.diag_covs[static_cast<std::size_t>(i)](j) = sol.x(i);
    }
    return out;
}

FitResult fit_moments(const MomentPair& moments, int r, const FitOptions& opts) {
    const int d = static_cast<int>(moments.m1.size());
    decomp::check_rank_bound(d, r);

    const OmegaTensor<double> f_omega = omega_extract(moments.m3);

    decomp::ApproxOptions aopts;
    aopts.refine = opts.refine;
    aopts.lm = opts.lm;

    // Factors can come back as complex-conjugate pairs on noisy input, which
    // realify to the same real vector. A fresh projection usually separates
    // them, so retry the decomposition a few times before giving up.
    decomp::Decomposition dec;
    std::vector<Eigen::VectorXd> q(static_cast<std::size_t>(r));
    bool independent = false;
    for (int attempt = 0; attempt <= 3 && !independent; ++attempt) {
        decomp::ProjectionConfig cfg;
        cfg.seed = opts.seed + 0x51f1u * static_cast<std::uint64_t>(attempt);
        dec = decomp::approximate(f_omega, r, cfg, aopts);
        for (int i = 0; i < r; ++i)
            q[static_cast<std::size_t>(i)] = realify(dec.vectors[static_cast<std::size_t>(i)]);
        Eigen::MatrixXd design(d, r);
        for (int i = 0; i < r; ++i) design.col(i) = q[static_cast<std::size_t>(i)];
        independent = numkit::numeric_rank(design).rank == r;
    }
    if (!independent)
        throw NumericalError("realified factors stay linearly dependent after projection retries");

    WeightsMeans wm = recover_weights(moments.m1, q);

    RefineResult refined;
    if (opts.refine) {
        refined = joint_refine(moments.m1, f_omega, wm, opts.simplex);
    } else {
        refined.wm.weights = wm.weights / wm.weights.sum();
        refined.wm.means = wm.means;
        Eigen::VectorXd g;
        // objective reported even when refinement is skipped
        RefineObjective objective(moments.m1, f_omega, r);
        Eigen::VectorXd x0(r + static_cast<Eigen::Index>(r) * d);
        x0.head(r) = refined.wm.weights;
        for (int i = 0; i < r; ++i)
            x0.segment(r + static_cast<Eigen::Index>(i) * d, d) = refined.wm.means[static_cast<std::size_t>(i)];
        g.resize(x0.size());
        refined.objective = objective(x0, g);
    }

    const CovarianceResult covs =
        recover_covariances(moments.m3, refined.wm.weights, refined.wm.means, q);

    FitResult out;
    out.params.d = d;
    out.params.r = r;
    out.params.weights = refined.wm.weights;
    out.params.means = refined.wm.means;
    out.params.diag_covs = covs.diag_covs;
    out.diagnostics.omega_residual = dec.omega_residual;
    out.diagnostics.objective = refined.objective;
    out.diagnostics.degenerate =
        dec.degenerate || dec.refine_failed || covs.rank_deficient || refined.wm.refine_failed;
    return out;
}

FitResult fit(const Eigen::MatrixXd& samples, int r, const FitOptions& opts) {
    decomp::check_rank_bound(static_cast<int>(samples.cols()), r);
    return fit_moments(sample_moments(samples), r, opts);
}

Eigen::VectorXd log_density(const GmmParams& params, const Eigen::VectorXd& y) {
    if (y.size() != params.d) throw InputError("point length does not match dimension");
    const DensityScorer scorer(params, ScoreMode::posterior);
    return scorer(y.data());
}

DensityScorer::DensityScorer(const GmmParams& params, ScoreMode mode)
    : d_(params.d), r_(params.r), consts_(params.r), means_(params.d, params.r),
      inv_vars_(params.d, params.r) {
    check_params(params);
    for (int i = 0; i < r_; ++i) {
        means_.col(i) = params.means[static_cast<std::size_t>(i)];
        const double floor = std::max(
            kVarFloorAbs, kVarFloorRel * params.diag_covs[static_cast<std::size_t>(i)].maxCoeff());
        double log_det = 0.0;
        for (int j = 0; j < d_; ++j) {
            const double var = std::max(params.diag_covs[static_cast<std::size_t>(i)](j), floor);
            inv_vars_(j, i) = 1.0 / var;
            log_det += std::log(var);
        }
        consts_(i) = -0.5 * (d_ * kLogTwoPi + log_det);
        if (mode == ScoreMode::posterior)
            consts_(i) += std::log(std::max(params.weights(i), 1e-300));
    }
}

Eigen::VectorXd DensityScorer::operator()(const double* y) const {
    Eigen::VectorXd out(r_);
    for (int i = 0; i < r_; ++i)
        out(i) = consts_(i) - 0.5 * kernels::quadform_diag(static_cast<std::size_t>(d_), y,
                                                           means_.col(i).data(),
                                                           inv_vars_.col(i).data());
    return out;
}

int DensityScorer::best_component(const double* y) const {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < r_; ++i) {
        const double s = consts_(i) - 0.5 * kernels::quadform_diag(static_cast<std::size_t>(d_), y,
                                                                   means_.col(i).data(),
                                                                   inv_vars_.col(i).data());
        if (s > best) {
            best = s;
            arg = i;
        }
    }
    return arg;
}

} // namespace ist::gmm
