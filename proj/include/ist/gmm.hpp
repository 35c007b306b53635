#ifndef IST_GMM_HPP
#define IST_GMM_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ist/decomp.hpp"
#include "ist/symtensor.hpp"

namespace ist::gmm {

struct MomentPair {
    Eigen::VectorXd m1;
    SymTensor3<double> m3;
    std::size_t n_samples = 0;
};

struct GmmParams {
    int d = 0;
    int r = 0;
    Eigen::VectorXd weights;               // on the probability simplex
    std::vector<Eigen::VectorXd> means;    // r vectors of length d
    std::vector<Eigen::VectorXd> diag_covs; // r nonnegative vectors of length d
};

// First and third sample moments, accumulated in sample order, one value per
// unordered multiset.
MomentPair sample_moments(const Eigen::MatrixXd& samples);

// Population moments of a diagonal mixture; the noise-free reference for the
// whole learning pipeline.
MomentPair exact_moments(const GmmParams& params);

// Re(tau * p) over cube roots of unity, minimizing the imaginary part.
Eigen::VectorXd realify(const Eigen::VectorXcd& p);

struct WeightsMeans {
    Eigen::VectorXd weights; // not normalized by recover_weights
    std::vector<Eigen::VectorXd> means;
    bool refine_failed = false;
};

// Nonnegative fit of m1 against the realified factors: weights = beta^(3/2),
// means = q / sqrt(beta).
WeightsMeans recover_weights(const Eigen::VectorXd& m1, const std::vector<Eigen::VectorXd>& q);

struct RefineResult {
    WeightsMeans wm;
    double objective = 0.0;
};

// Joint moment-matching refinement over simplex weights and free means.
RefineResult joint_refine(const Eigen::VectorXd& m1hat, const OmegaTensor<double>& f_omega,
                          const WeightsMeans& start,
                          const numkit::SimplexOptions& opts = {});

struct CovarianceResult {
    std::vector<Eigen::VectorXd> diag_covs;
    bool rank_deficient = false;
};

CovarianceResult recover_covariances(const SymTensor3<double>& m3hat,
                                     const Eigen::VectorXd& weights,
                                     const std::vector<Eigen::VectorXd>& means,
                                     const std::vector<Eigen::VectorXd>& q);

struct FitOptions {
    std::uint64_t seed = 0;
    bool refine = true;
    numkit::LmOptions lm;
    numkit::SimplexOptions simplex;
};

struct FitDiagnostics {
    double omega_residual = 0.0;
    double objective = 0.0;
    bool degenerate = false;
};

struct FitResult {
    GmmParams params;
    FitDiagnostics diagnostics;
};

FitResult fit_moments(const MomentPair& moments, int r, const FitOptions& opts = {});
FitResult fit(const Eigen::MatrixXd& samples, int r, const FitOptions& opts = {});

enum class ScoreMode { likelihood, posterior };

// Per-component log omega_i + log N(y; mu_i, Sigma_i); variances are floored
// at 1e-8 inside the evaluation only.
Eigen::VectorXd log_density(const GmmParams& params, const Eigen::VectorXd& y);

// Bulk scorer for classification; precomputes the per-component constants.
class DensityScorer {
public:
    DensityScorer(const GmmParams& params, ScoreMode mode);
    // scores for one sample, length r
    Eigen::VectorXd operator()(const double* y) const;
    int best_component(const double* y) const;

private:
    int d_;
    int r_;
    Eigen::VectorXd consts_;
    Eigen::MatrixXd means_;    // d x r
    Eigen::MatrixXd inv_vars_; // d x r
};

} // namespace ist::gmm

#endif
