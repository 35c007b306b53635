#ifndef IST_SIMULATE_HPP
#define IST_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ist/gmm.hpp"
#include "ist/symtensor.hpp"

namespace ist::simulate {

struct TensorTrial {
    OmegaTensor<double> exact;
    OmegaTensor<double> perturbed;
    std::vector<Eigen::VectorXd> factors;
};

// Gaussian factors, Gaussian perturbation rescaled to exactly eps in the
// ordered-count norm.
TensorTrial gen_tensor_trial(int d, int r, double eps, std::uint64_t seed);

struct SynthInstance {
    gmm::GmmParams params;
    std::vector<int> labels;
    Eigen::MatrixXd samples; // N x d
    std::uint64_t seed = 0;
};

// Weights are the empirical frequencies of N uniform component draws, the
// covariance diagonals are squared Gaussians, the means are Gaussian scaled
// by mean_scale, and sample t comes from component labels[t].
SynthInstance gen_gmm_instance(int d, int r, std::size_t n, std::uint64_t seed,
                               double mean_scale = 1.0);

struct TrialReport {
    double rel_error = 0.0;
    double abs_error = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
    bool failed = false;
};

// Aligns fitted components to the truth by mean distances, classifies every
// sample under the requested scoring rule, and reports the match rate.
TrialReport evaluate_fit(const SynthInstance& instance, const gmm::GmmParams& fitted,
                         gmm::ScoreMode mode = gmm::ScoreMode::likelihood);

struct Table1Summary {
    int d = 0, r = 0, trials = 0;
    double eps = 0.0;
    double rel_min = 0.0, rel_mean = 0.0, rel_max = 0.0;
    double abs_min = 0.0, abs_mean = 0.0, abs_max = 0.0;
    double mean_seconds = 0.0;
    std::vector<TrialReport> rows;
};

Table1Summary run_table1(int d, int r, double eps, int trials, std::uint64_t seed,
                         int threads = 1, bool refine = true);

struct Table2Summary {
    int d = 0, r = 0, trials = 0, failures = 0;
    std::size_t samples = 0;
    double mean_accuracy = 0.0;
    double mean_seconds = 0.0;
    std::vector<TrialReport> rows;
};

Table2Summary run_table2(int d, int r, std::size_t n, int trials, std::uint64_t seed,
                         double mean_scale = 1.0,
                         gmm::ScoreMode mode = gmm::ScoreMode::likelihood, int threads = 1);

} // namespace ist::simulate

#endif
