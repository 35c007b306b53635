#ifndef IST_ALIGN_HPP
#define IST_ALIGN_HPP

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "ist/gmm.hpp"

namespace ist::align {

// Minimum-cost assignment for a square cost matrix; returns the column
// matched to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct FactorAlignment {
    std::vector<int> perm;              // est index -> truth index
    std::vector<std::complex<double>> tau; // cube root of unity per est factor
    double max_error = 0.0;             // max_k || tau_k est_k - truth_perm[k] ||
};

// Aligns estimated factors to reference factors up to permutation and cube
// roots of unity.
FactorAlignment align_factors(const std::vector<Eigen::VectorXcd>& est,
                              const std::vector<Eigen::VectorXcd>& truth);

struct GmmAlignment {
    std::vector<int> perm; // fitted index -> truth index
    double max_weight_error = 0.0;
    double max_mean_error = 0.0;
    double max_cov_error = 0.0;
};

// Hungarian assignment on mean distances, then per-parameter errors.
GmmAlignment align_gmm(const gmm::GmmParams& fitted, const gmm::GmmParams& truth);

} // namespace ist::align

#endif
