#ifndef IST_DECOMP_HPP
#define IST_DECOMP_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ist/numkit.hpp"
#include "ist/symtensor.hpp"

namespace ist::decomp {

// Columns of the generating matrix, one per monomial x_i x_j with
// i in [1..r], j in [r+1..n] (labels, n = d-1).
struct GeneratingMatrix {
    int r = 0;
    int n = 0;
    Eigen::MatrixXcd cols; // r x (r*(n-r))
    bool rank_deficient = false;

    int pair_index(int i, int j) const { return (j - r - 1) * r + (i - 1); }
    Eigen::VectorXcd column(int i, int j) const { return cols.col(pair_index(i, j)); }
};

// Coefficients of the generic combination N(xi) = sum_l xi_l N_l. When xi is
// not given explicitly it is drawn uniform on [-1,1] from the seed.
struct ProjectionConfig {
    std::optional<Eigen::VectorXd> xi;
    std::uint64_t seed = 0;
};

struct EigenBundle {
    Eigen::MatrixXcd vtilde; // r x r, unit columns, phase-normalized
    Eigen::MatrixXcd wtilde; // (n-r) x r, Rayleigh quotients per slice
    // smallest pairwise eigenvalue gap of N(xi), relative to the largest
    // eigenvalue modulus; small gaps amplify input noise into the
    // eigenvectors, so the pipeline redraws xi when this is below 1e-2
    double min_gap_ratio = std::numeric_limits<double>::infinity();
    bool repeated_eigenvalues = false; // gap at rounding level: condition (iv) fails
};

struct ScalarFit {
    Eigen::VectorXcd beta;   // lambda_k * gamma_k
    Eigen::VectorXcd theta;  // lambda_k * gamma_k^2
    Eigen::VectorXcd lambda;
    Eigen::VectorXcd gamma;
};

struct Decomposition {
    int r = 0;
    std::vector<Eigen::VectorXcd> vectors; // deterministic order
    Eigen::VectorXcd lambda;               // stage-3 diagnostics, same order
    Eigen::VectorXcd gamma;
    double omega_residual = 0.0;
    bool degenerate = false;   // some column system was rank-deficient
    bool refine_failed = false; // refinement did not improve and was dropped
};

// Throws InputError unless 1 <= r <= d/2 - 1.
void check_rank_bound(int d, int r);

template <class T>
numkit::LsqSystem<T> build_system(const OmegaTensor<T>& f, int r, int i, int j);

template <class T>
GeneratingMatrix solve_generating_matrix(const OmegaTensor<T>& f, int r);

// Solves the already-built per-column systems; used when the systems come
// from somewhere other than a stored tensor.
GeneratingMatrix solve_generating_matrix(int r, int n,
                                         const std::vector<numkit::LsqSystem<cdouble>>& systems);

Eigen::MatrixXcd assemble_N(const GeneratingMatrix& g, int l);

// Single projection attempt; flags repeated eigenvalues instead of retrying.
EigenBundle joint_eigen(const GeneratingMatrix& g, const ProjectionConfig& cfg);

template <class T>
ScalarFit fit_scalars(const OmegaTensor<T>& f, const EigenBundle& eb);

template <class T>
Decomposition decompose(const OmegaTensor<T>& f, int r, const ProjectionConfig& cfg = {});

struct ApproxOptions {
    bool refine = true;
    numkit::LmOptions lm;
};

template <class T>
Decomposition approximate(const OmegaTensor<T>& fhat, int r, const ProjectionConfig& cfg = {},
                          const ApproxOptions& opts = {});

// Remark-style rank estimate from the two maximal balanced flattening views.
template <class T>
int estimate_rank(const OmegaTensor<T>& f, double tol = 1e-6);

// || sum_k p_k^x3 - f ||_Omega (ordered count)
template <class T>
double omega_residual(const OmegaTensor<T>& f, const std::vector<Eigen::VectorXcd>& factors);

} // namespace ist::decomp

#endif
