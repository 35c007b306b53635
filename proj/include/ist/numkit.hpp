#ifndef IST_NUMKIT_HPP
#define IST_NUMKIT_HPP

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "ist/errors.hpp"

namespace ist::numkit {

using cdouble = std::complex<double>;

template <class T>
struct LsqSystem {
    Eigen::MatrixX<T> A;
    Eigen::VectorX<T> b;
};

template <class T>
struct LsqResult {
    Eigen::VectorX<T> x;
    int rank = 0;
    bool rank_deficient = false;
};

// Minimum-norm least squares via SVD; singular values below
// rcond * sigma_max are treated as zero.
LsqResult<double> lstsq(const LsqSystem<double>& sys, double rcond = 1e-12);
LsqResult<cdouble> lstsq(const LsqSystem<cdouble>& sys, double rcond = 1e-12);

struct NnlsResult {
    Eigen::VectorXd x;
    bool rank_deficient = false;
    int iterations = 0;
};

// Lawson-Hanson active set. On return the KKT conditions hold to kkt_tol
// relative to the problem scale.
NnlsResult nnls(const LsqSystem<double>& sys, double kkt_tol = 1e-10);

struct EigenPair {
    cdouble value;
    Eigen::VectorXcd vector; // unit norm, largest-modulus entry real positive
};

struct EigResult {
    std::vector<EigenPair> pairs; // sorted by (Re, Im) of the value
    bool near_defective = false;
};

EigResult eig_general(const Eigen::MatrixXcd& m);

struct RankEstimate {
    int rank = 0;     // count of singular values > tol * sigma_max
    int gap_rank = 0; // index of the largest consecutive singular-value gap
};

RankEstimate numeric_rank(const Eigen::MatrixXcd& m, double tol = 1e-6);
RankEstimate numeric_rank(const Eigen::MatrixXd& m, double tol = 1e-6);

struct LmOptions {
    int max_iter = 200;
    double grad_tol = 1e-8;
    double step_tol = 1e-14;
    double damping0 = 1e-3;
};

struct LmResult {
    Eigen::VectorXd x;
    double objective = 0.0; // ||residual||^2
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // objective after each accepted step
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Levenberg-Marquardt with multiplicative damping (doubling on rejection).
// Throws InputError if the residual at x0 is not finite.
LmResult lm_minimize(const ResidualFn& residual, const JacobianFn& jacobian,
                     Eigen::VectorXd x0, const LmOptions& opts = {});

struct SimplexOptions {
    int max_iter = 1000;
    double pg_tol = 1e-6;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    double pg_norm = 0.0;
    int iterations = 0;
    bool projected_start = false; // x0 was infeasible and got projected
};

// f(x, grad_out) -> objective; grad_out sized like x
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Projected gradient with Armijo backtracking over a product of the
// probability simplex (first simplex_dim coordinates) and a free block.
SimplexResult simplex_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0, int simplex_dim,
                               const SimplexOptions& opts = {});

// Euclidean projection onto { w >= 0, sum w = 1 }.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

} // namespace ist::numkit

#endif
