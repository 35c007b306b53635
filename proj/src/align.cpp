#include "ist/align.hpp"

#include <cmath>
#include <limits>

#include "ist/errors.hpp"

namespace ist::align {

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw InputError("assignment needs a square cost matrix");
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();

    // potentials over rows/columns with a 1-based sentinel column 0
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0); // column -> row
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (match[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return row_to_col;
}

namespace {

const std::complex<double> kRoots[3] = {
    {1.0, 0.0},
    {-0.5, 0.8660254037844386467637232},
    {-0.5, -0.8660254037844386467637232},
};

double best_tau_dist(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                     std::complex<double>* tau_out) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tau : kRoots) {
        const double dist = (tau * a - b).norm();
        if (dist < best) {
            best = dist;
            if (tau_out != nullptr) *tau_out = tau;
        }
    }
    return best;
}

} // namespace

FactorAlignment align_factors(const std::vector<Eigen::VectorXcd>& est,
                              const std::vector<Eigen::VectorXcd>& truth) {
    if (est.size() != truth.size()) throw InputError("factor counts differ");
    const int r = static_cast<int>(est.size());
    Eigen::MatrixXd cost(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            cost(i, j) = best_tau_dist(est[static_cast<std::size_t>(i)],
                                       truth[static_cast<std::size_t>(j)], nullptr);
    FactorAlignment out;
    out.perm = hungarian(cost);
    out.tau.resize(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        const double dist = best_tau_dist(est[static_cast<std::size_t>(i)],
                                          truth[static_cast<std::size_t>(out.perm[static_cast<std::size_t>(i)])],
                                          &out.tau[static_cast<std::size_t>(i)]);
        out.max_error = std::max(out.max_error, dist);
    }
    return out;
}

GmmAlignment align_gmm(const gmm::GmmParams& fitted, const gmm::GmmParams& truth) {
    if (fitted.r != truth.r) throw InputError("component counts differ");
    const int r = fitted.r;
    Eigen::MatrixXd cost(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            cost(i, j) = (fitted.means[static_cast<std::size_t>(i)] -
                          truth.means[static_cast<std::size_t>(j)])
                             .norm();
    GmmAlignment out;
    out.perm = hungarian(cost);
    for (int i = 0; i < r; ++i) {
        const int j = out.perm[static_cast<std::size_t>(i)];
        out.max_weight_error =
            std::max(out.max_weight_error, std::abs(fitted.weights(i) - truth.weights(j)));
        out.max_mean_error = std::max(out.max_mean_error, cost(i, j));
        out.max_cov_error = std::max(out.max_cov_error,
                                     (fitted.diag_covs[static_cast<std::size_t>(i)] -
                                      truth.diag_covs[static_cast<std::size_t>(j)])
                                         .lpNorm<Eigen::Infinity>());
    }
    return out;
}

} // namespace ist::align
