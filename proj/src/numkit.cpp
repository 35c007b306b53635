#include "ist/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ist::numkit {
namespace {

template <class T>
LsqResult<T> lstsq_impl(const LsqSystem<T>& sys, double rcond) {
    if (sys.A.rows() != sys.b.size())
        throw InputError("least squares: A has " + std::to_string(sys.A.rows()) +
                         " rows but b has " + std::to_string(sys.b.size()));
    Eigen::JacobiSVD<Eigen::MatrixX<T>> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? rcond * sv(0) : 0.0;
    LsqResult<T> out;
    Eigen::VectorX<T> proj = svd.matrixU().adjoint() * sys.b;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut && sv(i) > 0.0) {
            proj(i) /= sv(i);
            ++out.rank;
        } else {
            proj(i) = T{};
        }
    }
    out.x = svd.matrixV() * proj;
    out.rank_deficient = out.rank < sys.A.cols();
    return out;
}

} // namespace

LsqResult<double> lstsq(const LsqSystem<double>& sys, double rcond) {
    return lstsq_impl(sys, rcond);
}

LsqResult<cdouble> lstsq(const LsqSystem<cdouble>& sys, double rcond) {
    return lstsq_impl(sys, rcond);
}

NnlsResult nnls(const LsqSystem<double>& sys, double kkt_tol) {
    if (sys.A.rows() != sys.b.size())
        throw InputError("nnls: A has " + std::to_string(sys.A.rows()) + " rows but b has " +
                         std::to_string(sys.b.size()));
    const Eigen::Index k = sys.A.cols();
    NnlsResult out;
    out.x = Eigen::VectorXd::Zero(k);
    std::vector<bool> passive(static_cast<std::size_t>(k), false);

    const double scale = std::max(1.0, (sys.A.transpose() * sys.b).cwiseAbs().maxCoeff());
    const double tol = kkt_tol * scale;
    const int max_outer = 3 * static_cast<int>(k) + 10;

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < k; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(k);
        if (idx.empty()) return;
        LsqSystem<double> sub;
        sub.A.resize(sys.A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) sub.A.col(static_cast<Eigen::Index>(c)) = sys.A.col(idx[c]);
        sub.b = sys.b;
        LsqResult<double> sol = lstsq(sub);
        if (sol.rank_deficient) out.rank_deficient = true;
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = sol.x(static_cast<Eigen::Index>(c));
    };

    for (int outer = 0; outer < max_outer; ++outer) {
        ++out.iterations;
        const Eigen::VectorXd w = sys.A.transpose() * (sys.b - sys.A * out.x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        Eigen::VectorXd z;
        solve_passive(z);
        int inner_guard = 3 * static_cast<int>(k) + 10;
        while (inner_guard-- > 0) {
            double alpha = 1.0;
            bool clipped = false;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    const double denom = out.x(j) - z(j);
                    if (denom > 0.0) {
                        alpha = std::min(alpha, out.x(j) / denom);
                        clipped = true;
                    } else {
                        alpha = 0.0;
                        clipped = true;
                    }
                }
            }
            if (!clipped) break;
            out.x += alpha * (z - out.x);
            for (Eigen::Index j = 0; j < k; ++j)
                if (passive[static_cast<std::size_t>(j)] && out.x(j) <= tol * 1e-2)
                    if (z(j) <= 0.0) {
                        passive[static_cast<std::size_t>(j)] = false;
                        out.x(j) = 0.0;
                    }
            solve_passive(z);
        }
        out.x = z;
        for (Eigen::Index j = 0; j < k; ++j)
            if (out.x(j) < 0.0) out.x(j) = 0.0;
    }
    return out;
}

EigResult eig_general(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw InputError("eigendecomposition needs a square matrix");
    const Eigen::Index k = m.rows();
    EigResult out;
    if (k == 0) return out;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, true);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition did not converge");

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    const auto& vals = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (vals(a).real() != vals(b).real()) return vals(a).real() < vals(b).real();
        return vals(a).imag() < vals(b).imag();
    });

    const double mnorm = m.norm();
    out.pairs.reserve(static_cast<std::size_t>(k));
    for (int oi : order) {
        EigenPair p;
        p.value = vals(oi);
        p.vector = solver.eigenvectors().col(oi);
        // phase-normalize: largest-modulus entry real positive
        Eigen::Index imax = 0;
        double vmax = -1.0;
        for (Eigen::Index t = 0; t < k; ++t) {
            const double a = std::abs(p.vector(t));
            if (a > vmax) {
                vmax = a;
                imax = t;
            }
        }
        if (vmax > 0.0) p.vector *= std::conj(p.vector(imax)) / vmax;
        p.vector.normalize();
        out.pairs.push_back(std::move(p));
    }
    for (std::size_t a = 0; a + 1 < out.pairs.size(); ++a)
        if (std::abs(out.pairs[a + 1].value - out.pairs[a].value) <= 1e-12 * std::max(1.0, mnorm))
            out.near_defective = true;
    return out;
}

namespace {

RankEstimate numeric_rank_impl(const Eigen::VectorXd& sv, double tol) {
    RankEstimate out;
    if (sv.size() == 0 || sv(0) <= 0.0) return out;
    const double cut = tol * sv(0);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++out.rank;
    // largest multiplicative gap between consecutive singular values
    double best_gap = 0.0;
    out.gap_rank = static_cast<int>(sv.size());
    for (Eigen::Index i = 0; i + 1 < sv.size(); ++i) {
        const double lo = std::max(sv(i + 1), 1e-300);
        const double gap = sv(i) / lo;
        if (gap > best_gap) {
            best_gap = gap;
            out.gap_rank = static_cast<int>(i) + 1;
        }
    }
    return out;
}

} // namespace

RankEstimate numeric_rank(const Eigen::MatrixXcd& m, double tol) {
    if (tol <= 0.0 || tol >= 1.0) throw InputError("rank tolerance must lie in (0,1)");
    if (m.size() == 0) return {};
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return numeric_rank_impl(svd.singularValues(), tol);
}

RankEstimate numeric_rank(const Eigen::MatrixXd& m, double tol) {
    if (tol <= 0.0 || tol >= 1.0) throw InputError("rank tolerance must lie in (0,1)");
    if (m.size() == 0) return {};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return numeric_rank_impl(svd.singularValues(), tol);
}

LmResult lm_minimize(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x0,
                     const LmOptions& opts) {
    LmResult out;
    Eigen::VectorXd r = residual(x0);
    if (!r.allFinite()) throw InputError("residual is not finite at the starting point");
    out.x = std::move(x0);
    out.objective = r.squaredNorm();

    double damping = -1.0;
    double nu = 2.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        ++out.iterations;
        const Eigen::MatrixXd J = jacobian(out.x);
        const Eigen::VectorXd g = J.transpose() * r;
        out.grad_norm = g.norm();
        if (out.grad_norm <= opts.grad_tol) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd jtj = J.transpose() * J;
        if (damping < 0.0)
            damping = opts.damping0 * std::max(jtj.diagonal().maxCoeff(), 1e-30);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd lhs = jtj;
            lhs.diagonal().array() += damping;
            const Eigen::VectorXd step = lhs.ldlt().solve(-g);
            if (step.norm() <= opts.step_tol * (out.x.norm() + opts.step_tol)) break;
            const Eigen::VectorXd xn = out.x + step;
            const Eigen::VectorXd rn = residual(xn);
            const double fn = rn.squaredNorm();
            if (std::isfinite(fn) && fn < out.objective) {
                out.x = xn;
                r = rn;
                out.objective = fn;
                out.objective_trace.push_back(fn);
                damping = std::max(damping / 3.0, 1e-30);
                nu = 2.0;
                accepted = true;
            } else {
                damping *= nu;
                nu *= 2.0;
                if (damping > 1e16) break;
            }
        }
        if (!accepted) break; // no descent direction left at this scale
    }
    return out;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double csum = 0.0;
    double tau = 0.0;
    int rho = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        csum += u[static_cast<std::size_t>(i)];
        const double t = (csum - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) {
            rho = static_cast<int>(i) + 1;
            tau = t;
        }
    }
    (void)rho;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - tau, 0.0);
    return out;
}

SimplexResult simplex_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0, int simplex_dim,
                               const SimplexOptions& opts) {
    if (simplex_dim < 1 || simplex_dim > x0.size())
        throw InputError("simplex block size out of range");
    SimplexResult out;
    {
        const Eigen::VectorXd w = x0.head(simplex_dim);
        const bool feasible = (w.array() >= 0.0).all() && std::abs(w.sum() - 1.0) <= 1e-10;
        if (!feasible) {
            x0.head(simplex_dim) = project_simplex(w);
            out.projected_start = true;
        }
    }

    Eigen::VectorXd g(x0.size());
    out.x = std::move(x0);
    out.objective = fn(out.x, g);

    auto project = [&](Eigen::VectorXd y) {
        y.head(simplex_dim) = project_simplex(y.head(simplex_dim));
        return y;
    };

    double step = 1.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        ++out.iterations;
        // stationarity measure with unit reference step
        out.pg_norm = (out.x - project(out.x - g)).norm();
        if (out.pg_norm <= opts.pg_tol) break;

        bool accepted = false;
        Eigen::VectorXd gn(out.x.size());
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd cand = project(out.x - step * g);
            const Eigen::VectorXd diff = cand - out.x;
            const double dnorm2 = diff.squaredNorm();
            if (dnorm2 == 0.0) break;
            const double fc = fn(cand, gn);
            if (fc <= out.objective + g.dot(diff) + 0.5 / step * dnorm2 && fc < out.objective) {
                out.x = cand;
                out.objective = fc;
                g = gn;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return out;
}

} // namespace ist::numkit
