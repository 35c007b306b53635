#include "ist/decomp.hpp"

#include <algorithm>
#include <cmath>

#include "ist/detail/realify.hpp"
#include "ist/rng.hpp"

namespace ist::decomp {
namespace {

template <class T>
cdouble as_complex(T v) {
    if constexpr (std::is_same_v<T, double>)
        return cdouble(v, 0.0);
    else
        return v;
}

} // namespace

void check_rank_bound(int d, int r) {
    if (r < 1 || 2 * (r + 1) > d)
        throw InputError("rank r=" + std::to_string(r) + " out of range for dimension d=" +
                         std::to_string(d) + ": the generating systems need 1 <= r <= d/2-1");
}

template <class T>
numkit::LsqSystem<T> build_system(const OmegaTensor<T>& f, int r, int i, int j) {
    const int d = f.dim();
    const int n = d - 1;
    check_rank_bound(d, r);
    if (i < 1 || i > r) throw InputError("row label i must lie in [1, r]");
    if (j < r + 1 || j > n) throw InputError("column label j must lie in [r+1, n]");

    numkit::LsqSystem<T> sys;
    sys.A.resize(n - r - 1, r);
    sys.b.resize(n - r - 1);
    int row = 0;
    for (int l = r + 1; l <= n; ++l) {
        if (l == j) continue;
        for (int k = 1; k <= r; ++k) sys.A(row, k - 1) = f(0, k, l);
        sys.b(row) = f(i, j, l);
        ++row;
    }
    return sys;
}

template <class T>
GeneratingMatrix solve_generating_matrix(const OmegaTensor<T>& f, int r) {
    const int n = f.dim() - 1;
    check_rank_bound(f.dim(), r);
    GeneratingMatrix g;
    g.r = r;
    g.n = n;
    g.cols.resize(r, r * (n - r));
    for (int j = r + 1; j <= n; ++j)
        for (int i = 1; i <= r; ++i) {
            const auto sol = numkit::lstsq(build_system(f, r, i, j));
            if (sol.rank_deficient) g.rank_deficient = true;
            for (int k = 0; k < r; ++k) g.cols(k, g.pair_index(i, j)) = as_complex<T>(sol.x(k));
        }
    return g;
}

GeneratingMatrix solve_generating_matrix(int r, int n,
                                         const std::vector<numkit::LsqSystem<cdouble>>& systems) {
    if (static_cast<int>(systems.size()) != r * (n - r))
        throw InputError("expected " + std::to_string(r * (n - r)) + " systems, got " +
                         std::to_string(systems.size()));
    GeneratingMatrix g;
    g.r = r;
    g.n = n;
    g.cols.resize(r, r * (n - r));
    int c = 0;
    for (int j = r + 1; j <= n; ++j)
        for (int i = 1; i <= r; ++i, ++c) {
            const auto sol = numkit::lstsq(systems[static_cast<std::size_t>(c)]);
            if (sol.rank_deficient) g.rank_deficient = true;
            g.cols.col(g.pair_index(i, j)) = sol.x;
        }
    return g;
}

Eigen::MatrixXcd assemble_N(const GeneratingMatrix& g, int l) {
    if (l < g.r + 1 || l > g.n) throw InputError("slice label out of range");
    Eigen::MatrixXcd out(g.r, g.r);
    for (int a = 1; a <= g.r; ++a) out.row(a - 1) = g.cols.col(g.pair_index(a, l)).transpose();
    return out;
}

EigenBundle joint_eigen(const GeneratingMatrix& g, const ProjectionConfig& cfg) {
    const int r = g.r;
    const int nr = g.n - g.r;
    Eigen::VectorXd xi;
    if (cfg.xi) {
        if (cfg.xi->size() != nr)
            throw InputError("projection coefficient vector must have length n-r = " +
                             std::to_string(nr));
        xi = *cfg.xi;
    } else {
        CounterRng rng(cfg.seed, /*stream=*/0x78690000u);
        xi.resize(nr);
        for (int t = 0; t < nr; ++t) xi(t) = rng.uniform(-1.0, 1.0);
    }

    std::vector<Eigen::MatrixXcd> slices;
    slices.reserve(static_cast<std::size_t>(nr));
    for (int l = r + 1; l <= g.n; ++l) slices.push_back(assemble_N(g, l));

    Eigen::MatrixXcd nxi = Eigen::MatrixXcd::Zero(r, r);
    for (int t = 0; t < nr; ++t) nxi += xi(t) * slices[static_cast<std::size_t>(t)];

    const auto eig = numkit::eig_general(nxi);
    EigenBundle out;
    out.vtilde.resize(r, r);
    out.wtilde.resize(nr, r);
    for (int k = 0; k < r; ++k) {
        out.vtilde.col(k) = eig.pairs[static_cast<std::size_t>(k)].vector;
        for (int t = 0; t < nr; ++t)
            out.wtilde(t, k) = out.vtilde.col(k).adjoint() * slices[static_cast<std::size_t>(t)] *
                               out.vtilde.col(k);
    }

    double scale = 0.0;
    for (const auto& p : eig.pairs) scale = std::max(scale, std::abs(p.value));
    scale = std::max(scale, 1e-300);
    for (int a = 0; a < r; ++a)
        for (int b = a + 1; b < r; ++b) {
            const double gap = std::abs(eig.pairs[static_cast<std::size_t>(a)].value -
                                        eig.pairs[static_cast<std::size_t>(b)].value);
            out.min_gap_ratio = std::min(out.min_gap_ratio, gap / scale);
        }
    out.repeated_eigenvalues = out.min_gap_ratio < 1e-8;
    return out;
}

template <class T>
ScalarFit fit_scalars(const OmegaTensor<T>& f, const EigenBundle& eb) {
    const int d = f.dim();
    const int n = d - 1;
    const int r = static_cast<int>(eb.vtilde.cols());
    const int nr = n - r;

    if (numkit::numeric_rank(eb.vtilde).rank < r)
        throw NumericalError("projected eigenvectors are not linearly independent");

    const double fnorm = omega_norm(f);

    // beta from the (0, i1, i2) block
    numkit::LsqSystem<cdouble> sys1;
    sys1.A.resize(r * nr, r);
    sys1.b.resize(r * nr);
    {
        int row = 0;
        for (int i1 = 1; i1 <= r; ++i1)
            for (int i2 = r + 1; i2 <= n; ++i2, ++row) {
                for (int k = 0; k < r; ++k)
                    sys1.A(row, k) = eb.vtilde(i1 - 1, k) * eb.wtilde(i2 - r - 1, k);
                sys1.b(row) = as_complex<T>(f(0, i1, i2));
            }
    }
    ScalarFit fit;
    fit.beta = numkit::lstsq(sys1).x;

    if (r >= 2) {
        // theta from the (i1, i2, i3) block with i1 < i2 <= r < i3
        numkit::LsqSystem<cdouble> sys2;
        const int rows = r * (r - 1) / 2 * nr;
        sys2.A.resize(rows, r);
        sys2.b.resize(rows);
        int row = 0;
        for (int i1 = 1; i1 <= r; ++i1)
            for (int i2 = i1 + 1; i2 <= r; ++i2)
                for (int i3 = r + 1; i3 <= n; ++i3, ++row) {
                    for (int k = 0; k < r; ++k)
                        sys2.A(row, k) = eb.vtilde(i1 - 1, k) * eb.vtilde(i2 - 1, k) *
                                         eb.wtilde(i3 - r - 1, k);
                    sys2.b(row) = as_complex<T>(f(i1, i2, i3));
                }
        fit.theta = numkit::lstsq(sys2).x;
    } else {
        // r = 1: the mixed block above is empty. The (0, j, l) entries with
        // 2 <= j < l determine lambda directly, and gamma = beta / lambda.
        numkit::LsqSystem<cdouble> sys2;
        const int rows = nr * (nr - 1) / 2;
        sys2.A.resize(rows, 1);
        sys2.b.resize(rows);
        int row = 0;
        for (int j = 2; j <= n; ++j)
            for (int l = j + 1; l <= n; ++l, ++row) {
                sys2.A(row, 0) = eb.wtilde(j - 2, 0) * eb.wtilde(l - 2, 0);
                sys2.b(row) = as_complex<T>(f(0, j, l));
            }
        const cdouble lambda = numkit::lstsq(sys2).x(0);
        if (std::abs(lambda) < 1e-12 * std::max(fnorm, 1e-300))
            throw NumericalError("component 1 is degenerate: vanishing weight");
        const cdouble gamma = fit.beta(0) / lambda;
        fit.theta.resize(1);
        fit.theta(0) = lambda * gamma * gamma;
    }

    fit.lambda.resize(r);
    fit.gamma.resize(r);
    for (int k = 0; k < r; ++k) {
        const double floor = 1e-12 * std::max(fnorm, 1e-300);
        if (std::abs(fit.beta(k)) < floor || std::abs(fit.theta(k)) < floor)
            throw NumericalError("component " + std::to_string(k + 1) +
                                 " is degenerate: vanishing scalar fit");
        fit.lambda(k) = fit.beta(k) * fit.beta(k) / fit.theta(k);
        fit.gamma(k) = fit.theta(k) / fit.beta(k);
    }
    return fit;
}

namespace {

bool complex_less(const cdouble& a, const cdouble& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

bool vector_less(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    for (Eigen::Index t = 0; t < a.size(); ++t) {
        if (a(t) != b(t)) return complex_less(a(t), b(t));
    }
    return false;
}

void sort_components(Decomposition& dec) {
    const int r = dec.r;
    std::vector<int> order(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return vector_less(dec.vectors[static_cast<std::size_t>(a)],
                           dec.vectors[static_cast<std::size_t>(b)]);
    });
    std::vector<Eigen::VectorXcd> vecs(static_cast<std::size_t>(r));
    Eigen::VectorXcd lam(r), gam(r);
    for (int k = 0; k < r; ++k) {
        vecs[static_cast<std::size_t>(k)] = dec.vectors[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        lam(k) = dec.lambda(order[static_cast<std::size_t>(k)]);
        gam(k) = dec.gamma(order[static_cast<std::size_t>(k)]);
    }
    dec.vectors = std::move(vecs);
    dec.lambda = std::move(lam);
    dec.gamma = std::move(gam);
}

template <class T>
Decomposition run_pipeline(const OmegaTensor<T>& f, int r, const ProjectionConfig& cfg) {
    const int d = f.dim();
    check_rank_bound(d, r);
    const GeneratingMatrix g = solve_generating_matrix(f, r);

    EigenBundle bundle;
    if (cfg.xi) {
        bundle = joint_eigen(g, cfg);
        if (bundle.repeated_eigenvalues && r > 1)
            throw NumericalError("projection has repeated eigenvalues for the given xi");
    } else {
        // well-separated eigenvalues keep the eigenvectors stable under input
        // noise; redraw xi (up to 3 times) until the relative gap clears 1e-2,
        // otherwise keep the best draw seen
        for (int attempt = 0; attempt <= 3; ++attempt) {
            ProjectionConfig attempt_cfg;
            attempt_cfg.seed = cfg.seed + 0x9e37u * static_cast<std::uint64_t>(attempt);
            EigenBundle candidate = joint_eigen(g, attempt_cfg);
            if (attempt == 0 || candidate.min_gap_ratio > bundle.min_gap_ratio)
                bundle = std::move(candidate);
            if (bundle.min_gap_ratio >= 1e-2) break;
        }
        if (bundle.repeated_eigenvalues && r > 1)
            throw NumericalError("projection has repeated eigenvalues after 3 redraws; "
                                 "the tensor may violate the distinct-tail assumption");
    }

    const ScalarFit fit = fit_scalars(f, bundle);

    Decomposition dec;
    dec.r = r;
    dec.degenerate = g.rank_deficient;
    dec.lambda = fit.lambda;
    dec.gamma = fit.gamma;
    dec.vectors.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        Eigen::VectorXcd p(d);
        const cdouble root = std::pow(fit.lambda(k), 1.0 / 3.0);
        p(0) = root;
        for (int t = 1; t <= r; ++t) p(t) = root * fit.gamma(k) * bundle.vtilde(t - 1, k);
        for (int t = r + 1; t <= d - 1; ++t) p(t) = root * bundle.wtilde(t - r - 1, k);
        dec.vectors.push_back(std::move(p));
    }
    sort_components(dec);
    dec.omega_residual = omega_residual(f, dec.vectors);
    return dec;
}

// Residual and Jacobian of the rank-r model on the distinct-index entries.
// Real variant: x = [q_1; ...; q_r], one residual per triple, sqrt(6)-weighted
// so the objective is the ordered-count norm squared.
class RealOmegaResidual {
public:
    RealOmegaResidual(const OmegaTensor<double>& data, int r) : data_(data), r_(r) {}

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        const int d = data_.dim();
        OmegaTensor<double> model(d);
        for (int m = 0; m < r_; ++m) {
            Eigen::Map<const Eigen::VectorXd> q(x.data() + m * d, d);
            add_rank_one(model, 1.0, Eigen::VectorXd(q));
        }
        const auto mv = model.packed();
        const auto dv = data_.packed();
        Eigen::VectorXd res(static_cast<Eigen::Index>(mv.size()));
        const double w = std::sqrt(6.0);
        for (std::size_t t = 0; t < mv.size(); ++t)
            res(static_cast<Eigen::Index>(t)) = w * (mv[t] - dv[t]);
        return res;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
        const int d = data_.dim();
        const auto rows = static_cast<Eigen::Index>(data_.stored_count());
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, x.size());
        const double w = std::sqrt(6.0);
        for (int m = 0; m < r_; ++m) {
            const double* q = x.data() + m * d;
            Eigen::Index row = 0;
            for (int i = 0; i + 2 < d; ++i)
                for (int j = i + 1; j + 1 < d; ++j)
                    for (int k = j + 1; k < d; ++k, ++row) {
                        jac(row, m * d + i) += w * q[j] * q[k];
                        jac(row, m * d + j) += w * q[i] * q[k];
                        jac(row, m * d + k) += w * q[i] * q[j];
                    }
        }
        return jac;
    }

private:
    const OmegaTensor<double>& data_;
    int r_;
};

// Complex variant: x interleaves re/im per coordinate, residuals split into
// re and im parts.
class ComplexOmegaResidual {
public:
    ComplexOmegaResidual(const OmegaTensor<cdouble>& data, int r) : data_(data), r_(r) {}

    Eigen::VectorXcd unpack(const Eigen::VectorXd& x, int m) const {
        const int d = data_.dim();
        Eigen::VectorXcd q(d);
        for (int t = 0; t < d; ++t)
            q(t) = cdouble(x(2 * (m * d + t)), x(2 * (m * d + t) + 1));
        return q;
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        const int d = data_.dim();
        OmegaTensor<cdouble> model(d);
        for (int m = 0; m < r_; ++m) add_rank_one(model, cdouble(1.0, 0.0), unpack(x, m));
        const auto mv = model.packed();
        const auto dv = data_.packed();
        Eigen::VectorXd res(2 * static_cast<Eigen::Index>(mv.size()));
        const double w = std::sqrt(6.0);
        for (std::size_t t = 0; t < mv.size(); ++t) {
            const cdouble diff = mv[t] - dv[t];
            res(2 * static_cast<Eigen::Index>(t)) = w * diff.real();
            res(2 * static_cast<Eigen::Index>(t) + 1) = w * diff.imag();
        }
        return res;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
        const int d = data_.dim();
        const auto triples = static_cast<Eigen::Index>(data_.stored_count());
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * triples, x.size());
        const double w = std::sqrt(6.0);
        for (int m = 0; m < r_; ++m) {
            const Eigen::VectorXcd q = unpack(x, m);
            Eigen::Index row = 0;
            for (int i = 0; i + 2 < d; ++i)
                for (int j = i + 1; j + 1 < d; ++j)
                    for (int k = j + 1; k < d; ++k, ++row) {
                        const cdouble di = w * q(j) * q(k);
                        const cdouble dj = w * q(i) * q(k);
                        const cdouble dk = w * q(i) * q(j);
                        add_entry(jac, row, m, d, i, di);
                        add_entry(jac, row, m, d, j, dj);
                        add_entry(jac, row, m, d, k, dk);
                    }
        }
        return jac;
    }

private:
    static void add_entry(Eigen::MatrixXd& jac, Eigen::Index row, int m, int d, int t,
                          const cdouble& dv) {
        const Eigen::Index cre = 2 * (static_cast<Eigen::Index>(m) * d + t);
        jac(2 * row, cre) += dv.real();
        jac(2 * row, cre + 1) -= dv.imag();
        jac(2 * row + 1, cre) += dv.imag();
        jac(2 * row + 1, cre + 1) += dv.real();
    }

    const OmegaTensor<cdouble>& data_;
    int r_;
};

} // namespace

template <class T>
Decomposition decompose(const OmegaTensor<T>& f, int r, const ProjectionConfig& cfg) {
    return run_pipeline(f, r, cfg);
}

template <class T>
Decomposition approximate(const OmegaTensor<T>& fhat, int r, const ProjectionConfig& cfg,
                          const ApproxOptions& opts) {
    Decomposition dec = run_pipeline(fhat, r, cfg);
    if (!opts.refine) return dec;

    const int d = fhat.dim();
    if constexpr (std::is_same_v<T, double>) {
        Eigen::VectorXd x0(static_cast<Eigen::Index>(r) * d);
        for (int m = 0; m < r; ++m)
            x0.segment(static_cast<Eigen::Index>(m) * d, d) =
                detail::realify_min_imag(dec.vectors[static_cast<std::size_t>(m)]);
        RealOmegaResidual res(fhat, r);
        const auto lm = numkit::lm_minimize(
            [&](const Eigen::VectorXd& x) { return res(x); },
            [&](const Eigen::VectorXd& x) { return res.jacobian(x); }, x0, opts.lm);
        std::vector<Eigen::VectorXcd> refined(static_cast<std::size_t>(r));
        for (int m = 0; m < r; ++m)
            refined[static_cast<std::size_t>(m)] =
                lm.x.segment(static_cast<Eigen::Index>(m) * d, d).template cast<cdouble>();
        const double res_refined = omega_residual(fhat, refined);
        if (res_refined <= dec.omega_residual) {
            dec.vectors = std::move(refined);
            dec.omega_residual = res_refined;
            sort_components(dec);
        } else {
            dec.refine_failed = true;
        }
    } else {
        Eigen::VectorXd x0(2 * static_cast<Eigen::Index>(r) * d);
        for (int m = 0; m < r; ++m)
            for (int t = 0; t < d; ++t) {
                x0(2 * (static_cast<Eigen::Index>(m) * d + t)) =
                    dec.vectors[static_cast<std::size_t>(m)](t).real();
                x0(2 * (static_cast<Eigen::Index>(m) * d + t) + 1) =
                    dec.vectors[static_cast<std::size_t>(m)](t).imag();
            }
        ComplexOmegaResidual res(fhat, r);
        const auto lm = numkit::lm_minimize(
            [&](const Eigen::VectorXd& x) { return res(x); },
            [&](const Eigen::VectorXd& x) { return res.jacobian(x); }, x0, opts.lm);
        std::vector<Eigen::VectorXcd> refined(static_cast<std::size_t>(r));
        for (int m = 0; m < r; ++m) refined[static_cast<std::size_t>(m)] = res.unpack(lm.x, m);
        const double res_refined = omega_residual(fhat, refined);
        if (res_refined <= dec.omega_residual) {
            dec.vectors = std::move(refined);
            dec.omega_residual = res_refined;
            sort_components(dec);
        } else {
            dec.refine_failed = true;
        }
    }
    return dec;
}

template <class T>
int estimate_rank(const OmegaTensor<T>& f, double tol) {
    const int d = f.dim();
    if (d < 4) throw InputError("rank estimation needs d >= 4");
    const int m = (d - 1) / 2;
    std::vector<int> rows, cols;
    for (int a = 1; a <= m; ++a) rows.push_back(a);
    for (int b = m + 1; b <= d - 1; ++b) cols.push_back(b);
    const auto v1 = flat_submatrix(f, rows, cols);
    const auto v2 = flat_submatrix(f, cols, rows);
    Eigen::MatrixXcd m1 = v1.matrix.template cast<cdouble>();
    Eigen::MatrixXcd m2 = v2.matrix.template cast<cdouble>();
    return std::max(numkit::numeric_rank(m1, tol).rank, numkit::numeric_rank(m2, tol).rank);
}

template <class T>
double omega_residual(const OmegaTensor<T>& f, const std::vector<Eigen::VectorXcd>& factors) {
    const int d = f.dim();
    OmegaTensor<cdouble> model(d);
    for (const auto& p : factors) add_rank_one(model, cdouble(1.0, 0.0), p);
    const auto mv = model.packed();
    const auto dv = f.packed();
    double acc = 0.0;
    for (std::size_t t = 0; t < mv.size(); ++t) acc += std::norm(mv[t] - as_complex<T>(dv[t]));
    return std::sqrt(6.0 * acc);
}

template numkit::LsqSystem<double> build_system(const OmegaTensor<double>&, int, int, int);
template numkit::LsqSystem<cdouble> build_system(const OmegaTensor<cdouble>&, int, int, int);
template GeneratingMatrix solve_generating_matrix(const OmegaTensor<double>&, int);
template GeneratingMatrix solve_generating_matrix(const OmegaTensor<cdouble>&, int);
template ScalarFit fit_scalars(const OmegaTensor<double>&, const EigenBundle&);
template ScalarFit fit_scalars(const OmegaTensor<cdouble>&, const EigenBundle&);
template Decomposition decompose(const OmegaTensor<double>&, int, const ProjectionConfig&);
template Decomposition decompose(const OmegaTensor<cdouble>&, int, const ProjectionConfig&);
template Decomposition approximate(const OmegaTensor<double>&, int, const ProjectionConfig&,
                                   const ApproxOptions&);
template Decomposition approximate(const OmegaTensor<cdouble>&, int, const ProjectionConfig&,
                                   const ApproxOptions&);
template int estimate_rank(const OmegaTensor<double>&, double);
template int estimate_rank(const OmegaTensor<cdouble>&, double);
template double omega_residual(const OmegaTensor<double>&, const std::vector<Eigen::VectorXcd>&);
template double omega_residual(const OmegaTensor<cdouble>&, const std::vector<Eigen::VectorXcd>&);

} // namespace ist::decomp
