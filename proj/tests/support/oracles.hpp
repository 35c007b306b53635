#ifndef IST_TESTS_ORACLES_HPP
#define IST_TESTS_ORACLES_HPP

// Brute-force reference implementations used as independent oracles. These
// deliberately avoid the packed layouts and fast paths of the library.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Core>

#include "ist/rng.hpp"

namespace oracle {

// direct evaluation of (sum_m w_m v_m^x3)_{ijk}, no storage involved
template <class T>
T rank_one_eval(const std::vector<T>& weights, const std::vector<Eigen::VectorX<T>>& vectors,
                int i, int j, int k) {
    T acc{};
    for (std::size_t m = 0; m < weights.size(); ++m)
        acc += weights[m] * vectors[m](i) * vectors[m](j) * vectors[m](k);
    return acc;
}

// Hilbert-Schmidt norm by enumerating all d^3 ordered triples of a callable
template <class Fn>
double brute_hs_norm(int d, Fn&& entry) {
    long double acc = 0.0L;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                const auto v = entry(i, j, k);
                acc += static_cast<long double>(std::norm(std::complex<double>(v)));
            }
    return static_cast<double>(std::sqrt(acc));
}

// ordered-count norm restricted to pairwise-distinct triples
template <class Fn>
double brute_omega_norm(int d, Fn&& entry) {
    long double acc = 0.0L;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                if (i == j || j == k || i == k) continue;
                const auto v = entry(i, j, k);
                acc += static_cast<long double>(std::norm(std::complex<double>(v)));
            }
    return static_cast<double>(std::sqrt(acc));
}

// golden rank-2 instance: 0.4 * ones^x3 + 0.6 * (1,-1,2,-1,2,3)^x3
inline std::vector<double> golden_weights() { return {0.4, 0.6}; }

inline std::vector<Eigen::VectorXd> golden_vectors() {
    Eigen::VectorXd u1(6), u2(6);
    u1 << 1, 1, 1, 1, 1, 1;
    u2 << 1, -1, 2, -1, 2, 3;
    return {u1, u2};
}

// central-difference Jacobian of a vector residual
template <class Fn>
Eigen::MatrixXd central_diff_jacobian(Fn&& residual, const Eigen::VectorXd& x, double h = 1e-6) {
    const Eigen::VectorXd r0 = residual(x);
    Eigen::MatrixXd jac(r0.size(), x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        jac.col(c) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    return jac;
}

inline Eigen::VectorXd random_vector(ist::CounterRng& rng, int d) {
    Eigen::VectorXd v(d);
    for (int t = 0; t < d; ++t) v(t) = rng.normal();
    return v;
}

inline Eigen::VectorXcd random_cvector(ist::CounterRng& rng, int d) {
    Eigen::VectorXcd v(d);
    for (int t = 0; t < d; ++t) v(t) = std::complex<double>(rng.normal(), rng.normal());
    return v;
}

} // namespace oracle

#endif
