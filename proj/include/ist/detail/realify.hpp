#ifndef IST_DETAIL_REALIFY_HPP
#define IST_DETAIL_REALIFY_HPP

#include <complex>

#include <Eigen/Core>

namespace ist::detail {

// Re(tau * p) for the cube root of unity tau that minimizes ||Im(tau * p)||,
// ties broken toward tau = 1.
inline Eigen::VectorXd realify_min_imag(const Eigen::VectorXcd& p) {
    static const std::complex<double> roots[3] = {
        {1.0, 0.0},
        {-0.5, 0.8660254037844386467637232},
        {-0.5, -0.8660254037844386467637232},
    };
    int best = 0;
    double best_im = (roots[0] * p.array()).imag().matrix().squaredNorm();
    for (int c = 1; c < 3; ++c) {
        const double im = (roots[c] * p.array()).imag().matrix().squaredNorm();
        if (im < best_im) {
            best_im = im;
            best = c;
        }
    }
    return (roots[best] * p.array()).real();
}

} // namespace ist::detail

#endif
