#include "ist/kernels.hpp"

namespace ist::kernels {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t t = 0; t < n; ++t) y[t] += a * x[t];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += x[t] * y[t];
    return s;
}

double sumsq_scalar(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += x[t] * x[t];
    return s;
}

double diff_sumsq_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = x[t] - y[t];
        s += d * d;
    }
    return s;
}

double quadform_diag_scalar(std::size_t n, const double* x, const double* m, const double* w) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = x[t] - m[t];
        s += d * d * w[t];
    }
    return s;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{axpy_scalar, dot_scalar, sumsq_scalar,
                         diff_sumsq_scalar, quadform_diag_scalar, "scalar"};
    return ops;
}

} // namespace ist::kernels
