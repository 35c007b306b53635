#ifndef IST_KERNELS_HPP
#define IST_KERNELS_HPP

#include <cstddef>

// Data-parallel inner loops used by the tensor accumulation, residual and
// density paths. Each kernel has a scalar reference implementation and an
// AVX2+FMA variant; the active table is chosen once at startup from CPU
// capabilities and can be forced with IST_KERNELS=scalar|avx2.
namespace ist::kernels {

struct Ops {
    // y[t] += a * x[t]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // sum_t x[t] * y[t]
    double (*dot)(std::size_t n, const double* x, const double* y);
    // sum_t x[t]^2
    double (*sumsq)(std::size_t n, const double* x);
    // sum_t (x[t] - y[t])^2
    double (*diff_sumsq)(std::size_t n, const double* x, const double* y);
    // sum_t (x[t] - m[t])^2 * w[t]
    double (*quadform_diag)(std::size_t n, const double* x, const double* m, const double* w);
    const char* name;
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
bool cpu_has_avx2_fma();
#endif

const Ops& active();

inline void axpy(std::size_t n, double a, const double* x, double* y) {
    active().axpy(n, a, x, y);
}
inline double dot(std::size_t n, const double* x, const double* y) {
    return active().dot(n, x, y);
}
inline double sumsq(std::size_t n, const double* x) { return active().sumsq(n, x); }
inline double diff_sumsq(std::size_t n, const double* x, const double* y) {
    return active().diff_sumsq(n, x, y);
}
inline double quadform_diag(std::size_t n, const double* x, const double* m, const double* w) {
    return active().quadform_diag(n, x, m, w);
}

} // namespace ist::kernels

#endif
