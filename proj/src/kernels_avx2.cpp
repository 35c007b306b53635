#include "ist/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace ist::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        __m256d vy = _mm256_loadu_pd(y + t);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + t), vy);
        _mm256_storeu_pd(y + t, vy);
    }
    for (; t < n; ++t) y[t] += a * x[t];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + t), _mm256_loadu_pd(y + t), acc);
    double s = hsum(acc);
    for (; t < n; ++t) s += x[t] * y[t];
    return s;
}

double sumsq_avx2(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d v = _mm256_loadu_pd(x + t);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; t < n; ++t) s += x[t] * x[t];
    return s;
}

double diff_sumsq_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + t), _mm256_loadu_pd(y + t));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; t < n; ++t) {
        const double d = x[t] - y[t];
        s += d * d;
    }
    return s;
}

double quadform_diag_avx2(std::size_t n, const double* x, const double* m, const double* w) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + t), _mm256_loadu_pd(m + t));
        acc = _mm256_fmadd_pd(_mm256_mul_pd(d, d), _mm256_loadu_pd(w + t), acc);
    }
    double s = hsum(acc);
    for (; t < n; ++t) {
        const double d = x[t] - m[t];
        s += d * d * w[t];
    }
    return s;
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops{axpy_avx2, dot_avx2, sumsq_avx2,
                         diff_sumsq_avx2, quadform_diag_avx2, "avx2"};
    return ops;
}

bool cpu_has_avx2_fma() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

} // namespace ist::kernels

#endif
