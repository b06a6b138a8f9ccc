// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "tables.hpp"

namespace pnsim::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// e^x with Cody-Waite reduction to |r| <= ln2/2 and a degree-13 Taylor
// polynomial (truncation below 1e-17 relative). Inputs under -708 flush to
// zero instead of producing subnormals.
inline __m256d exp4(__m256d x) {
    const __m256d lower = _mm256_set1_pd(-708.0);
    const __m256d upper = _mm256_set1_pd(709.0);
    const __m256d valid = _mm256_cmp_pd(x, lower, _CMP_GE_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lower), upper);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(0.693145751953125), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^n assembled in the exponent field.
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                        _mm256_castpd_si256(magic));
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_and_pd(result, valid);
}

// Tail handling with the same range rules as exp4.
inline double exp1(double x) { return x < -708.0 ? 0.0 : std::exp(std::min(x, 709.0)); }

void correlate(const double* ext, std::size_t n, const double* taps, std::size_t taps_len,
               double* out) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d a0 = _mm256_setzero_pd();
        __m256d a1 = _mm256_setzero_pd();
        for (std::size_t t = 0; t < taps_len; ++t) {
            const __m256d w = _mm256_broadcast_sd(taps + t);
            a0 = _mm256_fmadd_pd(w, _mm256_loadu_pd(ext + i + t), a0);
            a1 = _mm256_fmadd_pd(w, _mm256_loadu_pd(ext + i + t + 4), a1);
        }
        _mm256_storeu_pd(out + i, a0);
        _mm256_storeu_pd(out + i + 4, a1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d a0 = _mm256_setzero_pd();
        for (std::size_t t = 0; t < taps_len; ++t)
            a0 = _mm256_fmadd_pd(_mm256_broadcast_sd(taps + t), _mm256_loadu_pd(ext + i + t), a0);
        _mm256_storeu_pd(out + i, a0);
    }
    for (; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps_len; ++t) acc = std::fma(taps[t], ext[i + t], acc);
        out[i] = acc;
    }
}

void exp_trig(double c, double u, double v, const double* cos_tab, const double* sin_tab,
              double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vu = _mm256_set1_pd(u);
    const __m256d vv = _mm256_set1_pd(v);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d arg = _mm256_fmadd_pd(vu, _mm256_loadu_pd(cos_tab + i), vc);
        arg = _mm256_fmadd_pd(vv, _mm256_loadu_pd(sin_tab + i), arg);
        _mm256_storeu_pd(out + i, exp4(arg));
    }
    for (; i < n; ++i) out[i] = exp1(c + u * cos_tab[i] + v * sin_tab[i]);
}

void exp_n(const double* in, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = exp1(in[i]);
}

double multiply_sum(const double* a, const double* b, double* out, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, p);
        acc = _mm256_add_pd(acc, p);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        out[i] = a[i] * b[i];
        s += out[i];
    }
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void scale(double* x, std::size_t n, double s) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
    for (; i < n; ++i) x[i] *= s;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

}  // namespace

const KernelTable& make_table() {
    static const KernelTable t{Isa::Avx2, correlate, exp_trig, exp_n, multiply_sum,
                               axpy,      scale,     dot,      sum};
    return t;
}

}  // namespace pnsim::kernels::avx2
