#include <cmath>

#include "tables.hpp"

namespace pnsim::kernels::scalar {

namespace {

void correlate(const double* ext, std::size_t n, const double* taps, std::size_t taps_len,
               double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps_len; ++t) acc += taps[t] * ext[i + t];
        out[i] = acc;
    }
}

void exp_trig(double c, double u, double v, const double* cos_tab, const double* sin_tab,
              double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(c + u * cos_tab[i] + v * sin_tab[i]);
}

void exp_n(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
}

double multiply_sum(const double* a, const double* b, double* out, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] * b[i];
        acc += out[i];
    }
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* x, std::size_t n, double s) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

}  // namespace

const KernelTable& make_table() {
    static const KernelTable t{Isa::Scalar, correlate, exp_trig, exp_n, multiply_sum,
                               axpy,        scale,     dot,      sum};
    return t;
}

}  // namespace pnsim::kernels::scalar
