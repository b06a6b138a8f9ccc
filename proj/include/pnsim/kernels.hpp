#pragma once

// Data-parallel inner loops of the discretised-phase forward/backward
// recursion. Each kernel has a scalar reference implementation and an AVX2
// one; the variant is chosen once at startup from CPU features and can be
// pinned for equivalence testing.

#include <cstddef>
#include <string_view>

namespace pnsim::kernels {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);
Isa isa_from_string(std::string_view s);

bool cpu_supports(Isa isa);
Isa best_isa();
Isa active_isa();
/// Throws std::runtime_error when the CPU lacks the requested ISA.
void set_isa(Isa isa);

struct KernelTable {
    Isa isa;

    /// out[i] = sum_t taps[t] * ext[i + t], i < n. ext holds n + taps_len - 1 values.
    void (*correlate)(const double* ext, std::size_t n, const double* taps, std::size_t taps_len,
                      double* out);
    /// out[i] = exp(c + u cos_tab[i] + v sin_tab[i]). c may be -inf (gives 0).
    void (*exp_trig)(double c, double u, double v, const double* cos_tab, const double* sin_tab,
                     double* out, std::size_t n);
    /// out[i] = exp(in[i]). The AVX2 variant returns 0 for inputs below -708
    /// and clamps inputs above 709.
    void (*exp)(const double* in, double* out, std::size_t n);
    /// out[i] = a[i] * b[i]; returns sum(out).
    double (*multiply_sum)(const double* a, const double* b, double* out, std::size_t n);
    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*scale)(double* x, std::size_t n, double s);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
};

const KernelTable& table();
const KernelTable& table(Isa isa);

}  // namespace pnsim::kernels
