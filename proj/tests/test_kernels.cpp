#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "pnsim/kernels.hpp"

using namespace pnsim::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(g);
    return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("dispatch") {
    CHECK(cpu_supports(Isa::Scalar));
    CHECK(table(Isa::Scalar).isa == Isa::Scalar);
    CHECK(isa_from_string("avx2") == Isa::Avx2);
    const Isa before = active_isa();
    set_isa(Isa::Scalar);
    CHECK(active_isa() == Isa::Scalar);
    set_isa(before);
    if (!cpu_supports(Isa::Avx2)) CHECK_THROWS(set_isa(Isa::Avx2));
}

TEST_CASE("scalar kernels against direct formulas") {
    const auto& k = table(Isa::Scalar);
    const auto a = random_vec(37, -1, 1, 1), b = random_vec(37, -1, 1, 2);
    std::vector<double> out(37);
    double s = k.multiply_sum(a.data(), b.data(), out.data(), 37);
    double ref = 0;
    for (int i = 0; i < 37; ++i) {
        CHECK(out[i] == a[i] * b[i]);
        ref += a[i] * b[i];
    }
    CHECK(s == doctest::Approx(ref));
    CHECK(k.dot(a.data(), b.data(), 37) == doctest::Approx(ref));

    const auto ext = random_vec(37 + 4, 0, 1, 3), taps = random_vec(5, 0, 1, 4);
    k.correlate(ext.data(), 37, taps.data(), 5, out.data());
    for (int i = 0; i < 37; ++i) {
        double r = 0;
        for (int t = 0; t < 5; ++t) r += taps[t] * ext[i + t];
        CHECK(out[i] == doctest::Approx(r));
    }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    if (!cpu_supports(Isa::Avx2)) {
        MESSAGE("AVX2 not available; equivalence test skipped");
        return;
    }
    const auto& s = table(Isa::Scalar);
    const auto& v = table(Isa::Avx2);
    for (std::size_t n : {1ul, 3ul, 4ul, 7ul, 8ul, 13ul, 64ul, 511ul, 512ul, 1027ul}) {
        const auto a = random_vec(n, -3, 3, unsigned(n)), b = random_vec(n, -3, 3, unsigned(n + 1));
        std::vector<double> o1(n), o2(n);

        CHECK(rel_err(s.multiply_sum(a.data(), b.data(), o1.data(), n), v.multiply_sum(a.data(), b.data(), o2.data(), n)) < 1e-12);
        for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
        CHECK(rel_err(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n)) < 1e-12);
        CHECK(rel_err(s.sum(a.data(), n), v.sum(a.data(), n)) < 1e-12);

        auto y1 = b, y2 = b;
        s.axpy(0.7, a.data(), y1.data(), n);
        v.axpy(0.7, a.data(), y2.data(), n);
        // FMA rounds once; allow one ulp of the operand scale.
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 2.3e-16 * (std::abs(b[i]) + 0.7 * std::abs(a[i])));
        y1 = y2;
        s.scale(y1.data(), n, 1.3);
        v.scale(y2.data(), n, 1.3);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(y1[i], y2[i]) < 1e-15);

        auto wide = random_vec(n, -745, 709, unsigned(n + 2));
        s.exp(wide.data(), o1.data(), n);
        v.exp(wide.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            if (wide[i] < -708.0) {
                CHECK(o2[i] == 0.0);
                CHECK(o1[i] < 3.4e-308);
            } else {
                CHECK(rel_err(o1[i], o2[i]) < 4e-15);
            }
        }

        const auto ct = random_vec(n, -1, 1, 7), st = random_vec(n, -1, 1, 8);
        s.exp_trig(-2.0, 30.0, -40.0, ct.data(), st.data(), o1.data(), n);
        v.exp_trig(-2.0, 30.0, -40.0, ct.data(), st.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(o1[i], o2[i]) < 1e-13);
        v.exp_trig(-std::numeric_limits<double>::infinity(), 1.0, 1.0, ct.data(), st.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(o2[i] == 0.0);

        for (std::size_t taps : {1ul, 5ul, 9ul, 61ul}) {
            const auto ext = random_vec(n + taps - 1, 0, 1, unsigned(taps)), tp = random_vec(taps, 0, 1, 11);
            s.correlate(ext.data(), n, tp.data(), taps, o1.data());
            v.correlate(ext.data(), n, tp.data(), taps, o2.data());
            for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(o1[i], o2[i]) < 1e-13);
        }
    }
    // Special exp inputs.
    const std::vector<double> sp = {0.0, -0.0, 1.0, -1.0, 709.0, -707.9, -708.3, -708.5, -800.0, -std::numeric_limits<double>::infinity()};
    std::vector<double> o(sp.size());
    v.exp(sp.data(), o.data(), sp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const double ref = std::exp(sp[i]);
        if (sp[i] < -708.0) CHECK(o[i] == 0.0);
        else CHECK(rel_err(o[i], ref) < 4e-15);
    }
}
