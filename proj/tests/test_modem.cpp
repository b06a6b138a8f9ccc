#include <cmath>
#include <numeric>
#include <numbers>

#include "doctest.h"
#include "pnsim/modem.hpp"

using namespace pnsim;

TEST_CASE("constellations are unit energy and Gray labelled") {
    for (auto kind : {ConstellationKind::QPSK, ConstellationKind::QAM16}) {
        const auto c = Constellation::make(kind);
        double e = 0.0;
        for (auto p : c.points()) e += std::norm(p);
        CHECK(e / double(c.size()) == doctest::Approx(1.0));
        // Nearest neighbours differ in exactly one bit.
        double dmin = 1e9;
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b) dmin = std::min(dmin, std::abs(c.point(a) - c.point(b)));
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b)
                if (std::abs(std::abs(c.point(a) - c.point(b)) - dmin) < 1e-12) CHECK(std::popcount(a ^ b) == 1);
        for (std::size_t m = 0; m < c.size(); ++m) {
            std::vector<std::uint8_t> bits;
            for (int i = 0; i < c.bits_per_symbol(); ++i) bits.push_back(std::uint8_t(c.bit(m, i)));
            CHECK(c.index_of(bits) == m);
            CHECK(c.nearest(c.point(m)) == m);
        }
    }
    CHECK(Constellation::from_name("16QAM").size() == 16);
    CHECK_THROWS(Constellation::from_name("8PSK"));
}

TEST_CASE("QPSK labels match the documented mapping") {
    const auto c = Constellation::make(ConstellationKind::QPSK);
    const double a = 1 / std::sqrt(2.0);
    CHECK(std::abs(c.point(0) - cplx(a, a)) < 1e-15);
    CHECK(std::abs(c.point(1) - cplx(a, -a)) < 1e-15);
    CHECK(std::abs(c.point(2) - cplx(-a, a)) < 1e-15);
    CHECK(std::abs(c.point(3) - cplx(-a, -a)) < 1e-15);
}

TEST_CASE("pilot patterns: masks agree with the closed-form counts") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    std::vector<PilotPattern> patterns = {DistributedPilots{1, 19}, DistributedPilots{3, 10}, BurstPilots{},
                                          BurstPilots{5, 2, 7, 4}, PreamblePostamblePilots{45}, NoPilots{}};
    for (const auto& pat : patterns) {
        for (std::size_t K : {1ul, 7ul, 20ul, 100ul, 333ul, 2106ul, 5000ul}) {
            const auto plan = FramePlan::make(pat, K, q, 1);
            const auto mask_count = std::accumulate(plan.pilot_mask.begin(), plan.pilot_mask.end(), std::size_t(0));
            CHECK(mask_count == implied_pilot_count(pat, K));
            CHECK(plan.pilot_count() == mask_count);
        }
    }
}

TEST_CASE("frame plans for a fixed payload") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    const auto p = FramePlan::for_payload(DistributedPilots{1, 19}, 2000, q, 9);
    CHECK(p.payload_count() == 2000);
    CHECK(p.total_len == 2106);
    CHECK(p.pilot_count() == 106);
    CHECK(p.is_pilot(0));
    CHECK(p.is_pilot(20));
    CHECK_FALSE(p.is_pilot(19));

    const auto b = FramePlan::for_payload(BurstPilots{}, 2000, q, 9);
    CHECK(b.payload_count() == 2000);
    CHECK(b.pilot_count() == 90 + 36 + 90);
    CHECK(b.is_pilot(90 + 1440));
    CHECK_FALSE(b.is_pilot(90 + 1439));

    const auto pp = FramePlan::for_payload(PreamblePostamblePilots{45}, 2000, q, 9);
    CHECK(pp.total_len == 2090);

    // Same seed, same pilots.
    CHECK(FramePlan::for_payload(DistributedPilots{}, 2000, q, 9).pilot_index == p.pilot_index);
    CHECK_THROWS(FramePlan::for_payload(AllPilots{}, 10, q, 1));
}

TEST_CASE("Eb/N0 to noise variance") {
    // 0 dB, rate 1/2, QPSK, no pilots: Es/N0 = 1, sigma2 = 1/2.
    CHECK(ebn0_to_sigma2(0.0, 0.5, 2, 1.0) == doctest::Approx(0.5));
    CHECK(ebn0_to_sigma2(10.0, 0.5, 4, 0.5) == doctest::Approx(1.0 / (2 * 10 * 0.5 * 4 * 0.5)));
    CHECK_THROWS(ebn0_to_sigma2(1.0, 0.0, 2, 1.0));
}

TEST_CASE("channel statistics") {
    Rng rng(42);
    ChannelParams ch{0.25, 0.05};
    const std::size_t N = 200000;
    const auto th = generate_phase(N, ch, rng);
    double s1 = 0, s2 = 0;
    for (std::size_t k = 1; k < N; ++k) {
        const double d = th[k] - th[k - 1];
        s1 += d;
        s2 += d * d;
    }
    const double mean = s1 / (N - 1), var = s2 / (N - 1) - mean * mean;
    CHECK(std::abs(mean) < 5 * 0.05 / std::sqrt(double(N)));
    CHECK(var == doctest::Approx(0.0025).epsilon(0.02));

    std::vector<cplx> sym(N, cplx(1, 0));
    std::vector<double> zero(N, 0.0);
    const auto r = apply_channel(sym, zero, ch, rng);
    double nr = 0, ni = 0, cross = 0;
    for (auto x : r) {
        nr += (x.real() - 1) * (x.real() - 1);
        ni += x.imag() * x.imag();
        cross += (x.real() - 1) * x.imag();
    }
    CHECK(nr / N == doctest::Approx(0.25).epsilon(0.02));
    CHECK(ni / N == doctest::Approx(0.25).epsilon(0.02));
    CHECK(std::abs(cross / N) < 0.005);
    CHECK_THROWS(apply_channel(sym, std::vector<double>(3), ch, rng));
}

TEST_CASE("frame building and hard demapping") {
    const auto c = Constellation::make(ConstellationKind::QAM16);
    auto plan = std::make_shared<const FramePlan>(FramePlan::for_payload(DistributedPilots{1, 19}, 500, c, 3));
    Rng rng(5);
    std::vector<std::uint8_t> bits(500 * 4);
    for (auto& b : bits) b = std::uint8_t(rng() & 1);
    const auto f = build_frame(plan, c, bits);
    CHECK(demap_hard(c, *plan, f.symbols) == bits);
    for (std::size_t k = 0; k < plan->total_len; ++k)
        if (plan->is_pilot(k)) CHECK(f.symbol_index[k] == plan->pilot_index[k]);
    CHECK_THROWS(build_frame(plan, c, std::span(bits).first(10)));
}
