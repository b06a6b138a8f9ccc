#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pnsim/detector.hpp"

using namespace pnsim;

namespace {

constexpr double pi = std::numbers::pi;
constexpr int grid = 4096;

// Channel likelihood of symbol c at phase th, without the |r|^2 term.
double chan(cplx r, cplx c, double th, double s2) { return std::exp(-std::norm(r - c * std::polar(1.0, th)) / (2 * s2)); }

double tik(double th, cplx z) { return std::exp(std::real(z * std::polar(1.0, -th)) - std::abs(z)); }

// First trigonometric moment of the (unnormalised) density f on the circle.
template <class F>
cplx first_moment(F f) {
    cplx m{};
    double s = 0;
    for (int i = 0; i < grid; ++i) {
        const double th = two_pi * i / grid;
        const double v = f(th);
        m += v * std::polar(1.0, th);
        s += v;
    }
    return m / s;
}

double ang_err(double a, double b) { return std::abs(wrap_angle(a - b)); }

std::vector<double> random_pmf(std::size_t M, std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(M);
    double s = 0;
    for (auto& x : p) s += (x = u(g));
    for (auto& x : p) x /= s;
    return p;
}

FramePlan all_payload(std::size_t K) {
    return FramePlan::make(NoPilots{}, K, Constellation::make(ConstellationKind::QPSK), 1);
}

}  // namespace

TEST_CASE("observation mixture") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    const double s2 = 0.3;
    std::vector<double> pilot(4, 0.0);
    pilot[2] = 1.0;
    const cplx r(0.4, -0.9);
    const auto mp = observation_mixture(r, pilot, q, s2);
    REQUIRE(mp.size() == 1);
    CHECK(mp.components[0].log_weight == doctest::Approx(0.0));
    CHECK(std::abs(mp.components[0].param.z - r * std::conj(q.point(2)) / s2) < 1e-15);

    // Equal-energy symbols under a uniform pmf carry no weight information:
    // |z^m| = |r| |c| / sigma2 for every m.
    const std::vector<double> uni(4, 0.25);
    const auto mu = observation_mixture(cplx(1.3, 0.2), uni, q, s2);
    for (double w : mu.weights()) CHECK(w == doctest::Approx(0.25));

    // Weights are proportional to the integrated channel likelihood.
    std::mt19937_64 g(4);
    std::normal_distribution<double> nd;
    const auto qam = Constellation::make(ConstellationKind::QAM16);
    for (int t = 0; t < 20; ++t) {
        const cplx rr(nd(g), nd(g));
        const auto p = random_pmf(16, g);
        const auto mix = observation_mixture(rr, p, qam, 0.2);
        const auto ww = mix.weights();
        std::vector<double> ref(16);
        double s = 0;
        for (std::size_t m = 0; m < 16; ++m) {
            double acc = 0;
            for (int i = 0; i < grid; ++i) acc += chan(rr, qam.point(m), two_pi * i / grid, 0.2);
            s += (ref[m] = p[m] * acc);
        }
        for (std::size_t m = 0; m < 16; ++m) CHECK(ww[m] == doctest::Approx(ref[m] / s).epsilon(1e-9));
    }
    // Scaling r and sigma2 together leaves the parameters unchanged.
    const auto a = observation_mixture(cplx(0.3, 0.1), uni, q, 0.5);
    const auto b = observation_mixture(cplx(0.6, 0.2), uni, q, 1.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(a.components[i].param.z - b.components[i].param.z) < 1e-15);
    CHECK_THROWS(observation_mixture(r, uni, q, 0.0));
}

TEST_CASE("TP and EP projections against quadrature") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    std::mt19937_64 g(11);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ua(-pi, pi);
    for (int t = 0; t < 50; ++t) {
        const double s2 = 0.05 + 0.5 * std::abs(nd(g));
        const cplx r = std::polar(1.0, ua(g)) + cplx(nd(g), nd(g)) * std::sqrt(s2);
        const auto p = random_pmf(4, g);
        auto pd = [&](double th) {
            double v = 0;
            for (std::size_t m = 0; m < 4; ++m) v += p[m] * chan(r, q.point(m), th, s2);
            return v;
        };
        const auto mix = observation_mixture(r, p, q, s2);
        const cplx mom = first_moment(pd);
        const auto ztp = tp_project(mix, BrMode::Exact);
        CHECK(ang_err(ztp.mean_angle(), std::arg(mom)) < 1e-6);
        CHECK(bessel_ratio(ztp.precision()) == doctest::Approx(std::abs(mom)).epsilon(1e-9));

        const cplx zu = std::polar(0.5 + 5 * std::abs(nd(g)), ua(g));
        const cplx mom2 = first_moment([&](double th) { return pd(th) * tik(th, zu); });
        const auto sh = shifted_mixture(mix, {zu}, p, q, s2);
        const auto ep = ep_project(sh, {zu}, BrMode::Exact, {});
        CHECK_FALSE(ep.rejected);
        CHECK(ang_err(ep.z_marginal.mean_angle(), std::arg(mom2)) < 1e-6);
        CHECK(bessel_ratio(ep.z_marginal.precision()) == doctest::Approx(std::abs(mom2)).epsilon(1e-9));
        CHECK(ep.z_marginal.z == zu + ep.z_d.z);
    }
}

TEST_CASE("EP with a uniform prior reduces to TP") {
    std::mt19937_64 g(12);
    std::normal_distribution<double> nd;
    for (auto kind : {ConstellationKind::QPSK, ConstellationKind::QAM16}) {
        const auto c = Constellation::make(kind);
        for (auto mode : {BrMode::Exact, BrMode::ExpApprox, BrMode::Identity, BrMode::PiecewiseInverse}) {
            for (int t = 0; t < 100; ++t) {
                const cplx r(nd(g), nd(g));
                const auto p = random_pmf(c.size(), g);
                const auto mix = observation_mixture(r, p, c, 0.3);
                const auto tp = tp_project(mix, mode);
                const auto ep = ep_project(shifted_mixture(mix, {}, p, c, 0.3), {}, mode, {});
                CHECK(ep.z_marginal.mean_angle() == tp.mean_angle());
                CHECK(std::abs(ep.z_marginal.precision() - tp.precision()) <= 1e-12 * tp.precision());
            }
        }
    }
}

TEST_CASE("EP on a pilot returns the observation") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    std::vector<double> pilot(4, 0.0);
    pilot[1] = 1.0;
    const cplx r(0.2, -1.1), zu = std::polar(7.0, 2.0);
    const auto mix = observation_mixture(r, pilot, q, 0.4);
    const auto ep = ep_project(shifted_mixture(mix, {zu}, pilot, q, 0.4), {zu}, BrMode::Exact, {});
    CHECK(std::abs(ep.z_d.z - r * std::conj(q.point(1)) / 0.4) < 1e-12);
}

TEST_CASE("rejection conditions") {
    const cplx zu = std::polar(4.0, 0.3);
    auto comps = [&](std::vector<double> offsets) {
        std::vector<TikhonovComponent> v;
        for (double o : offsets) v.push_back({0.0, {std::polar(3.0, 0.3 + o)}});
        return v;
    };
    const std::vector<RejectionCondition> qpsk = {{pi / 2, 0}};
    CHECK_FALSE(rejection_check(comps({0, 0, 0, 0}), {zu}, qpsk));
    CHECK_FALSE(rejection_check(comps({0.1, -1.5, 1.5, 0}), {zu}, qpsk));
    CHECK(rejection_check(comps({0.1, -1.5, 1.6, 0}), {zu}, qpsk));
    // No prior yet.
    CHECK_FALSE(rejection_check(comps({3, 3, 3, 3}), {cplx(1e-7, 0)}, qpsk));

    const std::vector<RejectionCondition> qam = {{pi / 12, 12}, {pi / 6, 7}};
    std::vector<double> off(16, 0.0);
    for (int i = 0; i < 12; ++i) off[i] = 0.3;  // beyond pi/12, within pi/6
    CHECK_FALSE(rejection_check(comps(off), {zu}, qam));
    off[12] = 0.3;
    CHECK(rejection_check(comps(off), {zu}, qam));
    std::vector<double> off2(16, 0.0);
    for (int i = 0; i < 8; ++i) off2[i] = 0.6;
    CHECK(rejection_check(comps(off2), {zu}, qam));

    TikhonovMixture m{comps({0.1, -1.5, 1.6, 0})};
    const auto ep = ep_project(m, {zu}, BrMode::Exact, qpsk);
    CHECK(ep.rejected);
    CHECK(ep.z_d.z == cplx{});
    CHECK(ep.z_marginal.z == zu);
}

TEST_CASE("damping") {
    const TikhonovParam a{cplx(2, -1)}, b{cplx(-0.5, 3)};
    CHECK(damp(a, b, 1.0) == a);
    CHECK(damp(a, b, 0.0).z == b.z);
    CHECK(std::abs(damp(a, {}, 0.4).z - 0.4 * a.z) < 1e-15);
}

TEST_CASE("three-symbol forward and backward trace") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    auto plan = FramePlan::make(DistributedPilots{1, 1}, 3, q, 5);
    REQUIRE(plan.is_pilot(0));
    REQUIRE_FALSE(plan.is_pilot(1));
    REQUIRE(plan.is_pilot(2));
    const double s2 = 0.2, sd = 0.1;
    const std::vector<cplx> r = {cplx(0.8, 0.5), cplx(-0.7, 0.6), cplx(0.1, -1.0)};
    const std::vector<double> p1 = {0.1, 0.2, 0.3, 0.4};
    std::vector<double> prior(12, 0.25);
    std::copy(p1.begin(), p1.end(), prior.begin() + 4);

    auto conv = [&](cplx z) { return z / (1 + sd * sd * std::abs(z)); };
    const cplx z0 = r[0] * std::conj(q.point(plan.pilot_index[0])) / s2;
    const cplx z2 = r[2] * std::conj(q.point(plan.pilot_index[2])) / s2;
    auto pd1 = [&](double th) {
        double v = 0;
        for (std::size_t m = 0; m < 4; ++m) v += p1[m] * chan(r[1], q.point(m), th, s2);
        return v;
    };
    auto from_moment = [](cplx mom) { return std::polar(inv_bessel_ratio(std::abs(mom)), std::arg(mom)); };

    DetectorInput in;
    in.received = r;
    in.constellation = &q;
    in.plan = &plan;
    in.sigma2 = s2;
    in.sigma_delta = sd;
    in.prior = prior;

    SUBCASE("EP, exact ratio") {
        auto cfg = DetectorConfig::defaults_for(DetectorVariant::EpNative);
        cfg.br_mode = BrMode::Exact;
        const auto out = TikhonovDetector(cfg).run(in);
        const cplx f1 = conv(z0);
        const cplx d1f = from_moment(first_moment([&](double th) { return pd1(th) * tik(th, f1); })) - f1;
        const cplx f2 = conv(f1 + d1f);
        const cplx b1 = conv(z2);
        const cplx d1b = from_moment(first_moment([&](double th) { return pd1(th) * tik(th, b1); })) - b1;
        const cplx b0 = conv(b1 + d1b);
        CHECK(out.z_f[0] == cplx{});
        CHECK(std::abs(out.z_f[1] - f1) < 1e-9);
        CHECK(std::abs(out.z_f[2] - f2) < 1e-9);
        CHECK(out.z_b[2] == cplx{});
        CHECK(std::abs(out.z_b[1] - b1) < 1e-9);
        CHECK(std::abs(out.z_b[0] - b0) < 1e-9);
    }
    SUBCASE("TP") {
        const auto out = TikhonovDetector(DetectorConfig::defaults_for(DetectorVariant::TP)).run(in);
        const cplx d1 = from_moment(first_moment(pd1));
        CHECK(std::abs(out.z_f[1] - conv(z0)) < 1e-9);
        CHECK(std::abs(out.z_f[2] - conv(conv(z0) + d1)) < 1e-9);
        CHECK(std::abs(out.z_b[0] - conv(conv(z2) + d1)) < 1e-9);
    }
    SUBCASE("damped EP leaves pilots alone") {
        const auto out = TikhonovDetector(DetectorConfig::defaults_for(DetectorVariant::EpDamped)).run(in);
        CHECK(std::abs(out.z_f[1] - conv(z0)) < 1e-12);
        CHECK(std::abs(out.z_b[1] - conv(z2)) < 1e-12);
        // The data symbol's message is scaled by the damping factor.
        auto undamped = DetectorConfig::defaults_for(DetectorVariant::EpDamped);
        undamped.damping = 1.0;
        const auto full = TikhonovDetector(undamped).run(in);
        auto unconv = [&](cplx w) { return w / (1 - sd * sd * std::abs(w)); };
        const cplx d = unconv(out.z_f[2]) - out.z_f[1], d_full = unconv(full.z_f[2]) - full.z_f[1];
        CHECK(std::abs(d - 0.4 * d_full) < 1e-9);
    }
}

TEST_CASE("second inner iteration adds the previous opposite message") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    auto plan = FramePlan::make(DistributedPilots{1, 3}, 12, q, 2);
    Rng rng(3);
    std::normal_distribution<double> nd;
    std::vector<cplx> r(12);
    for (auto& x : r) x = cplx(nd(rng), nd(rng));
    DetectorInput in{r, &q, &plan, 0.3, 0.05, {}, {}, {}};
    auto cfg = DetectorConfig::defaults_for(DetectorVariant::EpNative);
    cfg.br_mode = BrMode::Exact;
    const auto one = TikhonovDetector(cfg).run(in);
    cfg.n_inner = 2;
    const auto two = TikhonovDetector(cfg).run(in);
    // Forward at k = 1 in iteration 2: prior z_f[1] + z_b[1] from iteration 1.
    const std::vector<double> uni(4, 0.25);
    const auto mix = observation_mixture(r[1], uni, q, 0.3);
    const cplx zu = two.z_f[1] + one.z_b[1];
    const auto ep = ep_project(shifted_mixture(mix, {zu}, uni, q, 0.3), {zu}, BrMode::Exact, {});
    CHECK(std::abs(two.z_f[1] - one.z_f[1]) < 1e-12);
    CHECK(std::abs(two.z_f[2] - (two.z_f[1] + ep.z_d.z) / (1 + 0.0025 * std::abs(two.z_f[1] + ep.z_d.z))) < 1e-9);
}

TEST_CASE("all-pilot tracking follows the least-squares phase") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    const std::size_t K = 40;
    auto plan = FramePlan::make(AllPilots{}, K, q, 8);
    Rng rng(9);
    std::normal_distribution<double> nd;
    const double s2 = 1e-3, theta = 2.1;
    std::vector<cplx> r(K);
    for (std::size_t k = 0; k < K; ++k)
        r[k] = q.point(plan.pilot_index[k]) * std::polar(1.0, theta) + std::sqrt(s2) * cplx(nd(rng), nd(rng));
    DetectorInput in{r, &q, &plan, s2, 0.0, {}, {}, {}};
    for (auto v : {DetectorVariant::TP, DetectorVariant::EpModified}) {
        const auto out = run_detector(DetectorConfig::defaults_for(v), in);
        cplx ls{};
        for (std::size_t k = 1; k < K; ++k) {
            ls += r[k - 1] * std::conj(q.point(plan.pilot_index[k - 1]));
            CHECK(std::abs(out.z_f[k]) > std::abs(out.z_f[k - 1]));
            if (k >= 20) {
                CHECK(ang_err(std::arg(out.z_f[k]), std::arg(ls)) < 1e-3);
                CHECK(ang_err(std::arg(out.z_f[k]), theta) < 0.02);
            }
        }
    }
}

TEST_CASE("TP cannot bootstrap without pilots") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    const auto plan = all_payload(50);
    Rng rng(1);
    std::normal_distribution<double> nd;
    std::vector<cplx> r(50);
    for (auto& x : r) x = q.point(rng() % 4) * std::polar(1.0, 0.3) + 0.2 * cplx(nd(rng), nd(rng));
    DetectorInput in{r, &q, &plan, 0.04, 0.05, {}, {}, {}};
    const auto out = run_detector(DetectorConfig::defaults_for(DetectorVariant::TP), in);
    for (std::size_t k = 0; k < 50; ++k) {
        CHECK(std::abs(out.z_f[k]) < 1e-9);
        CHECK(std::abs(out.z_b[k]) < 1e-9);
    }
}

TEST_CASE("upward symbol message") {
    const auto c = Constellation::make(ConstellationKind::QAM16);
    std::mt19937_64 g(21);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 20; ++t) {
        const cplx r(nd(g), nd(g)), zu = 3.0 * cplx(nd(g), nd(g));
        const double s2 = 0.1 + std::abs(nd(g)) * 0.3;
        const auto pu = upward_symbol_message(r, {zu}, c, s2);
        std::vector<double> ref(16);
        double s = 0;
        for (std::size_t m = 0; m < 16; ++m) {
            double acc = 0;
            for (int i = 0; i < grid; ++i) {
                const double th = two_pi * i / grid;
                acc += chan(r, c.point(m), th, s2) * tik(th, zu);
            }
            s += (ref[m] = acc);
        }
        for (std::size_t m = 0; m < 16; ++m) CHECK(std::abs(pu[m] - ref[m] / s) < 1e-8);
    }
    // Known-phase limit: AWGN likelihoods of the derotated sample.
    const double th_hat = 0.7, s2 = 0.2;
    const cplx r(0.5, 0.9);
    const auto pu = upward_symbol_message(r, {std::polar(1e9, th_hat)}, c, s2);
    std::vector<double> awgn(16);
    double s = 0;
    for (std::size_t m = 0; m < 16; ++m) s += (awgn[m] = std::exp(-std::norm(r * std::polar(1.0, -th_hat) - c.point(m)) / (2 * s2)));
    for (std::size_t m = 0; m < 16; ++m) CHECK(std::abs(pu[m] - awgn[m] / s) < 1e-6);
    // No phase prior: only the symbol energy matters.
    const auto q = Constellation::make(ConstellationKind::QPSK);
    for (double p : upward_symbol_message(cplx(-0.3, -1.2), {}, q, 0.5)) CHECK(p == doctest::Approx(0.25));
    const auto p16 = upward_symbol_message(cplx(0.1, 0.2), {}, c, 0.5);
    std::size_t lo = 0, hi = 0;
    for (std::size_t m = 0; m < 16; ++m) {
        if (std::norm(c.point(m)) < std::norm(c.point(lo))) lo = m;
        if (std::norm(c.point(m)) > std::norm(c.point(hi))) hi = m;
    }
    CHECK(p16[lo] > p16[hi]);
}

TEST_CASE("dp-BCJR transition taps") {
    auto t0 = DpBcjrDetector::transition_taps(0.0, 64);
    CHECK(t0 == std::vector<double>{1.0});
    for (int n : {16, 17, 64, 512}) {
        for (double sd : {0.01, 0.1, 0.5, 3.0}) {
            const auto t = DpBcjrDetector::transition_taps(sd, n);
            CHECK(t.size() % 2 == 1);
            CHECK(t.size() <= std::size_t(n + 1));
            double s = 0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                s += t[i];
                CHECK(t[i] == doctest::Approx(t[t.size() - 1 - i]));
            }
            CHECK(s == doctest::Approx(1.0));
        }
    }
    // Wide kernel on a small grid is close to uniform.
    const auto w = DpBcjrDetector::transition_taps(3.0, 16);
    CHECK(w.size() == 17);
    CHECK(w[8] == doctest::Approx(1.0 / 16).epsilon(0.05));
}

namespace {

// Generic log-domain forward-backward over an explicit transition matrix.
std::vector<double> hmm_log_marginals(const std::vector<std::vector<double>>& log_emis,
                                      const std::vector<std::vector<double>>& A) {
    const std::size_t K = log_emis.size(), N = A.size();
    auto lse = [](const std::vector<double>& v) {
        double top = -INFINITY;
        for (double x : v) top = std::max(top, x);
        if (top == -INFINITY) return top;
        double s = 0;
        for (double x : v) s += std::exp(x - top);
        return top + std::log(s);
    };
    std::vector<std::vector<double>> a(K, std::vector<double>(N)), b(K, std::vector<double>(N));
    for (auto& x : a[0]) x = -std::log(double(N));
    for (std::size_t k = 1; k < K; ++k)
        for (std::size_t j = 0; j < N; ++j) {
            std::vector<double> terms(N);
            for (std::size_t i = 0; i < N; ++i) terms[i] = a[k - 1][i] + log_emis[k - 1][i] + std::log(A[i][j]);
            a[k][j] = lse(terms);
        }
    for (auto& x : b[K - 1]) x = -std::log(double(N));
    for (std::size_t k = K - 1; k > 0; --k)
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<double> terms(N);
            for (std::size_t j = 0; j < N; ++j) terms[j] = b[k][j] + log_emis[k][j] + std::log(A[i][j]);
            b[k - 1][i] = lse(terms);
        }
    std::vector<double> out;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> post(N);
        for (std::size_t i = 0; i < N; ++i) post[i] = a[k][i] + log_emis[k][i] + b[k][i];
        const double z = lse(post);
        for (double x : post) out.push_back(x - z);
    }
    return out;
}

}  // namespace

TEST_CASE("dp-BCJR equals a generic HMM forward-backward") {
    std::mt19937_64 g(31);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> uk(2, 20), un(8, 64);
    for (int t = 0; t < 10; ++t) {
        const auto c = Constellation::make(t % 2 ? ConstellationKind::QAM16 : ConstellationKind::QPSK);
        const std::size_t K = std::size_t(uk(g)), N = std::size_t(un(g)), M = c.size();
        const double s2 = 0.1 + 0.4 * std::abs(nd(g)), sd = 0.02 + 0.3 * std::abs(nd(g));
        auto plan = FramePlan::make(DistributedPilots{1, 4}, K, c, std::uint64_t(t));
        std::vector<cplx> r(K);
        for (auto& x : r) x = cplx(nd(g), nd(g));
        std::vector<double> prior;
        for (std::size_t k = 0; k < K; ++k) {
            const auto p = random_pmf(M, g);
            prior.insert(prior.end(), p.begin(), p.end());
        }
        DetectorInput in{r, &c, &plan, s2, sd, prior, {}, {}};
        auto cfg = DetectorConfig::defaults_for(DetectorVariant::DpBcjr);
        cfg.n_theta = int(N);
        DpBcjrDetector det(cfg);
        det.keep_posterior(true);
        det.run(in);

        const auto taps = DpBcjrDetector::transition_taps(sd, int(N));
        const long D = long(taps.size() / 2);
        std::vector<std::vector<double>> A(N, std::vector<double>(N, 0.0));
        for (std::size_t i = 0; i < N; ++i)
            for (long d = -D; d <= D; ++d) A[i][std::size_t(((long(i) + d) % long(N) + long(N)) % long(N))] += taps[std::size_t(d + D)];
        std::vector<std::vector<double>> le(K, std::vector<double>(N));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < N; ++i) {
                const double th = two_pi * double(i) / double(N);
                double v = 0;
                for (std::size_t m = 0; m < M; ++m) {
                    const double pm = plan.is_pilot(k) ? (m == plan.pilot_index[k]) : prior[k * M + m];
                    v += pm * chan(r[k], c.point(m), th, s2);
                }
                le[k][i] = std::log(v);
            }
        const auto ref = hmm_log_marginals(le, A);
        const auto& got = det.log_posterior();
        REQUIRE(got.size() == ref.size());
        double worst = 0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (std::isinf(ref[i])) CHECK(std::isinf(got[i]));
            else worst = std::max(worst, std::abs(got[i] - ref[i]));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("dp-BCJR single pilot gives the Tikhonov posterior") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    auto plan = FramePlan::make(AllPilots{}, 1, q, 4);
    const std::vector<cplx> r = {cplx(-0.4, 0.8)};
    DetectorInput in{r, &q, &plan, 0.25, 0.1, {}, {}, {}};
    DpBcjrDetector det(DetectorConfig::defaults_for(DetectorVariant::DpBcjr));
    det.keep_posterior(true);
    det.run(in);
    const cplx z = r[0] * std::conj(q.point(plan.pilot_index[0])) / 0.25;
    std::vector<double> ref(512);
    double s = 0;
    for (int i = 0; i < 512; ++i) s += (ref[i] = tik(two_pi * i / 512, z));
    double tv = 0;
    for (int i = 0; i < 512; ++i) tv += std::abs(std::exp(det.log_posterior()[i]) - ref[i] / s);
    CHECK(0.5 * tv < 1e-3);
}

TEST_CASE("dp-BCJR with a static phase and all pilots") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    const std::size_t K = 30;
    auto plan = FramePlan::make(AllPilots{}, K, q, 6);
    Rng rng(2);
    std::normal_distribution<double> nd;
    const double theta = 1.234;
    std::vector<cplx> r(K);
    for (std::size_t k = 0; k < K; ++k)
        r[k] = q.point(plan.pilot_index[k]) * std::polar(1.0, theta) + 0.05 * cplx(nd(rng), nd(rng));
    auto cfg = DetectorConfig::defaults_for(DetectorVariant::DpBcjr);
    cfg.n_theta = 256;
    DpBcjrDetector det(cfg);
    det.keep_posterior(true);
    const auto out = det.run({r, &q, &plan, 0.0025, 0.0, {}, {}, {}});
    const auto& lp = det.log_posterior();
    const std::size_t best = std::size_t(std::max_element(lp.begin() + 15 * 256, lp.begin() + 16 * 256) - (lp.begin() + 15 * 256));
    CHECK(best == std::size_t(std::lround(theta / (two_pi / 256))));
    CHECK(ang_err(out.phase_estimate[15], theta) < 0.01);
}

TEST_CASE("detectors decode a clean frame") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    auto plan = FramePlan::for_payload(DistributedPilots{1, 19}, 400, q, 3);
    const std::size_t K = plan.total_len;
    Rng rng(17);
    ChannelParams ch{0.05, 6.0 * pi / 180};
    const auto phase = generate_phase(K, ch, rng);
    std::vector<cplx> sym(K);
    std::vector<std::size_t> idx(K);
    for (std::size_t k = 0; k < K; ++k) {
        idx[k] = plan.is_pilot(k) ? plan.pilot_index[k] : std::size_t(rng() % 4);
        sym[k] = q.point(idx[k]);
    }
    const auto r = apply_channel(sym, phase, ch, rng);
    DetectorInput in{r, &q, &plan, ch.sigma2, ch.sigma_delta, {}, {}, {}};
    for (auto v : {DetectorVariant::TP, DetectorVariant::EpModified, DetectorVariant::DpBcjr}) {
        const auto out = run_detector(DetectorConfig::defaults_for(v), in);
        std::size_t errors = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const auto row = std::span(out.upward).subspan(k * 4, 4);
            double s = 0;
            for (double x : row) s += x;
            CHECK(s == doctest::Approx(1.0));
            errors += std::size_t(std::max_element(row.begin(), row.end()) - row.begin()) != idx[k];
        }
        INFO(to_string(v));
        CHECK(errors < K / 25);
    }
}

TEST_CASE("rejection is evaluated only where enabled") {
    const auto q = Constellation::make(ConstellationKind::QPSK);
    auto plan = FramePlan::for_payload(DistributedPilots{1, 19}, 200, q, 3);
    const std::size_t K = plan.total_len;
    Rng rng(5);
    std::normal_distribution<double> nd;
    std::vector<cplx> r(K);
    for (std::size_t k = 0; k < K; ++k)
        r[k] = q.point(plan.is_pilot(k) ? plan.pilot_index[k] : rng() % 4) + 0.5 * cplx(nd(rng), nd(rng));
    auto cfg = DetectorConfig::defaults_for(DetectorVariant::EpModified);
    DetectorInput in{r, &q, &plan, 0.25, 0.1, {}, {}, {}};
    const auto base = TikhonovDetector(cfg).run(in);
    CHECK(base.rejections > 0);
    const std::vector<std::uint8_t> none(K, 0);
    in.rejection_enabled = none;
    CHECK(TikhonovDetector(cfg).run(in).rejections == 0);
    in.rejection_enabled = {};
    const std::vector<std::array<int, 2>> big(K, {4, 4});
    in.mbar_override = big;
    CHECK(TikhonovDetector(cfg).run(in).rejections == 0);
}

TEST_CASE("configuration and complexity tables") {
    CHECK(variant_from_string("EPMod") == DetectorVariant::EpModified);
    CHECK_THROWS(variant_from_string("EP2"));
    for (auto v : {DetectorVariant::TP, DetectorVariant::EpNative, DetectorVariant::EpDamped, DetectorVariant::EpModified,
                   DetectorVariant::DpBcjr})
        CHECK_NOTHROW(DetectorConfig::defaults_for(v).validate());
    auto c = DetectorConfig::defaults_for(DetectorVariant::EpModified);
    c.rejection = {{pi / 6, 0}, {pi / 4, 1}};
    CHECK_THROWS(c.validate());
    c.rejection = {{pi / 6, 2}, {pi / 4, 1}};
    CHECK_NOTHROW(c.validate());
    c.damping = 1.5;
    CHECK_THROWS(c.validate());
    auto tp = DetectorConfig::defaults_for(DetectorVariant::TP);
    tp.rejection = {{pi / 2, 0}};
    CHECK_THROWS(tp.validate());

    CHECK(predicted_ops(DetectorVariant::TP, 4, 0) == OpCounts{40, 66, 10});
    CHECK(predicted_ops(DetectorVariant::EpModified, 16, 0) == OpCounts{274, 569, 200});
    const auto dp = predicted_ops(DetectorVariant::DpBcjr, 4, 512);
    CHECK(dp.adds == 5ull * 512 * 512 + 66 * 512 - 6);
}
