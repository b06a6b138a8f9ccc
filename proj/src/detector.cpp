#include "pnsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pnsim/kernels.hpp"

namespace pnsim {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Operation tallies. Conventions: a complex product is 4 mults and 2 adds,
// |z| is 2 mults, 1 add and a table access (the square root), comparisons
// count as adds, and every transcendental (exp, log, ln I0, I1/I0 and its
// inverse, arg, cos/sin pair) is one table access.
struct Tally {
    OpCounts* o;
    void add(std::uint64_t a, std::uint64_t m, std::uint64_t l) const {
        o->adds += a;
        o->mults += m;
        o->lut += l;
    }
    void cmul(std::uint64_t n = 1) const { add(2 * n, 4 * n, 0); }
    void cadd(std::uint64_t n = 1) const { add(2 * n, 0, 0); }
    void cabs(std::uint64_t n = 1) const { add(n, 2 * n, n); }
    void lut(std::uint64_t n = 1) const { add(0, 0, n); }
};

// Per-component cost of building an observation or shifted component:
// parameter, magnitude, ln I0, log prior and the two-term weight sum.
void tally_component(const Tally& t) {
    t.cabs();
    t.lut(2);
    t.add(2, 0, 0);
}

void tally_moment_match(const Tally& t, std::uint64_t n) {
    t.add(2 * n, 0, 0);  // max, exponent shift
    t.lut(n);            // exp
    t.cabs(n);
    t.lut(n);            // ratio
    t.add(3 * n, 4 * n, 0);
    t.cabs();
    t.add(0, 1, 2);  // normalise, inverse ratio, arg
    t.add(0, 2, 1);  // polar
}

void tally_propagation(const Tally& t) {
    t.cadd();
    t.cabs();
    t.add(1, 3, 0);
}

struct ModeTable {
    std::vector<cplx> conj_over_s2;  // conj(c^m) / sigma2
    std::vector<double> neg_energy;  // -|c^m|^2 / (2 sigma2)
};

ModeTable make_modes(const Constellation& cons, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("detector: sigma2 must be > 0");
    ModeTable t;
    for (auto c : cons.points()) {
        t.conj_over_s2.push_back(std::conj(c) / sigma2);
        t.neg_energy.push_back(-std::norm(c) / (2.0 * sigma2));
    }
    return t;
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : neg_inf; }

void normalize_pmf_from_logs(std::span<double> v) {
    double top = neg_inf;
    for (double x : v) top = std::max(top, x);
    if (top == neg_inf) {
        std::fill(v.begin(), v.end(), 1.0 / double(v.size()));
        return;
    }
    double s = 0.0;
    for (auto& x : v) s += (x = std::exp(x - top));
    for (auto& x : v) x /= s;
}

// Observation components of one symbol. base holds ln P + neg_energy for
// each retained component, in component order.
struct SymbolObs {
    std::vector<TikhonovComponent> comps;
    std::vector<double> base;
};

void build_obs(cplx r, std::span<const double> pmf, const ModeTable& mt, SymbolObs& out) {
    out.comps.clear();
    out.base.clear();
    for (std::size_t m = 0; m < mt.neg_energy.size(); ++m) {
        if (!(pmf[m] > 0.0)) continue;
        const cplx z = r * mt.conj_over_s2[m];
        const double b = std::log(pmf[m]) + mt.neg_energy[m];
        out.base.push_back(b);
        out.comps.push_back({b + log_bessel_i0(std::abs(z)), {z}});
    }
    if (out.comps.empty()) throw std::invalid_argument("detector: symbol pmf has no mass");
}

void build_shifted(const SymbolObs& obs, cplx z_u, std::vector<TikhonovComponent>& out) {
    out.resize(obs.comps.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx z = z_u + obs.comps[i].param.z;
        out[i] = {obs.base[i] + log_bessel_i0(std::abs(z)), {z}};
    }
}

bool reject(std::span<const TikhonovComponent> shifted, cplx z_u, std::span<const RejectionCondition> conds,
            const Tally* t) {
    if (conds.empty() || std::abs(z_u) <= rejection_min_prior) return false;
    std::array<int, max_rejection_conditions> over{};
    const cplx zc = std::conj(z_u);
    for (const auto& c : shifted) {
        const double g = std::abs(std::arg(c.param.z * zc));
        for (std::size_t j = 0; j < conds.size(); ++j)
            if (g > conds[j].gamma_th) ++over[j];
    }
    if (t) {
        t->cmul(shifted.size());
        t->lut(shifted.size());
        t->add(2 * shifted.size() * conds.size(), 0, 0);
    }
    for (std::size_t j = 0; j < conds.size(); ++j)
        if (over[j] > conds[j].mbar) return true;
    return false;
}

void check_input(const DetectorInput& in) {
    if (!in.constellation || !in.plan) throw std::invalid_argument("detector: constellation and plan required");
    const std::size_t K = in.received.size(), M = in.constellation->size();
    if (in.plan->total_len != K) throw std::invalid_argument("detector: plan length differs from received length");
    if (!in.prior.empty() && in.prior.size() != K * M)
        throw std::invalid_argument("detector: prior must hold K x M values");
    if (!in.rejection_enabled.empty() && in.rejection_enabled.size() != K)
        throw std::invalid_argument("detector: rejection_enabled must hold K values");
    if (!in.mbar_override.empty() && in.mbar_override.size() != K)
        throw std::invalid_argument("detector: mbar_override must hold K values");
    if (!(in.sigma2 > 0.0)) throw std::invalid_argument("detector: sigma2 must be > 0");
    if (!(in.sigma_delta >= 0.0)) throw std::invalid_argument("detector: sigma_delta must be >= 0");
}

// Row k of the prior with pilots replaced by their indicator.
void symbol_pmf(const DetectorInput& in, std::size_t k, std::vector<double>& pmf) {
    const std::size_t M = in.constellation->size();
    pmf.assign(M, 0.0);
    if (in.plan->is_pilot(k)) {
        pmf[in.plan->pilot_index[k]] = 1.0;
    } else if (in.prior.empty()) {
        std::fill(pmf.begin(), pmf.end(), 1.0 / double(M));
    } else {
        std::copy_n(in.prior.begin() + std::ptrdiff_t(k * M), M, pmf.begin());
    }
}

void upward_into(cplx r, cplx z_u, const ModeTable& mt, std::span<double> out, const Tally* t) {
    for (std::size_t m = 0; m < out.size(); ++m)
        out[m] = mt.neg_energy[m] + log_bessel_i0(std::abs(z_u + r * mt.conj_over_s2[m]));
    normalize_pmf_from_logs(out);
    if (t) {
        const auto M = out.size();
        t->cmul(M);
        t->cadd(M);
        t->cabs(M);
        t->lut(M);
        t->add(M, 0, 0);
        t->add(3 * M, M, M);  // max, exp, sum, divide
    }
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(DetectorVariant v) {
    switch (v) {
        case DetectorVariant::TP: return "TP";
        case DetectorVariant::EpNative: return "EP";
        case DetectorVariant::EpDamped: return "EPDamped";
        case DetectorVariant::EpModified: return "EPMod";
        case DetectorVariant::DpBcjr: return "dpBCJR";
    }
    return "?";
}

DetectorVariant variant_from_string(std::string_view s) {
    for (auto v : {DetectorVariant::TP, DetectorVariant::EpNative, DetectorVariant::EpDamped,
                   DetectorVariant::EpModified, DetectorVariant::DpBcjr})
        if (s == to_string(v)) return v;
    if (s == "EpNative") return DetectorVariant::EpNative;
    if (s == "EpDamped") return DetectorVariant::EpDamped;
    if (s == "EpModified") return DetectorVariant::EpModified;
    if (s == "DpBcjr") return DetectorVariant::DpBcjr;
    throw std::invalid_argument("unknown detector variant: " + std::string(s));
}

bool is_ep(DetectorVariant v) {
    return v == DetectorVariant::EpNative || v == DetectorVariant::EpDamped || v == DetectorVariant::EpModified;
}

DetectorConfig DetectorConfig::defaults_for(DetectorVariant v) {
    DetectorConfig c;
    c.variant = v;
    switch (v) {
        case DetectorVariant::TP:
        case DetectorVariant::DpBcjr: break;
        case DetectorVariant::EpNative: c.br_mode = BrMode::ExpApprox; break;
        case DetectorVariant::EpDamped:
            c.br_mode = BrMode::ExpApprox;
            c.damping = 0.4;
            break;
        case DetectorVariant::EpModified:
            c.br_mode = BrMode::PiecewiseInverse;
            c.damping = 0.4;
            c.n_inner = 2;
            c.rejection = {{std::numbers::pi / 2, 0}};
            break;
    }
    return c;
}

void DetectorConfig::validate() const {
    if (n_inner < 1) throw std::invalid_argument("detector: n_inner must be >= 1");
    if (!(damping >= 0.0 && damping <= 1.0)) throw std::invalid_argument("detector: damping must be in [0, 1]");
    if (n_theta < 2) throw std::invalid_argument("detector: n_theta must be >= 2");
    if (rejection.size() > max_rejection_conditions)
        throw std::invalid_argument("detector: at most two rejection conditions");
    for (const auto& c : rejection) {
        if (!(c.gamma_th > 0.0 && c.gamma_th <= std::numbers::pi))
            throw std::invalid_argument("detector: rejection threshold must be in (0, pi]");
        if (c.mbar < 0) throw std::invalid_argument("detector: M-bar must be >= 0");
    }
    if (rejection.size() == 2 && !(rejection[0].gamma_th < rejection[1].gamma_th && rejection[0].mbar > rejection[1].mbar))
        throw std::invalid_argument("detector: two conditions need increasing thresholds and decreasing M-bar");
    if (!rejection.empty() && variant != DetectorVariant::EpModified)
        throw std::invalid_argument("detector: rejection applies to EPMod only");
}

// ---------------------------------------------------------------------------
// Building blocks

TikhonovMixture observation_mixture(cplx r, std::span<const double> prior_pmf, const Constellation& cons,
                                    double sigma2) {
    if (prior_pmf.size() != cons.size()) throw std::invalid_argument("observation_mixture: pmf size must be M");
    const auto mt = make_modes(cons, sigma2);
    SymbolObs obs;
    build_obs(r, prior_pmf, mt, obs);
    TikhonovMixture mix{std::move(obs.comps)};
    mix.normalize();
    return mix;
}

TikhonovParam tp_project(const TikhonovMixture& mix, BrMode mode) { return moment_match(mix, mode).param; }

TikhonovMixture shifted_mixture(const TikhonovMixture& obs, TikhonovParam z_u, std::span<const double> prior_pmf,
                                const Constellation& cons, double sigma2) {
    if (prior_pmf.size() != cons.size()) throw std::invalid_argument("shifted_mixture: pmf size must be M");
    const auto mt = make_modes(cons, sigma2);
    SymbolObs so;
    so.comps = obs.components;
    for (std::size_t m = 0; m < cons.size(); ++m)
        if (prior_pmf[m] > 0.0) so.base.push_back(std::log(prior_pmf[m]) + mt.neg_energy[m]);
    if (so.base.size() != so.comps.size())
        throw std::invalid_argument("shifted_mixture: mixture does not match the pmf support");
    TikhonovMixture out;
    build_shifted(so, z_u.z, out.components);
    out.normalize();
    return out;
}

bool rejection_check(std::span<const TikhonovComponent> shifted, TikhonovParam z_u,
                     std::span<const RejectionCondition> conditions) {
    return reject(shifted, z_u.z, conditions, nullptr);
}

EpProjection ep_project(const TikhonovMixture& shifted, TikhonovParam z_u, BrMode mode,
                        std::span<const RejectionCondition> conditions) {
    EpProjection p;
    if (reject(shifted.components, z_u.z, conditions, nullptr)) {
        p.z_marginal = z_u;
        p.rejected = true;
        return p;
    }
    p.z_d.z = moment_match(shifted, mode).param.z - z_u.z;
    p.z_marginal.z = z_u.z + p.z_d.z;
    return p;
}

TikhonovParam damp(TikhonovParam z_new, TikhonovParam z_prev, double xi) {
    if (xi == 1.0) return z_new;
    return {xi * z_new.z + (1.0 - xi) * z_prev.z};
}

std::vector<double> upward_symbol_message(cplx r, TikhonovParam z_u, const Constellation& cons, double sigma2) {
    const auto mt = make_modes(cons, sigma2);
    std::vector<double> out(cons.size());
    upward_into(r, z_u.z, mt, out, nullptr);
    return out;
}

OpCounts predicted_ops(DetectorVariant v, int M, int n_theta) {
    const auto m = std::uint64_t(M), n = std::uint64_t(n_theta);
    switch (v) {
        case DetectorVariant::TP: return {7 * m + 12, 11 * m + 22, 2 * m + 2};
        case DetectorVariant::EpNative:
        case DetectorVariant::EpDamped:
        case DetectorVariant::EpModified: return {16 * m + 18, 34 * m + 25, 12 * m + 8};
        case DetectorVariant::DpBcjr:
            return {5 * n * n + (18 * m - 6) * n - (m + 2), n * (14 * m + 1) + 1, 2 * n * n + n * (3 * m - 1) - m};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Tikhonov filtering

TikhonovDetector::TikhonovDetector(DetectorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.variant == DetectorVariant::DpBcjr) throw std::invalid_argument("TikhonovDetector: dp-BCJR variant");
}

DetectorOutput TikhonovDetector::run(const DetectorInput& in) {
    check_input(in);
    const std::size_t K = in.received.size(), M = in.constellation->size();
    const auto mt = make_modes(*in.constellation, in.sigma2);
    const double var_delta = in.sigma_delta * in.sigma_delta;
    const bool ep = is_ep(cfg_.variant);

    DetectorOutput out;
    Tally t{&out.ops};

    std::vector<SymbolObs> obs(K);
    std::vector<double> pmf;
    for (std::size_t k = 0; k < K; ++k) {
        symbol_pmf(in, k, pmf);
        build_obs(in.received[k], pmf, mt, obs[k]);
        t.cmul(obs[k].comps.size());
        for (std::size_t i = 0; i < obs[k].comps.size(); ++i) tally_component(t);
    }

    std::vector<cplx> z_tp;
    if (!ep) {
        z_tp.resize(K);
        for (std::size_t k = 0; k < K; ++k) z_tp[k] = moment_match(obs[k].comps, cfg_.br_mode).param.z;
    }

    std::vector<RejectionCondition> conds_k;
    auto conditions_at = [&](std::size_t k) -> std::span<const RejectionCondition> {
        if (cfg_.variant != DetectorVariant::EpModified || cfg_.rejection.empty() || in.plan->is_pilot(k)) return {};
        if (!in.rejection_enabled.empty() && !in.rejection_enabled[k]) return {};
        if (in.mbar_override.empty()) return cfg_.rejection;
        conds_k = cfg_.rejection;
        for (std::size_t j = 0; j < conds_k.size(); ++j) conds_k[j].mbar = in.mbar_override[k][j];
        return conds_k;
    };

    out.z_f.assign(K, cplx{});
    out.z_b.assign(K, cplx{});
    std::vector<cplx> zf_old, zb_old, prev_f(K), prev_b(K), zd_f(K);
    std::vector<TikhonovComponent> shifted;
    std::size_t rejections = 0;

    // One observation step: returns the downward parameter sent along the chain.
    auto observe = [&](std::size_t k, cplx z_u, std::vector<cplx>& prev) -> cplx {
        if (!ep) {
            tally_moment_match(t, obs[k].comps.size());
            return damp({z_tp[k]}, {prev[k]}, cfg_.damping).z;
        }
        // A pilot observation is already Tikhonov: passed on as is, undamped.
        if (in.plan->is_pilot(k)) {
            prev[k] = obs[k].comps[0].param.z;
            return prev[k];
        }
        build_shifted(obs[k], z_u, shifted);
        for (std::size_t i = 0; i < shifted.size(); ++i) {
            t.cadd();
            tally_component(t);
        }
        if (reject(shifted, z_u, conditions_at(k), &t)) {
            ++rejections;
            prev[k] = cplx{};
            return cplx{};
        }
        tally_moment_match(t, shifted.size());
        const cplx z_new = moment_match(shifted, cfg_.br_mode).param.z - z_u;
        t.cadd();
        if (cfg_.damping != 1.0) t.add(2, 4, 0);
        const cplx z_d = damp({z_new}, {prev[k]}, cfg_.damping).z;
        prev[k] = z_d;
        return z_d;
    };

    for (int n = 1; n <= cfg_.n_inner; ++n) {
        rejections = 0;
        zf_old = out.z_f;
        zb_old = out.z_b;
        // forward
        out.z_f[0] = cplx{};
        for (std::size_t k = 0; k < K; ++k) {
            cplx z_u = out.z_f[k];
            if (n > 1) {
                z_u += zb_old[k];
                t.cadd();
            }
            zd_f[k] = observe(k, z_u, prev_f);
            if (k + 1 < K) {
                out.z_f[k + 1] = convolve_with_gaussian({out.z_f[k] + zd_f[k]}, var_delta).z;
                tally_propagation(t);
            }
        }
        // backward
        out.z_b[K - 1] = cplx{};
        for (std::size_t k = K; k-- > 0;) {
            cplx z_u = out.z_b[k];
            if (n > 1) {
                z_u += zf_old[k];
                t.cadd();
            }
            const cplx z_d = observe(k, z_u, prev_b);
            if (k > 0) {
                out.z_b[k - 1] = convolve_with_gaussian({out.z_b[k] + z_d}, var_delta).z;
                tally_propagation(t);
            }
        }
    }
    out.rejections = rejections;

    out.upward.resize(K * M);
    out.phase_estimate.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const cplx z_u = out.z_f[k] + out.z_b[k];
        t.cadd();
        upward_into(in.received[k], z_u, mt, std::span(out.upward).subspan(k * M, M), &t);
        out.phase_estimate[k] = std::arg(z_u + zd_f[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// dp-BCJR

DpBcjrDetector::DpBcjrDetector(DetectorConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<double> DpBcjrDetector::transition_taps(double sigma_delta, int n_theta) {
    if (n_theta < 2) throw std::invalid_argument("transition_taps: n_theta must be >= 2");
    if (!(sigma_delta >= 0.0)) throw std::invalid_argument("transition_taps: sigma_delta must be >= 0");
    const double step = two_pi / n_theta;
    const long reach = long(std::floor(5.0 * sigma_delta / step));
    if (reach == 0) return {1.0};
    const long N = n_theta;
    if (2 * reach + 1 <= N) {
        std::vector<double> taps(std::size_t(2 * reach + 1));
        double s = 0.0;
        for (long d = -reach; d <= reach; ++d) {
            const double x = d * step / sigma_delta;
            s += (taps[std::size_t(d + reach)] = std::exp(-0.5 * x * x));
        }
        for (auto& v : taps) v /= s;
        return taps;
    }
    // Truncation wider than the circle: fold offsets onto bins.
    std::vector<double> bins(std::size_t(N), 0.0);
    for (long d = -reach; d <= reach; ++d) {
        const double x = d * step / sigma_delta;
        bins[std::size_t(((d % N) + N) % N)] += std::exp(-0.5 * x * x);
    }
    const long half = N / 2;
    std::vector<double> taps(std::size_t(2 * half + 1));
    for (long d = -half; d <= half; ++d) taps[std::size_t(d + half)] = bins[std::size_t(((d % N) + N) % N)];
    if (N % 2 == 0) {
        // The antipodal bin appears at both ends.
        taps.front() *= 0.5;
        taps.back() *= 0.5;
    }
    double s = 0.0;
    for (double v : taps) s += v;
    for (auto& v : taps) v /= s;
    return taps;
}

DetectorOutput DpBcjrDetector::run(const DetectorInput& in) {
    check_input(in);
    const std::size_t K = in.received.size(), M = in.constellation->size();
    const std::size_t N = std::size_t(cfg_.n_theta);
    const auto mt = make_modes(*in.constellation, in.sigma2);
    const auto& kt = kernels::table();

    DetectorOutput out;
    Tally t{&out.ops};

    std::vector<double> cos_tab(N), sin_tab(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double th = two_pi * double(i) / double(N);
        cos_tab[i] = std::cos(th);
        sin_tab[i] = std::sin(th);
    }
    const auto taps = transition_taps(in.sigma_delta, cfg_.n_theta);
    const std::size_t T = taps.size(), D = T / 2;

    // Emissions, each scaled by its own constant.
    std::vector<double> emis(K * N), lik(N), pmf;
    std::vector<double> cshift(M);
    for (std::size_t k = 0; k < K; ++k) {
        symbol_pmf(in, k, pmf);
        double top = neg_inf;
        for (std::size_t m = 0; m < M; ++m) {
            const cplx z = in.received[k] * mt.conj_over_s2[m];
            cshift[m] = safe_log(pmf[m]) + mt.neg_energy[m];
            if (cshift[m] != neg_inf) top = std::max(top, cshift[m] + std::abs(z));
        }
        double* e = &emis[k * N];
        std::fill(e, e + N, 0.0);
        for (std::size_t m = 0; m < M; ++m) {
            if (cshift[m] == neg_inf) continue;
            const cplx z = in.received[k] * mt.conj_over_s2[m];
            kt.exp_trig(cshift[m] - top, z.real(), z.imag(), cos_tab.data(), sin_tab.data(), lik.data(), N);
            kt.axpy(1.0, lik.data(), e, N);
        }
        t.cmul(M);
        t.cabs(M);
        t.add(3 * M, 0, M);
        t.add(3 * N * M, 2 * N * M, N * M);
    }

    std::vector<double> fwd(K * N), bwd(K * N), ext(N + T - 1), prod(N);
    // x <- T(x), circular
    auto transition = [&](const double* x, double* y) {
        for (std::size_t j = 0; j < ext.size(); ++j) ext[j] = x[(j + N - D % N) % N];
        kt.correlate(ext.data(), N, taps.data(), T, y);
        t.add(N * (T - 1), N * T, 0);
    };
    // y <- normalised T(x * e), falling back to e, then uniform, on underflow.
    auto step = [&](const double* x, const double* e, double* y) {
        double s = kt.multiply_sum(x, e, prod.data(), N);
        t.add(N, N, 0);
        if (!(s > 0.0)) {
            std::copy_n(e, N, prod.data());
            s = kt.sum(prod.data(), N);
        }
        if (!(s > 0.0)) {
            std::fill(prod.begin(), prod.end(), 1.0);
            s = double(N);
        }
        kt.scale(prod.data(), N, 1.0 / s);
        transition(prod.data(), y);
        const double s2 = kt.sum(y, N);
        kt.scale(y, N, 1.0 / s2);
        t.add(N, 2 * N + 2, 0);
    };

    std::fill_n(fwd.begin(), N, 1.0 / double(N));
    for (std::size_t k = 0; k + 1 < K; ++k) step(&fwd[k * N], &emis[k * N], &fwd[(k + 1) * N]);
    std::fill_n(bwd.begin() + std::ptrdiff_t((K - 1) * N), N, 1.0 / double(N));
    for (std::size_t k = K - 1; k > 0; --k) step(&bwd[k * N], &emis[k * N], &bwd[(k - 1) * N]);

    out.upward.resize(K * M);
    out.phase_estimate.resize(K);
    if (keep_post_) log_post_.assign(K * N, 0.0);
    else log_post_.clear();
    std::vector<double> fb(N), lu(M);
    for (std::size_t k = 0; k < K; ++k) {
        kt.multiply_sum(&fwd[k * N], &bwd[k * N], fb.data(), N);
        t.add(N, N, 0);
        double top = neg_inf;
        for (std::size_t m = 0; m < M; ++m)
            top = std::max(top, mt.neg_energy[m] + std::abs(in.received[k] * mt.conj_over_s2[m]));
        for (std::size_t m = 0; m < M; ++m) {
            const cplx z = in.received[k] * mt.conj_over_s2[m];
            kt.exp_trig(mt.neg_energy[m] - top, z.real(), z.imag(), cos_tab.data(), sin_tab.data(), lik.data(), N);
            lu[m] = safe_log(kt.dot(fb.data(), lik.data(), N));
        }
        t.cmul(M);
        t.cabs(M);
        t.add(2 * M, 0, 0);
        t.add(3 * N * M, 3 * N * M, N * M);
        normalize_pmf_from_logs(lu);
        t.add(3 * M, M, 2 * M);
        std::copy(lu.begin(), lu.end(), out.upward.begin() + std::ptrdiff_t(k * M));

        // Posterior over the grid.
        const double s = kt.multiply_sum(fb.data(), &emis[k * N], prod.data(), N);
        cplx mean{};
        for (std::size_t i = 0; i < N; ++i) mean += prod[i] * cplx(cos_tab[i], sin_tab[i]);
        out.phase_estimate[k] = std::arg(mean);
        if (keep_post_) {
            const double ls = std::log(s);
            for (std::size_t i = 0; i < N; ++i) log_post_[k * N + i] = safe_log(prod[i]) - ls;
        }
    }
    return out;
}

DetectorOutput run_detector(const DetectorConfig& cfg, const DetectorInput& in) {
    if (cfg.variant == DetectorVariant::DpBcjr) return DpBcjrDetector(cfg).run(in);
    return TikhonovDetector(cfg).run(in);
}

}  // namespace pnsim
