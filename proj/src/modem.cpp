#include "pnsim/modem.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pnsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Gray code per axis for 16-QAM: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double pam4_level(int b0, int b1) {
    if (b0 == 0) return b1 == 0 ? -3.0 : -1.0;
    return b1 == 1 ? 1.0 : 3.0;
}

}  // namespace

Constellation Constellation::make(ConstellationKind kind) {
    Constellation c;
    c.kind_ = kind;
    switch (kind) {
        case ConstellationKind::QPSK: {
            c.bits_ = 2;
            const double a = 1.0 / std::sqrt(2.0);
            for (int m = 0; m < 4; ++m) {
                const int b0 = (m >> 1) & 1, b1 = m & 1;
                c.points_.emplace_back(a * (1 - 2 * b0), a * (1 - 2 * b1));
            }
            break;
        }
        case ConstellationKind::QAM16: {
            c.bits_ = 4;
            const double a = 1.0 / std::sqrt(10.0);
            for (int m = 0; m < 16; ++m) {
                const int b0 = (m >> 3) & 1, b1 = (m >> 2) & 1, b2 = (m >> 1) & 1, b3 = m & 1;
                c.points_.emplace_back(a * pam4_level(b0, b1), a * pam4_level(b2, b3));
            }
            break;
        }
        case ConstellationKind::PSK: throw std::invalid_argument("use Constellation::psk for M-PSK");
    }
    return c;
}

Constellation Constellation::psk(std::size_t M) {
    if (M < 2 || M > 256 || (M & (M - 1))) throw std::invalid_argument("psk: M must be a power of two in [2, 256]");
    Constellation c;
    c.kind_ = ConstellationKind::PSK;
    while ((std::size_t(1) << c.bits_) < M) ++c.bits_;
    c.points_.resize(M);
    for (std::size_t i = 0; i < M; ++i) c.points_[i ^ (i >> 1)] = std::polar(1.0, 2.0 * std::numbers::pi * double(i) / double(M));
    return c;
}

Constellation Constellation::from_name(std::string_view name) {
    if (name == "QPSK") return make(ConstellationKind::QPSK);
    if (name == "QAM16" || name == "16QAM") return make(ConstellationKind::QAM16);
    throw std::invalid_argument("unknown constellation '" + std::string(name) + "'");
}

const char* Constellation::name() const {
    switch (kind_) {
        case ConstellationKind::QPSK: return "QPSK";
        case ConstellationKind::QAM16: return "QAM16";
        case ConstellationKind::PSK: return "PSK";
    }
    return "?";
}

std::size_t Constellation::index_of(std::span<const std::uint8_t> bits) const {
    if (bits.size() != std::size_t(bits_)) throw std::invalid_argument("index_of: wrong bit count");
    std::size_t m = 0;
    for (auto b : bits) m = (m << 1) | (b & 1u);
    return m;
}

std::size_t Constellation::nearest(cplx r) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < points_.size(); ++m) {
        const double d = std::norm(r - points_[m]);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

std::size_t implied_pilot_count(const PilotPattern& pattern, std::size_t total_len) {
    const std::size_t K = total_len;
    return std::visit(
        overloaded{
            [K](const DistributedPilots& d) -> std::size_t {
                const std::size_t period = d.block_len + d.gap;
                if (period == 0) return 0;
                return (K / period) * d.block_len + std::min(K % period, d.block_len);
            },
            [K](const BurstPilots& b) -> std::size_t {
                if (K <= b.preamble + b.postamble) return K;
                const std::size_t mid = K - b.preamble - b.postamble;
                const std::size_t period = b.burst_gap + b.burst_len;
                const std::size_t in_mid =
                    period == 0 ? 0 : (mid / period) * b.burst_len + (mid % period > b.burst_gap ? mid % period - b.burst_gap : 0);
                return b.preamble + b.postamble + in_mid;
            },
            [K](const PreamblePostamblePilots& p) -> std::size_t { return std::min(K, 2 * p.len_each); },
            [](const NoPilots&) -> std::size_t { return 0; },
            [K](const AllPilots&) -> std::size_t { return K; },
        },
        pattern);
}

namespace {

std::vector<std::uint8_t> pilot_mask_for(const PilotPattern& pattern, std::size_t K) {
    std::vector<std::uint8_t> mask(K, 0);
    std::visit(overloaded{
                   [&](const DistributedPilots& d) {
                       const std::size_t period = d.block_len + d.gap;
                       if (period == 0) return;
                       for (std::size_t k = 0; k < K; ++k) mask[k] = (k % period) < d.block_len;
                   },
                   [&](const BurstPilots& b) {
                       if (K <= b.preamble + b.postamble) {
                           std::fill(mask.begin(), mask.end(), 1);
                           return;
                       }
                       for (std::size_t k = 0; k < b.preamble; ++k) mask[k] = 1;
                       for (std::size_t k = K - b.postamble; k < K; ++k) mask[k] = 1;
                       const std::size_t period = b.burst_gap + b.burst_len;
                       for (std::size_t k = b.preamble; k < K - b.postamble; ++k)
                           mask[k] = period != 0 && (k - b.preamble) % period >= b.burst_gap;
                   },
                   [&](const PreamblePostamblePilots& p) {
                       for (std::size_t k = 0; k < K; ++k) mask[k] = k < p.len_each || k + p.len_each >= K;
                   },
                   [&](const NoPilots&) {},
                   [&](const AllPilots&) { std::fill(mask.begin(), mask.end(), 1); },
               },
               pattern);
    return mask;
}

}  // namespace

FramePlan FramePlan::make(const PilotPattern& pattern, std::size_t total_len, const Constellation& cons,
                          std::uint64_t pilot_seed) {
    if (total_len == 0) throw std::invalid_argument("FramePlan: total length must be positive");
    FramePlan plan;
    plan.pattern = pattern;
    plan.total_len = total_len;
    plan.pilot_seed = pilot_seed;
    plan.pilot_mask = pilot_mask_for(pattern, total_len);
    plan.pilot_index.assign(total_len, 0);

    Rng rng(pilot_seed);
    std::uniform_int_distribution<std::size_t> pick(0, cons.size() - 1);
    for (std::size_t k = 0; k < total_len; ++k) {
        if (plan.pilot_mask[k])
            plan.pilot_index[k] = pick(rng);
        else
            plan.payload_positions.push_back(k);
    }
    return plan;
}

FramePlan FramePlan::for_payload(const PilotPattern& pattern, std::size_t payload_len,
                                 const Constellation& cons, std::uint64_t pilot_seed) {
    if (std::holds_alternative<AllPilots>(pattern))
        throw std::invalid_argument("FramePlan::for_payload: an all-pilot pattern carries no payload");
    if (payload_len == 0) throw std::invalid_argument("FramePlan::for_payload: payload must be positive");
    const std::size_t limit = 64 * payload_len + 1'000'000;
    for (std::size_t K = payload_len; K < limit; ++K) {
        if (K - implied_pilot_count(pattern, K) == payload_len) return make(pattern, K, cons, pilot_seed);
    }
    throw std::invalid_argument("FramePlan::for_payload: pattern cannot carry the requested payload");
}

void ChannelParams::validate() const {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("ChannelParams: sigma2 must be > 0");
    if (!(sigma_delta >= 0.0)) throw std::invalid_argument("ChannelParams: sigma_delta must be >= 0");
}

std::vector<double> generate_phase(std::size_t len, const ChannelParams& params, Rng& rng) {
    if (len == 0) throw std::invalid_argument("generate_phase: length must be positive");
    std::vector<double> theta(len);
    std::uniform_real_distribution<double> start(0.0, two_pi);
    std::normal_distribution<double> step(0.0, 1.0);
    theta[0] = start(rng);
    for (std::size_t k = 1; k < len; ++k) theta[k] = theta[k - 1] + params.sigma_delta * step(rng);
    return theta;
}

std::vector<cplx> apply_channel(std::span<const cplx> symbols, std::span<const double> phase,
                                const ChannelParams& params, Rng& rng) {
    if (symbols.size() != phase.size()) throw std::invalid_argument("apply_channel: length mismatch");
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sd = std::sqrt(params.sigma2);
    std::vector<cplx> r(symbols.size());
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const double re = noise(rng);
        const double im = noise(rng);
        r[k] = symbols[k] * std::polar(1.0, phase[k]) + sd * cplx(re, im);
    }
    return r;
}

double ebn0_to_sigma2(double ebn0_db, double code_rate, int bits_per_symbol, double payload_fraction) {
    if (!(code_rate > 0.0) || bits_per_symbol <= 0 || !(payload_fraction > 0.0) || payload_fraction > 1.0)
        throw std::invalid_argument("ebn0_to_sigma2: rate, bits per symbol and payload fraction must be positive");
    if (!std::isfinite(ebn0_db)) throw std::invalid_argument("ebn0_to_sigma2: Eb/N0 must be finite");
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    return 1.0 / (2.0 * ebn0 * code_rate * bits_per_symbol * payload_fraction);
}

Frame build_frame(std::shared_ptr<const FramePlan> plan, const Constellation& cons,
                  std::span<const std::uint8_t> coded_bits) {
    const std::size_t bps = std::size_t(cons.bits_per_symbol());
    if (coded_bits.size() != plan->payload_count() * bps)
        throw std::invalid_argument("build_frame: coded bit count does not match payload capacity");
    Frame f;
    f.coded_bits.assign(coded_bits.begin(), coded_bits.end());
    f.symbol_index = plan->pilot_index;
    for (std::size_t p = 0; p < plan->payload_count(); ++p)
        f.symbol_index[plan->payload_positions[p]] = cons.index_of(coded_bits.subspan(p * bps, bps));
    f.symbols.resize(plan->total_len);
    for (std::size_t k = 0; k < plan->total_len; ++k) f.symbols[k] = cons.point(f.symbol_index[k]);
    f.plan = std::move(plan);
    return f;
}

std::vector<std::uint8_t> demap_hard(const Constellation& cons, const FramePlan& plan,
                                     std::span<const cplx> samples) {
    if (samples.size() != plan.total_len) throw std::invalid_argument("demap_hard: length mismatch");
    const int bps = cons.bits_per_symbol();
    std::vector<std::uint8_t> bits;
    bits.reserve(plan.payload_count() * std::size_t(bps));
    for (std::size_t k : plan.payload_positions) {
        const std::size_t m = cons.nearest(samples[k]);
        for (int i = 0; i < bps; ++i) bits.push_back(std::uint8_t(cons.bit(m, i)));
    }
    return bits;
}

}  // namespace pnsim
