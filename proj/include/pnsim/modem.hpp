#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "pnsim/types.hpp"

namespace pnsim {

using Rng = std::mt19937_64;

enum class ConstellationKind { QPSK, QAM16, PSK };

/// Unit-energy Gray-labelled constellation. Symbol index m is its bit label
/// read MSB first, so bit(m, 0) is the first coded bit carried by the symbol.
class Constellation {
public:
    static Constellation make(ConstellationKind kind);
    static Constellation from_name(std::string_view name);
    /// Gray-labelled M-PSK, M a power of two in [2, 256].
    static Constellation psk(std::size_t M);

    ConstellationKind kind() const { return kind_; }
    const char* name() const;
    std::size_t size() const { return points_.size(); }
    int bits_per_symbol() const { return bits_; }
    cplx point(std::size_t m) const { return points_[m]; }
    std::span<const cplx> points() const { return points_; }
    int bit(std::size_t m, int i) const { return int((m >> (bits_ - 1 - i)) & 1u); }
    std::size_t index_of(std::span<const std::uint8_t> bits) const;
    std::size_t nearest(cplx r) const;

private:
    ConstellationKind kind_{};
    int bits_ = 0;
    std::vector<cplx> points_;
};

// Pilot placement descriptors -----------------------------------------------

/// `block_len` pilots, then `gap` payload symbols, repeated from index 0.
struct DistributedPilots {
    std::size_t block_len = 1;
    std::size_t gap = 19;

    friend bool operator==(const DistributedPilots&, const DistributedPilots&) = default;
};

/// Preamble, then payload chunks of `burst_gap` separated by `burst_len`
/// pilot bursts, then postamble.
struct BurstPilots {
    std::size_t preamble = 90;
    std::size_t burst_len = 36;
    std::size_t burst_gap = 1440;
    std::size_t postamble = 90;

    friend bool operator==(const BurstPilots&, const BurstPilots&) = default;
};

struct PreamblePostamblePilots {
    std::size_t len_each = 90;

    friend bool operator==(const PreamblePostamblePilots&, const PreamblePostamblePilots&) = default;
};

struct NoPilots {
    friend bool operator==(const NoPilots&, const NoPilots&) = default;
};
/// Every symbol known (genie reference frames).
struct AllPilots {
    friend bool operator==(const AllPilots&, const AllPilots&) = default;
};

using PilotPattern =
    std::variant<DistributedPilots, BurstPilots, PreamblePostamblePilots, NoPilots, AllPilots>;

/// Pilot count a pattern implies for a frame of total_len symbols, by closed form.
std::size_t implied_pilot_count(const PilotPattern& pattern, std::size_t total_len);

struct FramePlan {
    PilotPattern pattern;
    std::size_t total_len = 0;
    std::vector<std::uint8_t> pilot_mask;
    /// Constellation index of the pilot at each masked position (0 elsewhere).
    std::vector<std::size_t> pilot_index;
    std::vector<std::size_t> payload_positions;
    std::uint64_t pilot_seed = 0;

    /// Pilot values are drawn uniformly from the constellation by a stream
    /// seeded with pilot_seed, so transmitter and receiver agree on them.
    static FramePlan make(const PilotPattern& pattern, std::size_t total_len, const Constellation& cons,
                          std::uint64_t pilot_seed);
    /// Shortest plan carrying exactly payload_len payload symbols.
    static FramePlan for_payload(const PilotPattern& pattern, std::size_t payload_len,
                                 const Constellation& cons, std::uint64_t pilot_seed);

    std::size_t pilot_count() const { return total_len - payload_positions.size(); }
    std::size_t payload_count() const { return payload_positions.size(); }
    double payload_fraction() const { return double(payload_count()) / double(total_len); }
    bool is_pilot(std::size_t k) const { return pilot_mask[k] != 0; }
};

struct ChannelParams {
    double sigma2 = 1.0;       ///< noise variance per real component
    double sigma_delta = 0.0;  ///< phase increment standard deviation, rad

    void validate() const;
};

struct Frame {
    std::shared_ptr<const FramePlan> plan;
    std::vector<std::uint8_t> coded_bits;
    std::vector<std::size_t> symbol_index;
    std::vector<cplx> symbols;
    std::vector<double> true_phase;  ///< unwrapped
    std::vector<cplx> received;
};

/// Wiener phase: uniform start, Gaussian increments; stored unwrapped.
std::vector<double> generate_phase(std::size_t len, const ChannelParams& params, Rng& rng);

/// r_k = c_k e^{j theta_k} + n_k with per-component noise variance sigma2.
std::vector<cplx> apply_channel(std::span<const cplx> symbols, std::span<const double> phase,
                                const ChannelParams& params, Rng& rng);

/// Per-component noise variance for a target Eb/N0 (N0 = 2 sigma2, Es = 1),
/// where Eb counts only information bits of payload symbols.
double ebn0_to_sigma2(double ebn0_db, double code_rate, int bits_per_symbol, double payload_fraction);

/// Places Gray-mapped coded bits on payload positions and pilots elsewhere.
/// The returned frame has no phase or received samples yet.
Frame build_frame(std::shared_ptr<const FramePlan> plan, const Constellation& cons,
                  std::span<const std::uint8_t> coded_bits);

/// Nearest-point decisions on payload positions, as coded bits.
std::vector<std::uint8_t> demap_hard(const Constellation& cons, const FramePlan& plan,
                                     std::span<const cplx> samples);

}  // namespace pnsim
