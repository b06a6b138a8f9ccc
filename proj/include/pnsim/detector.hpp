#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "pnsim/directional.hpp"
#include "pnsim/modem.hpp"
#include "pnsim/types.hpp"

namespace pnsim {

enum class DetectorVariant { TP, EpNative, EpDamped, EpModified, DpBcjr };

const char* to_string(DetectorVariant v);
DetectorVariant variant_from_string(std::string_view s);
bool is_ep(DetectorVariant v);

/// One inconsistency test: reject when more than `mbar` modes deviate from
/// the prior mean by more than `gamma_th` radians.
struct RejectionCondition {
    double gamma_th = 0.0;
    int mbar = 0;

    friend bool operator==(const RejectionCondition&, const RejectionCondition&) = default;
};

inline constexpr std::size_t max_rejection_conditions = 2;

/// Prior magnitude at or below which rejection is not evaluated.
inline constexpr double rejection_min_prior = 1e-6;

struct DetectorConfig {
    DetectorVariant variant = DetectorVariant::TP;
    int n_inner = 1;               ///< N_D
    double damping = 1.0;          ///< xi; 1 means undamped
    BrMode br_mode = BrMode::Exact;
    std::vector<RejectionCondition> rejection;  ///< OR-ed; EpModified only
    bool decision_directed = false;
    int n_theta = 512;             ///< dp-BCJR grid size

    /// Defaults used in the distributed-pilot experiments.
    static DetectorConfig defaults_for(DetectorVariant v);
    /// Throws std::invalid_argument.
    void validate() const;

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

/// Everything the detector sees for one frame.
struct DetectorInput {
    std::span<const cplx> received;
    const Constellation* constellation = nullptr;
    const FramePlan* plan = nullptr;
    double sigma2 = 1.0;
    double sigma_delta = 0.0;
    /// K x M row-major symbol pmfs P_d; empty means uniform. Rows at pilot
    /// positions are ignored (the pilot is known).
    std::span<const double> prior;
    /// Per-symbol rejection enable (payload only); empty enables all payload.
    std::span<const std::uint8_t> rejection_enabled;
    /// Per-symbol M-bar values replacing the configured ones, one per
    /// condition; empty keeps the configuration.
    std::span<const std::array<int, max_rejection_conditions>> mbar_override;
};

struct DetectorOutput {
    /// K x M row-major upward symbol pmfs P_u (normalised, pilot rows too).
    std::vector<double> upward;
    /// Per-symbol phase estimate (radians, wrapped).
    std::vector<double> phase_estimate;
    std::vector<cplx> z_f, z_b;
    /// Rejections in the final inner iteration, both passes.
    std::size_t rejections = 0;
    OpCounts ops;
};

// ---------------------------------------------------------------------------
// Building blocks (exposed for testing)

/// Observation message p_d as a Tikhonov mixture. prior_pmf has M entries.
TikhonovMixture observation_mixture(cplx r, std::span<const double> prior_pmf, const Constellation& cons,
                                    double sigma2);

/// TP projection of the observation mixture alone.
TikhonovParam tp_project(const TikhonovMixture& mix, BrMode mode);

struct EpProjection {
    TikhonovParam z_marginal;
    TikhonovParam z_d;
    bool rejected = false;
};

/// Shifted mixture z_u + z^m with weights re-evaluated at the shifted
/// magnitudes, i.e. the exact product p_d * p_u.
TikhonovMixture shifted_mixture(const TikhonovMixture& obs, TikhonovParam z_u, std::span<const double> prior_pmf,
                                const Constellation& cons, double sigma2);

/// True when any condition sees more than mbar modes with |arg(z_mix z_u*)| > gamma_th.
/// Never fires for |z_u| <= rejection_min_prior.
bool rejection_check(std::span<const TikhonovComponent> shifted, TikhonovParam z_u,
                     std::span<const RejectionCondition> conditions);

/// EP projection; `conditions` empty disables rejection.
EpProjection ep_project(const TikhonovMixture& shifted, TikhonovParam z_u, BrMode mode,
                        std::span<const RejectionCondition> conditions);

TikhonovParam damp(TikhonovParam z_new, TikhonovParam z_prev, double xi);

/// P_u(c^m) for m < M, from the phase prior z_u (forward plus backward).
std::vector<double> upward_symbol_message(cplx r, TikhonovParam z_u, const Constellation& cons, double sigma2);

/// Per-symbol cost predicted by the closed forms of the complexity table.
OpCounts predicted_ops(DetectorVariant v, int M, int n_theta);

// ---------------------------------------------------------------------------

/// Forward/backward Tikhonov filtering (TP and the EP family).
class TikhonovDetector {
public:
    explicit TikhonovDetector(DetectorConfig cfg);
    DetectorOutput run(const DetectorInput& in);
    const DetectorConfig& config() const { return cfg_; }

private:
    DetectorConfig cfg_;
};

/// Forward-backward recursion over a uniform phase grid.
class DpBcjrDetector {
public:
    explicit DpBcjrDetector(DetectorConfig cfg);
    DetectorOutput run(const DetectorInput& in);
    /// Log posterior phase pmf per symbol (K x N_theta) from the last run.
    const std::vector<double>& log_posterior() const { return log_post_; }
    void keep_posterior(bool on) { keep_post_ = on; }

    /// Normalised circular transition taps for offsets -D..D.
    static std::vector<double> transition_taps(double sigma_delta, int n_theta);

private:
    DetectorConfig cfg_;
    bool keep_post_ = false;
    std::vector<double> log_post_;
};

/// Runs whichever detector the variant names.
DetectorOutput run_detector(const DetectorConfig& cfg, const DetectorInput& in);

}  // namespace pnsim
