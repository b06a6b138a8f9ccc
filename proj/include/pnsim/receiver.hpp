#pragma once

#include <limits>
#include <span>
#include <vector>

#include "pnsim/detector.hpp"
#include "pnsim/ldpc.hpp"
#include "pnsim/modem.hpp"

namespace pnsim {

/// N_D-N_C-N_T.
struct IterationSchedule {
    int n_detector = 1;
    int n_decoder = 200;
    int n_turbo = 1;

    void validate() const;
    friend bool operator==(const IterationSchedule&, const IterationSchedule&) = default;
};

enum class ReceiverMode {
    Detector,    ///< phase detector in the loop
    KnownPhase,  ///< true phase given; AWGN demapping
    AllPilots,   ///< every symbol known to the phase estimator
};

const char* to_string(ReceiverMode m);
ReceiverMode receiver_mode_from_string(std::string_view s);

struct ReceiverConfig {
    IterationSchedule schedule;
    DetectorConfig detector;  ///< n_inner is taken from the schedule
    ReceiverMode mode = ReceiverMode::Detector;
    /// sigma2 handed to the detector is multiplied by this factor when
    /// Eb/N0 exceeds n0_inflation_above_db.
    double n0_inflation = 1.0;
    double n0_inflation_above_db = std::numeric_limits<double>::infinity();
    /// Keep decoder check messages across turbo iterations.
    bool decoder_warm_start = false;

    void validate() const;
    friend bool operator==(const ReceiverConfig&, const ReceiverConfig&) = default;
};

/// Bit LLRs, log P(b=0)/P(b=1), of row-major pmfs (count x M), clamped to llr_max.
std::vector<double> pmf_to_bit_llrs(std::span<const double> pmfs, const Constellation& cons);
/// Symbol pmfs from independent bit LLRs.
std::vector<double> bit_llrs_to_pmf(std::span<const double> llrs, const Constellation& cons);

/// Rounding used by the decision-directed thresholds (half away from zero).
std::array<int, max_rejection_conditions> decision_directed_mbar(double max_pd);

/// Phase error RMS after removing the best single constant offset.
double phase_rmse(std::span<const double> estimate, std::span<const double> truth);

struct IterationDiagnostics {
    double phase_rmse = 0.0;
    std::size_t rejections = 0;
    int decoder_iterations = 0;
    OpCounts detector_ops;
};

struct ReceiverResult {
    std::vector<std::uint8_t> codeword;  ///< hard decisions, n bits
    std::vector<std::uint8_t> info;      ///< k bits
    bool converged = false;
    int turbo_iterations = 0;
    std::vector<IterationDiagnostics> iterations;
};

class Receiver {
public:
    Receiver(const ldpc::LdpcCode& code, const Constellation& cons, ReceiverConfig cfg);

    /// sigma2 and sigma_delta are the true channel values; ebn0_db selects
    /// whether N0 inflation applies.
    ReceiverResult run(const Frame& frame, double sigma2, double sigma_delta, double ebn0_db);

    const ReceiverConfig& config() const { return cfg_; }

private:
    ReceiverResult run_known_phase(const Frame& frame, double sigma2);

    const ldpc::LdpcCode* code_;
    const Constellation* cons_;
    ReceiverConfig cfg_;
    ldpc::SpaDecoder decoder_;
};

}  // namespace pnsim
