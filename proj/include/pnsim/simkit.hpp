#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pnsim/ldpc.hpp"
#include "pnsim/modem.hpp"
#include "pnsim/receiver.hpp"

namespace pnsim {

struct StopRule {
    std::uint64_t min_frame_errors = 100;
    std::uint64_t max_frames = 20000;

    friend bool operator==(const StopRule&, const StopRule&) = default;
};

/// Either an alist file or a PEG construction.
struct CodeSpec {
    std::string alist;
    std::size_t n = 4000;
    int col_deg = 3;
    int row_deg = 6;
    std::uint64_t seed = 1;

    friend bool operator==(const CodeSpec&, const CodeSpec&) = default;
};

struct RunConfig {
    std::string scenario = "custom";
    ConstellationKind constellation = ConstellationKind::QPSK;
    CodeSpec code;
    PilotPattern pilots = NoPilots{};
    std::uint64_t pilot_seed = 1;
    double sigma_delta_deg = 0.0;
    ReceiverConfig receiver;
    std::vector<double> ebn0_db;
    StopRule stop;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument.
    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Curve label: detector variant, or the genie mode name.
std::string variant_label(const ReceiverConfig& rc);

struct BerRecord {
    std::string scenario;
    std::string variant;
    double ebn0_db = 0.0;
    std::uint64_t frames = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t frame_errors = 0;
    double ber = 0.0;
    double fer = 0.0;
    double mean_turbo_iters = 0.0;
    double mean_rejections = 0.0;
    /// Detector operations per symbol per detector iteration.
    double adds = 0.0, mults = 0.0, lut = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_seconds = 0.0;

    /// Equality of everything except wall time.
    bool same_counts(const BerRecord& o) const;
};

/// Code, constellation and frame plan built once per configuration.
struct Scenario {
    Constellation cons;
    std::shared_ptr<const ldpc::LdpcCode> code;
    std::shared_ptr<const FramePlan> plan;

    static Scenario prepare(const RunConfig& cfg);
};

/// Stream seed of one frame; independent of scheduling.
std::uint64_t frame_seed(std::uint64_t base_seed, double ebn0_db, std::uint64_t frame_index);

/// Transmitted and received frame for a given stream seed.
Frame simulate_frame(const Scenario& sc, double sigma2, double sigma_delta, std::uint64_t seed,
                     std::vector<std::uint8_t>* info = nullptr);

/// Frames run in index order on `workers` threads (0 = hardware). The
/// stop rule is applied to the smallest index prefix, so counters do not
/// depend on the worker count.
BerRecord run_point(const RunConfig& cfg, const Scenario& sc, double ebn0_db, unsigned workers = 0);

struct SweepOutput {
    std::vector<BerRecord> records;
    std::filesystem::path csv, json;
};

/// Runs every grid point; writes <stem>.csv and the resolved configuration
/// as <stem>.json into out_dir (skipped when out_dir is empty). Progress
/// lines go to `log` when given. Throws std::runtime_error on I/O failure.
SweepOutput run_sweep(const RunConfig& cfg, unsigned workers, const std::filesystem::path& out_dir,
                      std::ostream* log = nullptr);

const std::vector<std::string>& csv_columns();
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const BerRecord& r);
/// RFC 4180 quoting when needed.
std::string csv_field(const std::string& s);

struct OpReport {
    OpCounts predicted;
    /// Per symbol per detector iteration, from a calibration frame.
    double adds = 0.0, mults = 0.0, lut = 0.0;
};

/// Closed-form and instrumented cost of one detector. M = 4 and 16 use
/// QPSK and 16QAM, other powers of two use M-PSK.
OpReport count_ops(DetectorVariant v, int M, int n_theta, std::size_t calibration_len = 256);

}  // namespace pnsim
