#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "pnsim/types.hpp"

namespace pnsim::ldpc {

/// Sparse binary parity-check matrix, adjacency kept both ways.
struct ParityCheckMatrix {
    std::size_t n = 0;  ///< codeword length (columns)
    std::size_t m = 0;  ///< checks (rows)
    std::vector<std::vector<std::uint32_t>> rows;  ///< column indices per check, ascending
    std::vector<std::vector<std::uint32_t>> cols;  ///< check indices per bit, ascending

    /// Builds the column view and validates. Throws std::invalid_argument.
    static ParityCheckMatrix from_rows(std::size_t n, std::vector<std::vector<std::uint32_t>> rows);

    void validate() const;
    std::size_t edge_count() const;
    bool has_four_cycles() const;
    std::vector<std::uint8_t> syndrome(std::span<const std::uint8_t> bits) const;
    bool is_codeword(std::span<const std::uint8_t> bits) const;
    /// Rank over GF(2), by dense elimination.
    std::size_t rank() const;

    friend bool operator==(const ParityCheckMatrix&, const ParityCheckMatrix&) = default;
};

/// Parse failure carrying the 1-based line where it was detected.
class AlistError : public std::runtime_error {
public:
    AlistError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

ParityCheckMatrix read_alist(std::istream& in);
void write_alist(std::ostream& out, const ParityCheckMatrix& H);

/// LDPC code with encoder preprocessing done. Bits are solved by sparse
/// back-substitution in peeling order; the few columns the peeling could
/// not reach are resolved through a small dense system. Rank-deficient H
/// is fine: dependent rows drop out and the rate reflects the true rank.
class LdpcCode {
public:
    explicit LdpcCode(ParityCheckMatrix H);

    const ParityCheckMatrix& H() const { return H_; }
    std::size_t n() const { return H_.n; }
    std::size_t k() const { return info_cols_.size(); }
    std::size_t rank() const { return H_.n - info_cols_.size(); }
    double rate() const { return double(k()) / double(n()); }
    /// Columns carrying the information bits, ascending.
    std::span<const std::uint32_t> info_positions() const { return info_cols_; }
    /// Columns the dense part of the encoder resolves.
    std::size_t gap() const { return gap_cols_.size(); }

    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const;
    std::vector<std::uint8_t> extract_info(std::span<const std::uint8_t> codeword) const;

private:
    ParityCheckMatrix H_;
    std::vector<std::uint32_t> info_cols_;
    std::vector<std::uint32_t> gap_cols_;
    /// (row, column) in solve order; the row determines the column.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> peel_order_;
    /// For each gap column, the info-bit mask whose parity gives its value.
    std::vector<std::vector<std::uint64_t>> gap_from_info_;
};

/// Progressive-edge-growth construction of a (col_deg, row_deg)-regular
/// code. Every new edge goes to the check farthest from the bit in the
/// current graph, so 4-cycles only appear when no other placement exists
/// (which the counting bound forces for very short codes).
/// Throws std::invalid_argument for infeasible parameters.
LdpcCode construct_regular(std::size_t n, int col_deg, int row_deg, std::uint64_t seed);

/// Reads and validates an alist file, then preprocesses the encoder.
LdpcCode load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const ParityCheckMatrix& H);

struct SpaResult {
    std::vector<std::uint8_t> hard_bits;
    std::vector<double> llr_posterior;
    std::vector<double> llr_extrinsic;
    int iterations = 0;
    bool converged = false;
};

/// Flooding sum-product decoder (tanh rule). LLRs are ln P(0)/P(1).
/// Keeps its check-to-bit messages between calls so that a later call can
/// continue from them (warm start) with fresh channel LLRs.
class SpaDecoder {
public:
    explicit SpaDecoder(const ParityCheckMatrix& H);

    void reset();
    /// Stop as soon as the hard decisions satisfy every check (default on).
    void set_stop_on_codeword(bool on) { stop_on_codeword_ = on; }
    SpaResult decode(std::span<const double> llr_in, int max_iter, bool warm_start = false);

private:
    const ParityCheckMatrix* H_;
    std::vector<std::uint32_t> row_ptr_;
    std::vector<std::uint32_t> edge_var_;
    std::vector<std::uint32_t> var_ptr_;
    std::vector<std::uint32_t> var_edges_;
    std::vector<double> v2c_;
    std::vector<double> c2v_;
    std::vector<double> scratch_;
    std::vector<double> tanh_;
    bool stop_on_codeword_ = true;
};

SpaResult decode_spa(const LdpcCode& code, std::span<const double> llr_in, int max_iter);

}  // namespace pnsim::ldpc
