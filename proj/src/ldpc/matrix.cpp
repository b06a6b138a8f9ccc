#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pnsim/ldpc.hpp"

namespace pnsim::ldpc {

ParityCheckMatrix ParityCheckMatrix::from_rows(std::size_t n, std::vector<std::vector<std::uint32_t>> rows) {
    ParityCheckMatrix H;
    H.n = n;
    H.m = rows.size();
    H.rows = std::move(rows);
    H.cols.assign(n, {});
    for (std::size_t r = 0; r < H.m; ++r) {
        std::sort(H.rows[r].begin(), H.rows[r].end());
        for (auto c : H.rows[r]) {
            if (c >= n) throw std::invalid_argument("parity-check row references column out of range");
            H.cols[c].push_back(std::uint32_t(r));
        }
    }
    H.validate();
    return H;
}

void ParityCheckMatrix::validate() const {
    if (rows.size() != m || cols.size() != n) throw std::invalid_argument("parity-check matrix: size mismatch");
    std::size_t from_rows = 0, from_cols = 0;
    for (const auto& r : rows) {
        if (std::adjacent_find(r.begin(), r.end()) != r.end())
            throw std::invalid_argument("parity-check matrix: duplicate edge");
        if (!std::is_sorted(r.begin(), r.end())) throw std::invalid_argument("parity-check matrix: unsorted row");
        from_rows += r.size();
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (cols[c].empty()) throw std::invalid_argument("parity-check matrix: column " + std::to_string(c) + " has no checks");
        for (auto r : cols[c]) {
            if (r >= m || !std::binary_search(rows[r].begin(), rows[r].end(), std::uint32_t(c)))
                throw std::invalid_argument("parity-check matrix: row/column views disagree");
        }
        from_cols += cols[c].size();
    }
    if (from_rows != from_cols) throw std::invalid_argument("parity-check matrix: edge counts disagree");
}

std::size_t ParityCheckMatrix::edge_count() const {
    std::size_t e = 0;
    for (const auto& r : rows) e += r.size();
    return e;
}

bool ParityCheckMatrix::has_four_cycles() const {
    // Two checks sharing two bits.
    std::vector<std::uint32_t> seen(m, UINT32_MAX);
    for (std::size_t r = 0; r < m; ++r) {
        for (auto c : rows[r]) {
            for (auto r2 : cols[c]) {
                if (r2 <= r) continue;
                if (seen[r2] == r) return true;
                seen[r2] = std::uint32_t(r);
            }
        }
    }
    return false;
}

std::vector<std::uint8_t> ParityCheckMatrix::syndrome(std::span<const std::uint8_t> bits) const {
    if (bits.size() != n) throw std::invalid_argument("syndrome: length mismatch");
    std::vector<std::uint8_t> s(m, 0);
    for (std::size_t r = 0; r < m; ++r) {
        std::uint8_t acc = 0;
        for (auto c : rows[r]) acc ^= bits[c] & 1u;
        s[r] = acc;
    }
    return s;
}

bool ParityCheckMatrix::is_codeword(std::span<const std::uint8_t> bits) const {
    if (bits.size() != n) return false;
    for (const auto& row : rows) {
        std::uint8_t acc = 0;
        for (auto c : row) acc ^= bits[c] & 1u;
        if (acc) return false;
    }
    return true;
}

std::size_t ParityCheckMatrix::rank() const {
    const std::size_t words = (n + 63) / 64;
    std::vector<std::vector<std::uint64_t>> dense(m, std::vector<std::uint64_t>(words, 0));
    for (std::size_t r = 0; r < m; ++r)
        for (auto c : rows[r]) dense[r][c / 64] |= std::uint64_t(1) << (c % 64);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < n && rank < m; ++c) {
        const std::size_t w = c / 64;
        const std::uint64_t bit = std::uint64_t(1) << (c % 64);
        std::size_t piv = rank;
        while (piv < m && !(dense[piv][w] & bit)) ++piv;
        if (piv == m) continue;
        std::swap(dense[piv], dense[rank]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r != rank && (dense[r][w] & bit))
                for (std::size_t i = 0; i < words; ++i) dense[r][i] ^= dense[rank][i];
        }
        ++rank;
    }
    return rank;
}

// ---------------------------------------------------------------------------
// alist

AlistError::AlistError(std::size_t line, const std::string& what)
    : std::runtime_error("alist line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-blank line as integers.
    std::vector<long long> next(const char* what) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::istringstream ss(line);
            std::vector<long long> vals;
            std::string tok;
            while (ss >> tok) {
                std::size_t used = 0;
                long long v = 0;
                try {
                    v = std::stoll(tok, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != tok.size()) throw AlistError(line_no_, std::string("non-integer token '") + tok + "' in " + what);
                vals.push_back(v);
            }
            return vals;
        }
        throw AlistError(line_no_ + 1, std::string("unexpected end of file while reading ") + what);
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace

ParityCheckMatrix read_alist(std::istream& in) {
    LineReader rd(in);
    auto dims = rd.next("dimensions");
    if (dims.size() != 2 || dims[0] <= 0 || dims[1] <= 0)
        throw AlistError(rd.line(), "expected 'n m' with positive values");
    const auto n = std::size_t(dims[0]);
    const auto m = std::size_t(dims[1]);

    auto maxes = rd.next("maximum degrees");
    if (maxes.size() != 2 || maxes[0] <= 0 || maxes[1] <= 0)
        throw AlistError(rd.line(), "expected two positive maximum degrees");
    const auto max_col = std::size_t(maxes[0]);
    const auto max_row = std::size_t(maxes[1]);

    auto col_deg = rd.next("column degrees");
    if (col_deg.size() != n) throw AlistError(rd.line(), "expected " + std::to_string(n) + " column degrees");
    const std::size_t col_deg_line = rd.line();
    auto row_deg = rd.next("row degrees");
    if (row_deg.size() != m) throw AlistError(rd.line(), "expected " + std::to_string(m) + " row degrees");
    const std::size_t row_deg_line = rd.line();

    std::size_t seen_max = 0;
    for (auto d : col_deg) {
        if (d <= 0 || std::size_t(d) > max_col) throw AlistError(col_deg_line, "column degree out of range");
        seen_max = std::max(seen_max, std::size_t(d));
    }
    if (seen_max != max_col) throw AlistError(col_deg_line, "stated maximum column degree does not match degree list");
    seen_max = 0;
    for (auto d : row_deg) {
        if (d < 0 || std::size_t(d) > max_row) throw AlistError(row_deg_line, "row degree out of range");
        seen_max = std::max(seen_max, std::size_t(d));
    }
    if (seen_max != max_row) throw AlistError(row_deg_line, "stated maximum row degree does not match degree list");

    auto read_lists = [&](std::size_t count, std::size_t limit, const std::vector<long long>& degs,
                          std::size_t max_deg, const char* what, std::vector<std::size_t>& lines) {
        std::vector<std::vector<std::uint32_t>> lists(count);
        lines.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            auto vals = rd.next(what);
            lines[i] = rd.line();
            if (vals.size() > max_deg) throw AlistError(rd.line(), std::string("too many entries in ") + what);
            for (auto v : vals) {
                if (v == 0) continue;
                if (v < 0 || std::size_t(v) > limit) throw AlistError(rd.line(), std::string("index out of range in ") + what);
                lists[i].push_back(std::uint32_t(v - 1));
            }
            if (lists[i].size() != std::size_t(degs[i]))
                throw AlistError(rd.line(), std::string("entry count does not match stated degree in ") + what);
            std::sort(lists[i].begin(), lists[i].end());
            if (std::adjacent_find(lists[i].begin(), lists[i].end()) != lists[i].end())
                throw AlistError(rd.line(), std::string("duplicate index in ") + what);
        }
        return lists;
    };

    std::vector<std::size_t> col_lines, row_lines;
    auto cols = read_lists(n, m, col_deg, max_col, "column adjacency", col_lines);
    auto rows = read_lists(m, n, row_deg, max_row, "row adjacency", row_lines);

    for (std::size_t c = 0; c < n; ++c) {
        for (auto r : cols[c]) {
            if (!std::binary_search(rows[r].begin(), rows[r].end(), std::uint32_t(c)))
                throw AlistError(col_lines[c], "column list names row " + std::to_string(r + 1) +
                                                   " whose row list lacks this column");
        }
    }
    std::size_t edges_c = 0, edges_r = 0;
    for (const auto& c : cols) edges_c += c.size();
    for (const auto& r : rows) edges_r += r.size();
    if (edges_c != edges_r) throw AlistError(rd.line(), "row and column adjacency lists disagree");

    ParityCheckMatrix H;
    H.n = n;
    H.m = m;
    H.rows = std::move(rows);
    H.cols = std::move(cols);
    try {
        H.validate();
    } catch (const std::invalid_argument& e) {
        throw AlistError(rd.line(), e.what());
    }
    return H;
}

void write_alist(std::ostream& out, const ParityCheckMatrix& H) {
    std::size_t max_col = 0, max_row = 0;
    for (const auto& c : H.cols) max_col = std::max(max_col, c.size());
    for (const auto& r : H.rows) max_row = std::max(max_row, r.size());
    out << H.n << ' ' << H.m << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t c = 0; c < H.n; ++c) out << H.cols[c].size() << (c + 1 < H.n ? ' ' : '\n');
    for (std::size_t r = 0; r < H.m; ++r) out << H.rows[r].size() << (r + 1 < H.m ? ' ' : '\n');
    auto emit = [&out](const std::vector<std::uint32_t>& list, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i) {
            if (i) out << ' ';
            out << (i < list.size() ? list[i] + 1 : 0);
        }
        out << '\n';
    };
    for (const auto& c : H.cols) emit(c, max_col);
    for (const auto& r : H.rows) emit(r, max_row);
}

LdpcCode load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open alist file: " + path.string());
    return LdpcCode(read_alist(in));
}

void save_matrix(const std::filesystem::path& path, const ParityCheckMatrix& H) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write alist file: " + path.string());
    write_alist(out, H);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace pnsim::ldpc
