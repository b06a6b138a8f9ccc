#include <algorithm>
#include <bit>
#include <queue>
#include <random>
#include <set>

#include "pnsim/ldpc.hpp"

namespace pnsim::ldpc {

namespace {

using BitRow = std::vector<std::uint64_t>;

inline bool get_bit(const BitRow& r, std::size_t i) { return (r[i / 64] >> (i % 64)) & 1u; }
inline void flip_bit(BitRow& r, std::size_t i) { r[i / 64] ^= std::uint64_t(1) << (i % 64); }

}  // namespace

LdpcCode::LdpcCode(ParityCheckMatrix H) : H_(std::move(H)) {
    H_.validate();
    const std::size_t n = H_.n, m = H_.m;

    // Peeling: a row with one unknown column determines it. When none is
    // left, one column of the sparsest open row is declared free.
    enum : std::uint8_t { Unknown, Solved, Declared };
    std::vector<std::uint8_t> state(n, Unknown);
    std::vector<std::uint32_t> residual(m);
    std::vector<std::uint8_t> used(m, 0);
    std::set<std::pair<std::uint32_t, std::uint32_t>> open;  // (residual, row), residual >= 2
    std::queue<std::uint32_t> ready;
    for (std::size_t r = 0; r < m; ++r) {
        residual[r] = std::uint32_t(H_.rows[r].size());
        if (residual[r] == 1) ready.push(std::uint32_t(r));
        else if (residual[r] >= 2) open.emplace(residual[r], std::uint32_t(r));
    }
    std::vector<std::uint32_t> declared;
    std::size_t unknown = n;

    auto settle = [&](std::uint32_t col) {
        for (auto r : H_.cols[col]) {
            if (used[r]) continue;
            if (residual[r] >= 2) open.erase({residual[r], r});
            --residual[r];
            if (residual[r] == 1) ready.push(r);
            else if (residual[r] >= 2) open.emplace(residual[r], r);
        }
        --unknown;
    };

    while (unknown > 0) {
        if (!ready.empty()) {
            const auto r = ready.front();
            ready.pop();
            if (used[r] || residual[r] != 1) continue;
            std::uint32_t col = 0;
            for (auto c : H_.rows[r])
                if (state[c] == Unknown) col = c;
            used[r] = 1;
            state[col] = Solved;
            peel_order_.emplace_back(r, col);
            settle(col);
            continue;
        }
        std::uint32_t col = 0;
        if (!open.empty()) {
            const auto r = open.begin()->second;
            for (auto c : H_.rows[r])
                if (state[c] == Unknown) {
                    col = c;
                    break;
                }
        } else {
            // Remaining unknowns touch no open row.
            for (std::size_t c = 0; c < n; ++c)
                if (state[c] == Unknown) {
                    col = std::uint32_t(c);
                    break;
                }
        }
        state[col] = Declared;
        declared.push_back(col);
        settle(col);
    }

    // Each unused row, with solved columns substituted away, becomes a
    // constraint on declared columns only.
    std::vector<std::int64_t> solve_pos(n, -1);
    for (std::size_t i = 0; i < peel_order_.size(); ++i) solve_pos[peel_order_[i].second] = std::int64_t(i);

    const std::size_t D = declared.size();
    const std::size_t dw = (D + 63) / 64;
    std::vector<BitRow> phi;
    std::vector<std::uint8_t> coef(n);
    for (std::size_t r = 0; r < m; ++r) {
        if (used[r]) continue;
        std::fill(coef.begin(), coef.end(), 0);
        std::int64_t latest = -1;
        for (auto c : H_.rows[r]) {
            coef[c] ^= 1;
            latest = std::max(latest, solve_pos[c]);
        }
        // Substitute in reverse solve order; a pivot row only references
        // columns solved earlier or declared.
        for (std::int64_t i = latest; i >= 0; --i) {
            const auto [pr, pc] = peel_order_[std::size_t(i)];
            if (!coef[pc]) continue;
            for (auto c : H_.rows[pr]) coef[c] ^= 1;
        }
        BitRow row(dw, 0);
        bool any = false;
        for (std::size_t i = 0; i < D; ++i)
            if (coef[declared[i]]) {
                flip_bit(row, i);
                any = true;
            }
        if (any) phi.push_back(std::move(row));
    }

    // Reduced row echelon form of the constraint system.
    std::vector<std::uint8_t> is_pivot(D, 0);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < D && rank < phi.size(); ++c) {
        std::size_t p = rank;
        while (p < phi.size() && !get_bit(phi[p], c)) ++p;
        if (p == phi.size()) continue;
        std::swap(phi[p], phi[rank]);
        for (std::size_t r = 0; r < phi.size(); ++r) {
            if (r != rank && get_bit(phi[r], c))
                for (std::size_t w = 0; w < dw; ++w) phi[r][w] ^= phi[rank][w];
        }
        is_pivot[c] = 1;
        ++rank;
    }

    std::vector<std::size_t> info_slot(D, 0);
    for (std::size_t i = 0; i < D; ++i) {
        if (is_pivot[i]) gap_cols_.push_back(declared[i]);
        else {
            info_slot[i] = info_cols_.size();
            info_cols_.push_back(declared[i]);
        }
    }
    const std::size_t iw = (info_cols_.size() + 63) / 64;
    for (std::size_t r = 0; r < rank; ++r) {
        BitRow mask(iw, 0);
        for (std::size_t i = 0; i < D; ++i)
            if (!is_pivot[i] && get_bit(phi[r], i)) flip_bit(mask, info_slot[i]);
        gap_from_info_.push_back(std::move(mask));
    }

    // Info columns ascending for a tidy interface; remap masks accordingly.
    std::vector<std::size_t> order(info_cols_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return info_cols_[a] < info_cols_[b]; });
    std::vector<std::size_t> new_slot(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) new_slot[order[i]] = i;
    std::vector<std::uint32_t> sorted_cols(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted_cols[i] = info_cols_[order[i]];
    for (auto& mask : gap_from_info_) {
        BitRow remapped(iw, 0);
        for (std::size_t i = 0; i < order.size(); ++i)
            if (get_bit(mask, i)) flip_bit(remapped, new_slot[i]);
        mask = std::move(remapped);
    }
    info_cols_ = std::move(sorted_cols);
}

std::vector<std::uint8_t> LdpcCode::encode(std::span<const std::uint8_t> info) const {
    if (info.size() != k()) throw std::invalid_argument("encode: info length must equal k");
    std::vector<std::uint8_t> x(n(), 0);
    BitRow packed((k() + 63) / 64, 0);
    for (std::size_t i = 0; i < info.size(); ++i) {
        x[info_cols_[i]] = info[i] & 1u;
        if (info[i] & 1u) flip_bit(packed, i);
    }
    for (std::size_t g = 0; g < gap_cols_.size(); ++g) {
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < packed.size(); ++w) acc ^= packed[w] & gap_from_info_[g][w];
        x[gap_cols_[g]] = std::uint8_t(std::popcount(acc) & 1);
    }
    for (const auto& [r, c] : peel_order_) {
        std::uint8_t acc = 0;
        for (auto j : H_.rows[r])
            if (j != c) acc ^= x[j];
        x[c] = acc;
    }
    return x;
}

std::vector<std::uint8_t> LdpcCode::extract_info(std::span<const std::uint8_t> codeword) const {
    if (codeword.size() != n()) throw std::invalid_argument("extract_info: codeword length must equal n");
    std::vector<std::uint8_t> info(k());
    for (std::size_t i = 0; i < k(); ++i) info[i] = codeword[info_cols_[i]];
    return info;
}

LdpcCode construct_regular(std::size_t n, int col_deg, int row_deg, std::uint64_t seed) {
    if (n == 0 || col_deg <= 0 || row_deg <= 0) throw std::invalid_argument("construct_regular: sizes must be positive");
    if ((n * std::size_t(col_deg)) % std::size_t(row_deg) != 0)
        throw std::invalid_argument("construct_regular: n * col_deg must be divisible by row_deg");
    const std::size_t m = n * std::size_t(col_deg) / std::size_t(row_deg);
    if (std::size_t(row_deg) > n || std::size_t(col_deg) > m)
        throw std::invalid_argument("construct_regular: degrees exceed matrix dimensions");

    constexpr int attempts = 64;
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::uint32_t>> best;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<std::vector<std::uint32_t>> rows(m), cols(n);
        std::vector<int> depth(m);
        std::vector<std::uint32_t> var_mark(n, UINT32_MAX);
        std::uint32_t stamp = 0;
        bool stuck = false;

        for (std::size_t v = 0; v < n && !stuck; ++v) {
            for (int e = 0; e < col_deg; ++e) {
                std::fill(depth.begin(), depth.end(), -1);
                ++stamp;
                std::vector<std::uint32_t> frontier;
                for (auto c : cols[v]) {
                    depth[c] = 0;
                    frontier.push_back(c);
                }
                var_mark[v] = stamp;
                for (int d = 0; !frontier.empty(); ++d) {
                    std::vector<std::uint32_t> next;
                    for (auto c : frontier)
                        for (auto u : rows[c]) {
                            if (var_mark[u] == stamp) continue;
                            var_mark[u] = stamp;
                            for (auto c2 : cols[u])
                                if (depth[c2] < 0) {
                                    depth[c2] = d + 1;
                                    next.push_back(c2);
                                }
                        }
                    frontier.swap(next);
                }
                // Unreached beats any depth; deeper beats shallower; then lowest degree.
                long best_key_depth = -2;
                std::size_t best_deg = SIZE_MAX;
                std::vector<std::uint32_t> cand;
                for (std::size_t c = 0; c < m; ++c) {
                    if (rows[c].size() >= std::size_t(row_deg) || depth[c] == 0) continue;
                    const long kd = depth[c] < 0 ? long(m) + 1 : depth[c];
                    const std::size_t deg = rows[c].size();
                    if (kd > best_key_depth || (kd == best_key_depth && deg < best_deg)) {
                        best_key_depth = kd;
                        best_deg = deg;
                        cand.assign(1, std::uint32_t(c));
                    } else if (kd == best_key_depth && deg == best_deg) {
                        cand.push_back(std::uint32_t(c));
                    }
                }
                if (cand.empty()) {
                    stuck = true;
                    break;
                }
                std::uniform_int_distribution<std::size_t> pick(0, cand.size() - 1);
                const auto c = cand[pick(rng)];
                rows[c].push_back(std::uint32_t(v));
                cols[v].push_back(c);
            }
        }
        if (stuck) continue;
        auto H = ParityCheckMatrix::from_rows(n, rows);
        if (!H.has_four_cycles()) return LdpcCode(std::move(H));
        if (best.empty()) best = std::move(rows);
    }
    if (best.empty()) throw std::runtime_error("construct_regular: could not complete a regular graph");
    return LdpcCode(ParityCheckMatrix::from_rows(n, std::move(best)));
}

}  // namespace pnsim::ldpc
