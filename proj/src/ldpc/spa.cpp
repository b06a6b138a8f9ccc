#include <algorithm>
#include <cmath>

#include "pnsim/ldpc.hpp"

namespace pnsim::ldpc {

namespace {

inline double clamp_llr(double x) { return std::clamp(x, -llr_max, llr_max); }

}  // namespace

SpaDecoder::SpaDecoder(const ParityCheckMatrix& H) : H_(&H) {
    const std::size_t E = H.edge_count();
    row_ptr_.assign(H.m + 1, 0);
    edge_var_.reserve(E);
    for (std::size_t r = 0; r < H.m; ++r) {
        for (auto c : H.rows[r]) edge_var_.push_back(c);
        row_ptr_[r + 1] = std::uint32_t(edge_var_.size());
    }
    var_ptr_.assign(H.n + 1, 0);
    for (auto v : edge_var_) ++var_ptr_[v + 1];
    for (std::size_t v = 0; v < H.n; ++v) var_ptr_[v + 1] += var_ptr_[v];
    var_edges_.resize(E);
    std::vector<std::uint32_t> fill(var_ptr_.begin(), var_ptr_.end() - 1);
    for (std::size_t e = 0; e < E; ++e) var_edges_[fill[edge_var_[e]]++] = std::uint32_t(e);
    v2c_.assign(E, 0.0);
    c2v_.assign(E, 0.0);
    scratch_.resize(E);
    tanh_.resize(E);
}

void SpaDecoder::reset() { std::fill(c2v_.begin(), c2v_.end(), 0.0); }

SpaResult SpaDecoder::decode(std::span<const double> llr_in, int max_iter, bool warm_start) {
    const auto& H = *H_;
    if (llr_in.size() != H.n) throw std::invalid_argument("SpaDecoder: LLR length must equal n");
    if (max_iter < 1) throw std::invalid_argument("SpaDecoder: max_iter must be >= 1");
    if (!warm_start) reset();

    SpaResult res;
    res.hard_bits.assign(H.n, 0);
    res.llr_posterior.assign(H.n, 0.0);
    res.llr_extrinsic.assign(H.n, 0.0);

    auto variable_update = [&] {
        for (std::size_t v = 0; v < H.n; ++v) {
            double sum = 0.0;
            for (auto i = var_ptr_[v]; i < var_ptr_[v + 1]; ++i) sum += c2v_[var_edges_[i]];
            const double total = llr_in[v] + sum;
            for (auto i = var_ptr_[v]; i < var_ptr_[v + 1]; ++i) {
                const auto e = var_edges_[i];
                v2c_[e] = clamp_llr(total - c2v_[e]);
            }
            res.llr_extrinsic[v] = clamp_llr(sum);
            res.llr_posterior[v] = clamp_llr(total);
            res.hard_bits[v] = total < 0.0;
        }
    };

    variable_update();
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t r = 0; r < H.m; ++r) {
            const auto b = row_ptr_[r], e_end = row_ptr_[r + 1];
            // Leave-one-out products via prefix/suffix.
            double prefix = 1.0;
            for (auto e = b; e < e_end; ++e) {
                tanh_[e] = std::tanh(0.5 * v2c_[e]);
                scratch_[e] = prefix;
                prefix *= tanh_[e];
            }
            double suffix = 1.0;
            for (auto e = e_end; e-- > b;) {
                const double p = scratch_[e] * suffix;
                c2v_[e] = clamp_llr(2.0 * std::atanh(std::clamp(p, -1.0, 1.0)));
                suffix *= tanh_[e];
            }
        }
        variable_update();
        res.iterations = it;
        res.converged = H.is_codeword(res.hard_bits);
        if (res.converged && stop_on_codeword_) break;
    }
    return res;
}

SpaResult decode_spa(const LdpcCode& code, std::span<const double> llr_in, int max_iter) {
    SpaDecoder dec(code.H());
    return dec.decode(llr_in, max_iter);
}

}  // namespace pnsim::ldpc
