#include "pnsim/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pnsim {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Payload rows of a K x M table.
std::vector<double> payload_rows(std::span<const double> table, const FramePlan& plan, std::size_t M) {
    std::vector<double> out;
    out.reserve(plan.payload_count() * M);
    for (auto k : plan.payload_positions)
        out.insert(out.end(), table.begin() + std::ptrdiff_t(k * M), table.begin() + std::ptrdiff_t((k + 1) * M));
    return out;
}

}  // namespace

void IterationSchedule::validate() const {
    if (n_detector < 1 || n_decoder < 1 || n_turbo < 1)
        throw std::invalid_argument("schedule: N_D, N_C and N_T must be >= 1");
}

const char* to_string(ReceiverMode m) {
    switch (m) {
        case ReceiverMode::Detector: return "Detector";
        case ReceiverMode::KnownPhase: return "KnownPhase";
        case ReceiverMode::AllPilots: return "AllPilots";
    }
    return "?";
}

ReceiverMode receiver_mode_from_string(std::string_view s) {
    for (auto m : {ReceiverMode::Detector, ReceiverMode::KnownPhase, ReceiverMode::AllPilots})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown receiver mode: " + std::string(s));
}

void ReceiverConfig::validate() const {
    schedule.validate();
    auto d = detector;
    d.n_inner = schedule.n_detector;
    d.validate();
    if (!(n0_inflation >= 1.0)) throw std::invalid_argument("receiver: n0_inflation must be >= 1");
    if (std::isnan(n0_inflation_above_db)) throw std::invalid_argument("receiver: n0_inflation_above_db is NaN");
}

std::vector<double> pmf_to_bit_llrs(std::span<const double> pmfs, const Constellation& cons) {
    const std::size_t M = cons.size();
    const int bps = cons.bits_per_symbol();
    if (pmfs.size() % M != 0) throw std::invalid_argument("pmf_to_bit_llrs: length is not a multiple of M");
    const std::size_t n = pmfs.size() / M;
    std::vector<double> llr(n * std::size_t(bps));
    std::vector<double> lp(M);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t m = 0; m < M; ++m) {
            const double p = pmfs[s * M + m];
            lp[m] = p > 0.0 ? std::log(p) : neg_inf;
        }
        for (int i = 0; i < bps; ++i) {
            double l0 = neg_inf, l1 = neg_inf;
            for (std::size_t m = 0; m < M; ++m) (cons.bit(m, i) ? l1 : l0) = log_sum_exp(cons.bit(m, i) ? l1 : l0, lp[m]);
            double v;
            if (l0 == neg_inf && l1 == neg_inf) v = 0.0;
            else if (l1 == neg_inf) v = llr_max;
            else if (l0 == neg_inf) v = -llr_max;
            else v = std::clamp(l0 - l1, -llr_max, llr_max);
            llr[s * std::size_t(bps) + std::size_t(i)] = v;
        }
    }
    return llr;
}

std::vector<double> bit_llrs_to_pmf(std::span<const double> llrs, const Constellation& cons) {
    const std::size_t M = cons.size(), bps = std::size_t(cons.bits_per_symbol());
    if (llrs.size() % bps != 0) throw std::invalid_argument("bit_llrs_to_pmf: length is not a multiple of the bits per symbol");
    const std::size_t n = llrs.size() / bps;
    std::vector<double> out(n * M);
    std::vector<double> l0(bps), l1(bps);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < bps; ++i) {
            const double L = llrs[s * bps + i];
            // log P(b=0) = -log(1 + e^-L), log P(b=1) = -log(1 + e^L)
            l0[i] = -log_sum_exp(0.0, -L);
            l1[i] = -log_sum_exp(0.0, L);
        }
        double total = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            double lp = 0.0;
            for (std::size_t i = 0; i < bps; ++i) lp += cons.bit(m, int(i)) ? l1[i] : l0[i];
            total += (out[s * M + m] = std::exp(lp));
        }
        for (std::size_t m = 0; m < M; ++m) out[s * M + m] /= total;
    }
    return out;
}

std::array<int, max_rejection_conditions> decision_directed_mbar(double max_pd) {
    return {int(std::round(2.0 * max_pd)), int(std::round(max_pd))};
}

double phase_rmse(std::span<const double> estimate, std::span<const double> truth) {
    if (estimate.size() != truth.size()) throw std::invalid_argument("phase_rmse: length mismatch");
    if (estimate.empty()) return 0.0;
    cplx acc{};
    for (std::size_t k = 0; k < truth.size(); ++k) acc += std::polar(1.0, estimate[k] - truth[k]);
    const double offset = std::arg(acc);
    double s = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double e = wrap_angle(estimate[k] - truth[k] - offset);
        s += e * e;
    }
    return std::sqrt(s / double(truth.size()));
}

// ---------------------------------------------------------------------------

Receiver::Receiver(const ldpc::LdpcCode& code, const Constellation& cons, ReceiverConfig cfg)
    : code_(&code), cons_(&cons), cfg_(std::move(cfg)), decoder_(code.H()) {
    cfg_.validate();
    cfg_.detector.n_inner = cfg_.schedule.n_detector;
}

ReceiverResult Receiver::run_known_phase(const Frame& frame, double sigma2) {
    const auto& plan = *frame.plan;
    const std::size_t M = cons_->size();
    std::vector<double> pmfs(plan.payload_count() * M);
    for (std::size_t p = 0; p < plan.payload_count(); ++p) {
        const std::size_t k = plan.payload_positions[p];
        const cplx y = frame.received[k] * std::polar(1.0, -frame.true_phase[k]);
        auto row = std::span(pmfs).subspan(p * M, M);
        double top = neg_inf;
        for (std::size_t m = 0; m < M; ++m) top = std::max(top, row[m] = -std::norm(y - cons_->point(m)) / (2.0 * sigma2));
        double s = 0.0;
        for (auto& v : row) s += (v = std::exp(v - top));
        for (auto& v : row) v /= s;
    }
    const auto llr = pmf_to_bit_llrs(pmfs, *cons_);
    const auto res = decoder_.decode(llr, cfg_.schedule.n_decoder * cfg_.schedule.n_turbo);
    ReceiverResult out;
    out.codeword = res.hard_bits;
    out.info = code_->extract_info(res.hard_bits);
    out.converged = res.converged;
    out.turbo_iterations = 1;
    out.iterations.push_back({0.0, 0, res.iterations, {}});
    return out;
}

ReceiverResult Receiver::run(const Frame& frame, double sigma2, double sigma_delta, double ebn0_db) {
    if (!frame.plan) throw std::invalid_argument("receiver: frame has no plan");
    const auto& plan = *frame.plan;
    const std::size_t K = plan.total_len, M = cons_->size();
    if (plan.payload_count() * std::size_t(cons_->bits_per_symbol()) != code_->n())
        throw std::invalid_argument("receiver: payload capacity differs from the code length");
    if (frame.received.size() != K) throw std::invalid_argument("receiver: frame has no received samples");

    if (cfg_.mode == ReceiverMode::KnownPhase) return run_known_phase(frame, sigma2);

    const double det_sigma2 = sigma2 * (ebn0_db > cfg_.n0_inflation_above_db ? cfg_.n0_inflation : 1.0);
    DetectorInput in;
    in.received = frame.received;
    in.constellation = cons_;
    in.sigma2 = det_sigma2;
    in.sigma_delta = sigma_delta;

    if (cfg_.mode == ReceiverMode::AllPilots) {
        FramePlan genie = plan;
        std::fill(genie.pilot_mask.begin(), genie.pilot_mask.end(), std::uint8_t(1));
        genie.pilot_index = frame.symbol_index;
        genie.payload_positions.clear();
        in.plan = &genie;
        const auto det = TikhonovDetector(DetectorConfig::defaults_for(DetectorVariant::TP)).run(in);
        const auto llr = pmf_to_bit_llrs(payload_rows(det.upward, plan, M), *cons_);
        const auto res = decoder_.decode(llr, cfg_.schedule.n_decoder * cfg_.schedule.n_turbo);
        ReceiverResult out;
        out.codeword = res.hard_bits;
        out.info = code_->extract_info(res.hard_bits);
        out.converged = res.converged;
        out.turbo_iterations = 1;
        out.iterations.push_back({phase_rmse(det.phase_estimate, frame.true_phase), 0, res.iterations, det.ops});
        return out;
    }

    in.plan = &plan;
    const bool dd = cfg_.detector.decision_directed && cfg_.detector.variant == DetectorVariant::EpModified &&
                    !cfg_.detector.rejection.empty();
    std::vector<double> prior;
    std::vector<double> max_prev(K, 0.0);
    std::vector<std::uint8_t> enabled;
    std::vector<std::array<int, max_rejection_conditions>> mbar;
    if (dd) {
        enabled.assign(K, 0);
        mbar.assign(K, {0, 0});
    }

    ReceiverResult out;
    ldpc::SpaResult res;
    for (int n = 1; n <= cfg_.schedule.n_turbo; ++n) {
        if (dd) {
            for (auto k : plan.payload_positions) {
                double mx = 1.0 / double(M);
                if (!prior.empty()) mx = *std::max_element(prior.begin() + std::ptrdiff_t(k * M), prior.begin() + std::ptrdiff_t((k + 1) * M));
                mbar[k] = decision_directed_mbar(mx);
                enabled[k] = n == 1 || mx <= max_prev[k];
                max_prev[k] = mx;
            }
            in.rejection_enabled = enabled;
            in.mbar_override = mbar;
        }
        in.prior = prior;
        const auto det = run_detector(cfg_.detector, in);
        const auto llr = pmf_to_bit_llrs(payload_rows(det.upward, plan, M), *cons_);
        res = decoder_.decode(llr, cfg_.schedule.n_decoder, cfg_.decoder_warm_start && n > 1);
        out.iterations.push_back({phase_rmse(det.phase_estimate, frame.true_phase), det.rejections, res.iterations, det.ops});
        out.turbo_iterations = n;
        if (res.converged || n == cfg_.schedule.n_turbo) break;

        const auto pd = bit_llrs_to_pmf(res.llr_extrinsic, *cons_);
        prior.assign(K * M, 1.0 / double(M));
        for (std::size_t p = 0; p < plan.payload_count(); ++p)
            std::copy_n(pd.begin() + std::ptrdiff_t(p * M), M, prior.begin() + std::ptrdiff_t(plan.payload_positions[p] * M));
    }
    out.codeword = res.hard_bits;
    out.info = code_->extract_info(res.hard_bits);
    out.converged = res.converged;
    return out;
}

}  // namespace pnsim
