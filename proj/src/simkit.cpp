#include "pnsim/simkit.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "pnsim/config.hpp"

namespace pnsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct FrameStat {
    bool done = false;
    std::uint64_t bit_errors = 0;
    bool frame_error = false;
    int turbo = 0;
    std::uint64_t rejections = 0;
    OpCounts ops;
    std::uint64_t symbol_iterations = 0;
};

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}

}  // namespace

void RunConfig::validate() const {
    if (ebn0_db.empty()) throw std::invalid_argument("run config: Eb/N0 grid is empty");
    for (double e : ebn0_db)
        if (!std::isfinite(e)) throw std::invalid_argument("run config: Eb/N0 values must be finite");
    if (stop.min_frame_errors == 0 || stop.max_frames == 0) throw std::invalid_argument("run config: stop rules must be positive");
    if (!(sigma_delta_deg >= 0.0)) throw std::invalid_argument("run config: sigma_delta must be >= 0");
    if (code.alist.empty() && (code.n == 0 || code.col_deg < 1 || code.row_deg < 1))
        throw std::invalid_argument("run config: code needs an alist path or n, col_deg, row_deg");
    if (std::holds_alternative<AllPilots>(pilots)) throw std::invalid_argument("run config: all-pilot frames carry no payload");
    receiver.validate();
}

std::string variant_label(const ReceiverConfig& rc) {
    if (rc.mode != ReceiverMode::Detector) return to_string(rc.mode);
    return to_string(rc.detector.variant);
}

bool BerRecord::same_counts(const BerRecord& o) const {
    return scenario == o.scenario && variant == o.variant && ebn0_db == o.ebn0_db && frames == o.frames &&
           bit_errors == o.bit_errors && frame_errors == o.frame_errors && ber == o.ber && fer == o.fer &&
           mean_turbo_iters == o.mean_turbo_iters && mean_rejections == o.mean_rejections && adds == o.adds &&
           mults == o.mults && lut == o.lut && seed == o.seed && config_hash == o.config_hash;
}

Scenario Scenario::prepare(const RunConfig& cfg) {
    Scenario sc{Constellation::make(cfg.constellation), nullptr, nullptr};
    if (!cfg.code.alist.empty()) {
        sc.code = std::make_shared<const ldpc::LdpcCode>(ldpc::load_matrix(cfg.code.alist));
    } else {
        sc.code = std::make_shared<const ldpc::LdpcCode>(
            ldpc::construct_regular(cfg.code.n, cfg.code.col_deg, cfg.code.row_deg, cfg.code.seed));
    }
    const auto bps = std::size_t(sc.cons.bits_per_symbol());
    if (sc.code->n() % bps != 0) throw std::invalid_argument("code length is not a multiple of the bits per symbol");
    sc.plan = std::make_shared<const FramePlan>(FramePlan::for_payload(cfg.pilots, sc.code->n() / bps, sc.cons, cfg.pilot_seed));
    return sc;
}

std::uint64_t frame_seed(std::uint64_t base_seed, double ebn0_db, std::uint64_t frame_index) {
    std::uint64_t s = splitmix64(base_seed);
    s = splitmix64(s ^ std::uint64_t(std::llround(ebn0_db * 1e6)));
    return splitmix64(s ^ frame_index);
}

Frame simulate_frame(const Scenario& sc, double sigma2, double sigma_delta, std::uint64_t seed,
                     std::vector<std::uint8_t>* info_out) {
    Rng rng(seed);
    std::vector<std::uint8_t> info(sc.code->k());
    for (auto& b : info) b = std::uint8_t(rng() & 1);
    auto f = build_frame(sc.plan, sc.cons, sc.code->encode(info));
    const ChannelParams ch{sigma2, sigma_delta};
    f.true_phase = generate_phase(sc.plan->total_len, ch, rng);
    f.received = apply_channel(f.symbols, f.true_phase, ch, rng);
    if (info_out) *info_out = std::move(info);
    return f;
}

BerRecord run_point(const RunConfig& cfg, const Scenario& sc, double ebn0_db, unsigned workers) {
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma2 = ebn0_to_sigma2(ebn0_db, sc.code->rate(), sc.cons.bits_per_symbol(), sc.plan->payload_fraction());
    const double sd = deg2rad(cfg.sigma_delta_deg);
    const std::uint64_t max_frames = cfg.stop.max_frames;
    const std::uint64_t K = sc.plan->total_len;
    const int inner = cfg.receiver.detector.variant == DetectorVariant::DpBcjr ? 1 : cfg.receiver.schedule.n_detector;

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = unsigned(std::min<std::uint64_t>(workers, max_frames));

    std::vector<FrameStat> stats(max_frames);
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::uint64_t prefix = 0, prefix_errors = 0, limit = max_frames;
    std::exception_ptr failure;

    auto work = [&] {
        try {
            Receiver rx(*sc.code, sc.cons, cfg.receiver);
            std::vector<std::uint8_t> info;
            while (!stop.load()) {
                const std::uint64_t i = next.fetch_add(1);
                if (i >= max_frames) break;
                const auto f = simulate_frame(sc, sigma2, sd, frame_seed(cfg.seed, ebn0_db, i), &info);
                const auto r = rx.run(f, sigma2, sd, ebn0_db);
                FrameStat s;
                s.done = true;
                for (std::size_t b = 0; b < info.size(); ++b) s.bit_errors += r.info[b] != info[b];
                s.frame_error = s.bit_errors > 0;
                s.turbo = r.turbo_iterations;
                for (const auto& it : r.iterations) {
                    s.rejections += it.rejections;
                    s.ops += it.detector_ops;
                }
                if (cfg.receiver.mode == ReceiverMode::Detector)
                    s.symbol_iterations = K * std::uint64_t(inner) * std::uint64_t(r.turbo_iterations);
                else if (cfg.receiver.mode == ReceiverMode::AllPilots)
                    s.symbol_iterations = K;

                std::lock_guard lock(mu);
                stats[i] = s;
                while (prefix < max_frames && stats[prefix].done && !stop.load()) {
                    prefix_errors += stats[prefix].frame_error;
                    ++prefix;
                    if (prefix_errors >= cfg.stop.min_frame_errors) {
                        limit = prefix;
                        stop.store(true);
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            stop.store(true);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    BerRecord rec;
    rec.scenario = cfg.scenario;
    rec.variant = variant_label(cfg.receiver);
    rec.ebn0_db = ebn0_db;
    rec.seed = cfg.seed;
    rec.frames = limit;
    OpCounts ops;
    std::uint64_t sym_it = 0, turbo = 0, rej = 0;
    for (std::uint64_t i = 0; i < limit; ++i) {
        const auto& s = stats[i];
        rec.bit_errors += s.bit_errors;
        rec.frame_errors += s.frame_error;
        turbo += std::uint64_t(s.turbo);
        rej += s.rejections;
        ops += s.ops;
        sym_it += s.symbol_iterations;
    }
    const double info_bits = double(sc.code->k());
    rec.ber = double(rec.bit_errors) / (double(rec.frames) * info_bits);
    rec.fer = double(rec.frame_errors) / double(rec.frames);
    rec.mean_turbo_iters = double(turbo) / double(rec.frames);
    rec.mean_rejections = double(rej) / double(rec.frames);
    if (sym_it > 0) {
        rec.adds = double(ops.adds) / double(sym_it);
        rec.mults = double(ops.mults) / double(sym_it);
        rec.lut = double(ops.lut) / double(sym_it);
    }
    rec.config_hash = config_hash(cfg);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {
        "scenario", "variant", "ebn0_db", "frames", "bit_errors", "frame_errors", "ber", "fer",
        "mean_turbo_iters", "mean_rejections", "adds", "mults", "lut", "seed", "config_hash", "wall_seconds"};
    return cols;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_csv_header(std::ostream& os) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\r\n";
}

void write_csv_row(std::ostream& os, const BerRecord& r) {
    os << csv_field(r.scenario) << ',' << csv_field(r.variant) << ',' << fmt(r.ebn0_db) << ',' << r.frames << ','
       << r.bit_errors << ',' << r.frame_errors << ',' << fmt(r.ber) << ',' << fmt(r.fer) << ',' << fmt(r.mean_turbo_iters)
       << ',' << fmt(r.mean_rejections) << ',' << fmt(r.adds) << ',' << fmt(r.mults) << ',' << fmt(r.lut) << ','
       << r.seed << ',' << csv_field(r.config_hash) << ',' << fmt(r.wall_seconds) << "\r\n";
}

SweepOutput run_sweep(const RunConfig& cfg, unsigned workers, const std::filesystem::path& out_dir, std::ostream* log) {
    cfg.validate();
    const auto sc = Scenario::prepare(cfg);
    SweepOutput out;
    std::ofstream csv;
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
        const std::string stem = cfg.scenario + "_" + variant_label(cfg.receiver);
        out.csv = out_dir / (stem + ".csv");
        out.json = out_dir / (stem + ".json");
        std::ofstream js(out.json);
        if (!js) throw std::runtime_error("cannot write " + out.json.string());
        js << to_json_text(cfg) << '\n';
        if (!js) throw std::runtime_error("write failed: " + out.json.string());
        csv.open(out.csv, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + out.csv.string());
        write_csv_header(csv);
    }
    for (double e : cfg.ebn0_db) {
        auto rec = run_point(cfg, sc, e, workers);
        if (log) {
            *log << rec.scenario << ' ' << rec.variant << " Eb/N0=" << rec.ebn0_db << " dB frames=" << rec.frames
                 << " bit_errors=" << rec.bit_errors << " BER=" << std::setprecision(4) << rec.ber
                 << " FER=" << rec.fer << " (" << std::setprecision(3) << rec.wall_seconds << " s)\n"
                 << std::setprecision(6);
            log->flush();
        }
        if (csv.is_open()) {
            write_csv_row(csv, rec);
            csv.flush();
            if (!csv) throw std::runtime_error("write failed: " + out.csv.string());
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

OpReport count_ops(DetectorVariant v, int M, int n_theta, std::size_t calibration_len) {
    const auto cons = M == 4    ? Constellation::make(ConstellationKind::QPSK)
                      : M == 16 ? Constellation::make(ConstellationKind::QAM16)
                                : Constellation::psk(std::size_t(M));
    const auto plan = FramePlan::make(NoPilots{}, calibration_len, cons, 1);
    Rng rng(1);
    std::normal_distribution<double> nd;
    std::vector<cplx> r(calibration_len);
    for (auto& x : r) x = cons.point(rng() % cons.size()) * std::polar(1.0, 0.3) + 0.5 * cplx(nd(rng), nd(rng));
    auto cfg = DetectorConfig::defaults_for(v);
    cfg.n_inner = 1;
    cfg.n_theta = n_theta;
    cfg.rejection.clear();
    const auto out = run_detector(cfg, {r, &cons, &plan, 0.25, 0.05, {}, {}, {}});
    OpReport rep;
    rep.predicted = predicted_ops(v, M, n_theta);
    rep.adds = double(out.ops.adds) / double(calibration_len);
    rep.mults = double(out.ops.mults) / double(calibration_len);
    rep.lut = double(out.ops.lut) / double(calibration_len);
    return rep;
}

}  // namespace pnsim
