#include "pnsim/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pnsim/config.hpp"

namespace pnsim {

namespace {

struct SimulateArgs {
    std::string config, preset, ebn0, out, variant;
    std::optional<std::uint64_t> seed, min_errors, max_frames;
    unsigned workers = 0;
};

RunConfig resolve(const SimulateArgs& a) {
    if (a.config.empty() == a.preset.empty()) throw ConfigError("give exactly one of --config and --preset");
    std::optional<DetectorVariant> v;
    if (!a.variant.empty()) {
        try {
            v = variant_from_string(a.variant);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    RunConfig cfg;
    if (!a.preset.empty()) {
        cfg = make_preset(preset_from_string(a.preset), v);
    } else {
        cfg = load_run_config(a.config);
        if (v) {
            cfg.receiver.detector = DetectorConfig::defaults_for(*v);
            cfg.receiver.schedule.n_detector = cfg.receiver.detector.n_inner;
        }
    }
    if (!a.ebn0.empty()) cfg.ebn0_db = parse_ebn0_list(a.ebn0);
    if (a.seed) cfg.seed = *a.seed;
    if (a.min_errors) cfg.stop.min_frame_errors = *a.min_errors;
    if (a.max_frames) cfg.stop.max_frames = *a.max_frames;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

std::string default_out_dir() {
    const char* env = std::getenv("PNSIM_OUT_DIR");
    return env && *env ? env : "results";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Phase-noise detection and LDPC decoding simulator", "pnsim"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a BER sweep");
    simulate->add_option("--config", sim.config, "JSON run configuration");
    simulate->add_option("--preset", sim.preset, "Scenario preset")
        ->check(CLI::IsMember(preset_names()));
    simulate->add_option("--ebn0", sim.ebn0, "Eb/N0 grid in dB: start:step:stop or a comma list");
    simulate->add_option("--seed", sim.seed, "Base seed");
    simulate->add_option("--out", sim.out, "Output directory (default $PNSIM_OUT_DIR or ./results)");
    simulate->add_option("--workers", sim.workers, "Worker threads, 0 = all cores");
    simulate->add_option("--variant", sim.variant, "Detector variant (TP, EpNative, EpDamped, EpModified, DpBcjr)");
    simulate->add_option("--min-errors", sim.min_errors, "Stop after this many frame errors");
    simulate->add_option("--max-frames", sim.max_frames, "Stop after this many frames");

    std::size_t gen_n = 4000;
    int gen_dv = 3, gen_dc = 6;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gencode = app.add_subcommand("gencode", "Write a PEG-constructed regular code as alist");
    gencode->add_option("--n", gen_n, "Code length")->capture_default_str();
    gencode->add_option("--col-deg", gen_dv, "Column degree")->capture_default_str();
    gencode->add_option("--row-deg", gen_dc, "Row degree")->capture_default_str();
    gencode->add_option("--seed", gen_seed, "Construction seed")->capture_default_str();
    gencode->add_option("--out", gen_out, "Output alist path")->required();

    std::string val_path;
    auto* validate = app.add_subcommand("validate-code", "Parse and check an alist file");
    validate->add_option("path", val_path, "alist file")->required();

    std::string ops_variant = "TP";
    int ops_m = 4, ops_theta = 64;
    auto* ops = app.add_subcommand("ops", "Predicted and measured detector operation counts");
    ops->add_option("--variant", ops_variant, "Detector variant")->capture_default_str();
    ops->add_option("--M", ops_m, "Constellation size (4 = QPSK, 16 = 16QAM, else M-PSK)")->capture_default_str();
    ops->add_option("--n-theta", ops_theta, "Phase grid size for dpBCJR")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*simulate) {
            const auto cfg = resolve(sim);
            const auto dir = sim.out.empty() ? default_out_dir() : sim.out;
            const auto res = run_sweep(cfg, sim.workers, dir, &out);
            out << "wrote " << res.csv.string() << " and " << res.json.string() << '\n';
        } else if (*gencode) {
            const auto code = ldpc::construct_regular(gen_n, gen_dv, gen_dc, gen_seed);
            ldpc::save_matrix(gen_out, code.H());
            out << "n=" << code.n() << " m=" << code.H().m << " k=" << code.k() << " rate=" << code.rate()
                << " four_cycles=" << (code.H().has_four_cycles() ? "yes" : "no") << " -> " << gen_out << '\n';
        } else if (*validate) {
            const auto code = ldpc::load_matrix(val_path);
            out << val_path << ": n=" << code.n() << " m=" << code.H().m << " rank=" << code.rank()
                << " k=" << code.k() << " rate=" << code.rate()
                << " four_cycles=" << (code.H().has_four_cycles() ? "yes" : "no") << '\n';
        } else if (*ops) {
            DetectorVariant v;
            try {
                v = variant_from_string(ops_variant);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            if (ops_m < 2 || ops_m > 256 || (ops_m & (ops_m - 1))) throw ConfigError("--M must be a power of two in [2, 256]");
            if (ops_theta < 2) throw ConfigError("--n-theta must be >= 2");
            const auto r = count_ops(v, ops_m, ops_theta);
            auto ratio = [](double m, std::uint64_t p) { return p ? m / double(p) : 0.0; };
            out << to_string(v) << " M=" << ops_m;
            if (v == DetectorVariant::DpBcjr) out << " N_theta=" << ops_theta;
            out << '\n' << std::setprecision(6)
                << "  predicted adds=" << r.predicted.adds << " mults=" << r.predicted.mults << " lut=" << r.predicted.lut
                << '\n'
                << "  measured  adds=" << r.adds << " mults=" << r.mults << " lut=" << r.lut << '\n'
                << "  ratio     adds=" << ratio(r.adds, r.predicted.adds) << " mults=" << ratio(r.mults, r.predicted.mults)
                << " lut=" << ratio(r.lut, r.predicted.lut) << '\n';
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ldpc::AlistError& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_ok;
}

}  // namespace pnsim
