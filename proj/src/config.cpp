#include "pnsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pnsim {

using json = nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

// Object reader that rejects keys nobody asked for.
class Obj {
public:
    Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
    }
    ~Obj() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& req(const std::string& k) {
        if (!j_.contains(k)) throw ConfigError(where_ + ": missing required key '" + k + "'");
        used_.insert(k);
        return j_.at(k);
    }

    template <class T>
    T get(const std::string& k) {
        const auto& v = req(k);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + k + ": wrong type");
        }
    }

    template <class T>
    T get(const std::string& k, T fallback) {
        if (!has(k)) return fallback;
        return get<T>(k);
    }

    std::string path(const std::string& k) const { return where_ + "." + k; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

std::uint64_t get_count(Obj& o, const std::string& k) {
    const auto& v = o.req(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(o.path(k) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t get_count(Obj& o, const std::string& k, std::uint64_t fallback) {
    return o.has(k) ? get_count(o, k) : fallback;
}

double get_num(Obj& o, const std::string& k) {
    const auto& v = o.req(k);
    if (!v.is_number()) throw ConfigError(o.path(k) + ": expected a number");
    return v.get<double>();
}

json pilots_json(const PilotPattern& p) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DistributedPilots>)
                return {{"type", "distributed"}, {"block_len", v.block_len}, {"gap", v.gap}};
            else if constexpr (std::is_same_v<T, BurstPilots>)
                return {{"type", "burst"},
                        {"preamble", v.preamble},
                        {"burst_len", v.burst_len},
                        {"burst_gap", v.burst_gap},
                        {"postamble", v.postamble}};
            else if constexpr (std::is_same_v<T, PreamblePostamblePilots>)
                return {{"type", "preamble_postamble"}, {"len_each", v.len_each}};
            else if constexpr (std::is_same_v<T, NoPilots>)
                return {{"type", "none"}};
            else
                return {{"type", "all"}};
        },
        p);
}

PilotPattern pilots_from(const json& j) {
    Obj o(j, "pilots");
    const auto type = o.get<std::string>("type");
    if (type == "distributed") return DistributedPilots{get_count(o, "block_len"), get_count(o, "gap")};
    if (type == "burst")
        return BurstPilots{get_count(o, "preamble"), get_count(o, "burst_len"), get_count(o, "burst_gap"),
                           get_count(o, "postamble")};
    if (type == "preamble_postamble") return PreamblePostamblePilots{get_count(o, "len_each")};
    if (type == "none") return NoPilots{};
    throw ConfigError("pilots.type: unknown pattern '" + type + "'");
}

json detector_json(const DetectorConfig& d) {
    json rej = json::array();
    for (const auto& c : d.rejection) rej.push_back({{"gamma_th", c.gamma_th}, {"mbar", c.mbar}});
    return {{"variant", to_string(d.variant)},
            {"damping", d.damping},
            {"br_mode", to_string(d.br_mode)},
            {"rejection", rej},
            {"decision_directed", d.decision_directed},
            {"n_theta", d.n_theta}};
}

DetectorConfig detector_from(const json& j) {
    Obj o(j, "receiver.detector");
    DetectorConfig d;
    try {
        d = DetectorConfig::defaults_for(variant_from_string(o.get<std::string>("variant")));
        if (o.has("br_mode")) d.br_mode = br_mode_from_string(o.get<std::string>("br_mode"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("receiver.detector: ") + e.what());
    }
    if (o.has("damping")) d.damping = get_num(o, "damping");
    if (o.has("decision_directed")) d.decision_directed = o.get<bool>("decision_directed");
    if (o.has("n_theta")) d.n_theta = int(get_count(o, "n_theta"));
    if (o.has("rejection")) {
        const auto& arr = o.req("rejection");
        if (!arr.is_array()) throw ConfigError("receiver.detector.rejection: expected an array");
        d.rejection.clear();
        for (const auto& e : arr) {
            Obj c(e, "receiver.detector.rejection[]");
            d.rejection.push_back({get_num(c, "gamma_th"), int(get_count(c, "mbar"))});
        }
    }
    return d;
}

json to_json(const RunConfig& c) {
    const auto& r = c.receiver;
    json code;
    if (!c.code.alist.empty()) code = {{"alist", c.code.alist}};
    else code = {{"n", c.code.n}, {"col_deg", c.code.col_deg}, {"row_deg", c.code.row_deg}, {"seed", c.code.seed}};
    json receiver = {
        {"mode", to_string(r.mode)},
        {"schedule", {{"n_detector", r.schedule.n_detector}, {"n_decoder", r.schedule.n_decoder}, {"n_turbo", r.schedule.n_turbo}}},
        {"detector", detector_json(r.detector)},
        {"n0_inflation", r.n0_inflation},
        {"n0_inflation_above_db", std::isinf(r.n0_inflation_above_db) ? json(nullptr) : json(r.n0_inflation_above_db)},
        {"decoder_warm_start", r.decoder_warm_start}};
    return {{"scenario", c.scenario},
            {"constellation", Constellation::make(c.constellation).name()},
            {"code", code},
            {"pilots", pilots_json(c.pilots)},
            {"pilot_seed", c.pilot_seed},
            {"sigma_delta_deg", c.sigma_delta_deg},
            {"receiver", receiver},
            {"ebn0_db", c.ebn0_db},
            {"stop", {{"min_frame_errors", c.stop.min_frame_errors}, {"max_frames", c.stop.max_frames}}},
            {"seed", c.seed}};
}

RunConfig from_json(const json& j) {
    RunConfig c;
    Obj o(j, "config");
    c.scenario = o.get<std::string>("scenario", "custom");
    try {
        c.constellation = Constellation::from_name(o.get<std::string>("constellation")).kind();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("constellation: ") + e.what());
    }
    {
        Obj code(o.req("code"), "code");
        if (code.has("alist")) {
            c.code.alist = code.get<std::string>("alist");
            if (c.code.alist.empty()) throw ConfigError("code.alist: empty path");
        } else {
            c.code.n = get_count(code, "n");
            c.code.col_deg = int(get_count(code, "col_deg"));
            c.code.row_deg = int(get_count(code, "row_deg"));
            c.code.seed = get_count(code, "seed");
        }
    }
    c.pilots = pilots_from(o.req("pilots"));
    c.pilot_seed = get_count(o, "pilot_seed", 1);
    c.sigma_delta_deg = get_num(o, "sigma_delta_deg");
    {
        Obj r(o.req("receiver"), "receiver");
        auto& rc = c.receiver;
        try {
            rc.mode = receiver_mode_from_string(r.get<std::string>("mode", "Detector"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("receiver.mode: ") + e.what());
        }
        {
            Obj s(r.req("schedule"), "receiver.schedule");
            rc.schedule.n_detector = int(get_count(s, "n_detector"));
            rc.schedule.n_decoder = int(get_count(s, "n_decoder"));
            rc.schedule.n_turbo = int(get_count(s, "n_turbo"));
        }
        rc.detector = detector_from(r.req("detector"));
        rc.detector.n_inner = rc.schedule.n_detector;
        if (r.has("n0_inflation")) rc.n0_inflation = get_num(r, "n0_inflation");
        if (r.has("n0_inflation_above_db")) {
            const auto& v = r.req("n0_inflation_above_db");
            if (!v.is_null()) {
                if (!v.is_number()) throw ConfigError("receiver.n0_inflation_above_db: expected a number or null");
                rc.n0_inflation_above_db = v.get<double>();
            }
        }
        rc.decoder_warm_start = r.get<bool>("decoder_warm_start", false);
    }
    {
        const auto& g = o.req("ebn0_db");
        if (!g.is_array()) throw ConfigError("ebn0_db: expected an array of numbers");
        for (const auto& v : g) {
            if (!v.is_number()) throw ConfigError("ebn0_db: expected an array of numbers");
            c.ebn0_db.push_back(v.get<double>());
        }
    }
    if (o.has("stop")) {
        Obj s(o.req("stop"), "stop");
        c.stop.min_frame_errors = get_count(s, "min_frame_errors", c.stop.min_frame_errors);
        c.stop.max_frames = get_count(s, "max_frames", c.stop.max_frames);
    }
    c.seed = get_count(o, "seed", 1);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
    return from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_run_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_json_text(const RunConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

const char* to_string(ScenarioPreset p) {
    switch (p) {
        case ScenarioPreset::Fig3Distributed: return "Fig3Distributed";
        case ScenarioPreset::Fig4DvbDistributed: return "Fig4DvbDistributed";
        case ScenarioPreset::Fig5Concentrated: return "Fig5Concentrated";
        case ScenarioPreset::KnownPhase: return "KnownPhase";
        case ScenarioPreset::AllPilots: return "AllPilots";
    }
    return "?";
}

std::vector<std::string> preset_names() {
    return {"Fig3Distributed", "Fig4DvbDistributed", "Fig5Concentrated", "KnownPhase", "AllPilots"};
}

ScenarioPreset preset_from_string(std::string_view s) {
    for (auto p : {ScenarioPreset::Fig3Distributed, ScenarioPreset::Fig4DvbDistributed, ScenarioPreset::Fig5Concentrated,
                   ScenarioPreset::KnownPhase, ScenarioPreset::AllPilots})
        if (s == to_string(p)) return p;
    throw ConfigError("unknown preset: " + std::string(s));
}

RunConfig make_preset(ScenarioPreset p, std::optional<DetectorVariant> variant) {
    RunConfig c;
    c.scenario = to_string(p);
    c.constellation = ConstellationKind::QPSK;
    c.code = {"", 4000, 3, 6, 1};
    c.pilots = DistributedPilots{1, 19};
    c.sigma_delta_deg = 6.0;
    c.ebn0_db = {2.0, 2.5, 3.0, 3.5, 4.0};
    auto& r = c.receiver;
    r.schedule = {1, 200, 1};
    const auto v = variant.value_or(DetectorVariant::EpModified);
    r.detector = DetectorConfig::defaults_for(v);

    switch (p) {
        case ScenarioPreset::Fig3Distributed:
        case ScenarioPreset::KnownPhase:
        case ScenarioPreset::AllPilots: break;
        case ScenarioPreset::Fig4DvbDistributed:
            c.pilots = BurstPilots{};
            c.sigma_delta_deg = 1.0;
            if (v == DetectorVariant::EpModified) r.detector.rejection = {{pi / 12, 1}, {pi / 6, 0}};
            break;
        case ScenarioPreset::Fig5Concentrated:
            c.pilots = PreamblePostamblePilots{45};
            c.sigma_delta_deg = 1.0;
            c.ebn0_db = {2.0, 2.5, 3.0, 3.5};
            r.schedule = {1, 1, 50};
            r.decoder_warm_start = true;
            r.detector.n_inner = 1;
            if (v == DetectorVariant::EpModified) {
                r.detector.damping = 0.5;
                r.detector.rejection = {{pi / 6, 2}, {pi / 4, 1}};
                r.detector.decision_directed = true;
                r.n0_inflation = 1.25;
                r.n0_inflation_above_db = 2.5;
            }
            break;
    }
    if (p == ScenarioPreset::KnownPhase) r.mode = ReceiverMode::KnownPhase;
    if (p == ScenarioPreset::AllPilots) r.mode = ReceiverMode::AllPilots;
    if (p != ScenarioPreset::Fig5Concentrated) r.schedule.n_detector = r.detector.n_inner;
    r.detector.n_inner = r.schedule.n_detector;
    return c;
}

std::vector<double> parse_ebn0_list(std::string_view s) {
    auto num = [&](std::string_view t) {
        while (!t.empty() && t.front() == ' ') t.remove_prefix(1);
        while (!t.empty() && t.back() == ' ') t.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
            throw ConfigError("bad Eb/N0 value '" + std::string(t) + "'");
        return v;
    };
    std::vector<double> out;
    if (s.find(':') != std::string_view::npos) {
        const auto a = s.find(':'), b = s.find(':', a + 1);
        if (b == std::string_view::npos || s.find(':', b + 1) != std::string_view::npos)
            throw ConfigError("Eb/N0 range must be start:step:stop");
        const double lo = num(s.substr(0, a)), step = num(s.substr(a + 1, b - a - 1)), hi = num(s.substr(b + 1));
        if (!(step > 0.0) || hi < lo) throw ConfigError("Eb/N0 range needs step > 0 and stop >= start");
        const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) out.push_back(std::round((lo + double(i) * step) * 1e9) / 1e9);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        out.push_back(num(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace pnsim
