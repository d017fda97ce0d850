#include <dprshare/scenario.hpp>

#include <dprshare/perf_model.hpp>

#include <json.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace dprshare {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void error(const std::string& ptr, const std::string& msg) const {
        throw ScenarioError(origin_ + ":" + (ptr.empty() ? "/" : ptr), msg);
    }

    const json& object(const json& j, const std::string& ptr) const {
        if (!j.is_object()) error(ptr, "expected an object");
        return j;
    }

    void allow_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key())) error(ptr + "/" + it.key(), "unknown field");
    }

    std::int64_t integer(const json& j, const std::string& ptr, const char* key, std::optional<std::int64_t> def = {}) const {
        if (!j.contains(key)) {
            if (def) return *def;
            error(ptr + "/" + key, "missing required field");
        }
        const json& v = j.at(key);
        if (!v.is_number_integer()) error(ptr + "/" + key, "expected an integer");
        return v.get<std::int64_t>();
    }

    double number(const json& j, const std::string& ptr, const char* key, std::optional<double> def = {}) const {
        if (!j.contains(key)) {
            if (def) return *def;
            error(ptr + "/" + key, "missing required field");
        }
        const json& v = j.at(key);
        if (!v.is_number()) error(ptr + "/" + key, "expected a number");
        return v.get<double>();
    }

    std::string string(const json& j, const std::string& ptr, const char* key, std::optional<std::string> def = {}) const {
        if (!j.contains(key)) {
            if (def) return *def;
            error(ptr + "/" + key, "missing required field");
        }
        const json& v = j.at(key);
        if (!v.is_string()) error(ptr + "/" + key, "expected a string");
        return v.get<std::string>();
    }

    const json& array(const json& j, const std::string& ptr, const char* key) const {
        if (!j.contains(key)) error(ptr + "/" + key, "missing required field");
        const json& v = j.at(key);
        if (!v.is_array()) error(ptr + "/" + key, "expected an array");
        return v;
    }

    std::vector<std::int64_t> int_list(const json& j, const std::string& ptr, const char* key) const {
        std::vector<std::int64_t> out;
        if (!j.contains(key)) return out;
        const json& v = array(j, ptr, key);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer()) error(ptr + "/" + key + "/" + std::to_string(i), "expected an integer");
            out.push_back(v[i].get<std::int64_t>());
        }
        return out;
    }

    ResourceVector resources(const json& j, const std::string& ptr) const {
        object(j, ptr);
        allow_keys(j, ptr, {"lut", "bram36", "dsp"});
        ResourceVector r{integer(j, ptr, "lut", 0), integer(j, ptr, "bram36", 0), integer(j, ptr, "dsp", 0)};
        if (!r.non_negative()) error(ptr, "resource counts must be >= 0");
        return r;
    }

    VideoFormat format(const json& j, const std::string& ptr) const {
        object(j, ptr);
        allow_keys(j, ptr, {"width", "height", "fps", "bytes_per_pixel"});
        VideoFormat f{integer(j, ptr, "width"), integer(j, ptr, "height"), number(j, ptr, "fps"),
                      integer(j, ptr, "bytes_per_pixel", 2)};
        try {
            f.validate();
        } catch (const ModelError& e) {
            error(ptr, e.what());
        }
        return f;
    }

private:
    std::string origin_;
};

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; }
        else ++col;
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

PlatformSpec read_platform(const Reader& rd, const json& j, const std::string& ptr) {
    rd.object(j, ptr);
    rd.allow_keys(j, ptr, {"fabric_clock_mhz", "pixel_clock_mhz", "pcap_mb_per_s", "dram_gb_per_s",
                           "max_dram_streams", "dma_engines", "reserved_dma_engines", "switch_overhead_us",
                           "route_link_us", "partitions"});
    PlatformSpec p;
    p.fabric_clock = Frequency::mhz(rd.number(j, ptr, "fabric_clock_mhz", 200.0));
    p.pixel_clock = Frequency::mhz(rd.number(j, ptr, "pixel_clock_mhz", 148.5));
    p.pcap_throughput = ByteRate::mb_per_s(rd.number(j, ptr, "pcap_mb_per_s", 128.0));
    p.dram_bandwidth = ByteRate::gb_per_s(rd.number(j, ptr, "dram_gb_per_s", 12.8));
    p.max_dram_streams = rd.integer(j, ptr, "max_dram_streams", 5);
    p.dma_engines = rd.integer(j, ptr, "dma_engines", 5);
    p.reserved_dma_engines = rd.integer(j, ptr, "reserved_dma_engines", 2);
    p.switch_overhead = Duration::from_us(rd.number(j, ptr, "switch_overhead_us", 1.0));
    p.route_link_time = Duration::from_us(rd.number(j, ptr, "route_link_us", 0.1));
    const json& parts = rd.array(j, ptr, "partitions");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string pp = ptr + "/partitions/" + std::to_string(i);
        const json& pj = rd.object(parts[i], pp);
        rd.allow_keys(pj, pp, {"id", "bitstream_bytes", "capacity", "loaded"});
        RPSpec rp;
        rp.id = rd.string(pj, pp, "id");
        rp.bitstream_bytes = {rd.integer(pj, pp, "bitstream_bytes")};
        if (rp.bitstream_bytes.value <= 0) rd.error(pp + "/bitstream_bytes", "must be > 0");
        if (pj.contains("capacity")) rp.capacity = rd.resources(pj.at("capacity"), pp + "/capacity");
        if (pj.contains("loaded")) rp.loaded = rd.string(pj, pp, "loaded");
        p.partitions.push_back(rp);
    }
    return p;
}

PipelineSpec read_pipeline(const Reader& rd, const json& j, const std::string& ptr) {
    rd.object(j, ptr);
    rd.allow_keys(j, ptr, {"id", "modules", "stages", "edges"});
    const std::string id = rd.string(j, ptr, "id");
    if (j.contains("modules")) {
        if (j.contains("stages") || j.contains("edges")) rd.error(ptr, "use either 'modules' or 'stages'/'edges'");
        const json& mods = rd.array(j, ptr, "modules");
        std::vector<std::string> names;
        for (std::size_t i = 0; i < mods.size(); ++i) {
            if (!mods[i].is_string()) rd.error(ptr + "/modules/" + std::to_string(i), "expected a string");
            names.push_back(mods[i].get<std::string>());
        }
        return PipelineSpec::linear(id, names);
    }
    PipelineSpec p;
    p.id = id;
    const json& stages = rd.array(j, ptr, "stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string sp = ptr + "/stages/" + std::to_string(i);
        rd.object(stages[i], sp);
        rd.allow_keys(stages[i], sp, {"id", "module"});
        p.stages.push_back({rd.string(stages[i], sp, "id"), rd.string(stages[i], sp, "module")});
    }
    const json& edges = rd.array(j, ptr, "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string ep = ptr + "/edges/" + std::to_string(i);
        const json& e = edges[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            rd.error(ep, "expected [from, to]");
        p.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    }
    return p;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        throw ScenarioError(origin + ":" + line_col(text, e.byte == 0 ? 0 : e.byte - 1), msg);
    }
    const Reader rd(origin);
    rd.object(root, "");
    rd.allow_keys(root, "", {"version", "name", "platform", "format", "modules", "pipelines", "schedule", "mode",
                             "rounds", "sweep"});
    const std::int64_t version = rd.integer(root, "", "version");
    if (version != kScenarioVersion)
        rd.error("/version", "unsupported version " + std::to_string(version) + " (expected " +
                                 std::to_string(kScenarioVersion) + ")");

    Scenario sc;
    sc.name = rd.string(root, "", "name", "unnamed");
    if (!root.contains("platform")) rd.error("/platform", "missing required field");
    sc.platform = read_platform(rd, root.at("platform"), "/platform");
    if (!root.contains("format")) rd.error("/format", "missing required field");
    sc.format = rd.format(root.at("format"), "/format");

    const json& mods = rd.array(root, "", "modules");
    for (std::size_t i = 0; i < mods.size(); ++i) {
        const std::string mp = "/modules/" + std::to_string(i);
        const json& mj = rd.object(mods[i], mp);
        rd.allow_keys(mj, mp, {"id", "buffer_lines", "cycles_per_pixel", "in_ports", "out_ports", "demand"});
        ModuleSpec m;
        m.id = rd.string(mj, mp, "id");
        m.buffer_lines = rd.integer(mj, mp, "buffer_lines", 0);
        m.cycles_per_pixel = rd.integer(mj, mp, "cycles_per_pixel", 1);
        m.in_ports = rd.integer(mj, mp, "in_ports", 1);
        m.out_ports = rd.integer(mj, mp, "out_ports", 1);
        if (mj.contains("demand")) m.demand = rd.resources(mj.at("demand"), mp + "/demand");
        try {
            m.validate();
        } catch (const ModelError& e) {
            rd.error(mp, e.what());
        }
        if (!sc.modules.emplace(m.id, m).second) rd.error(mp + "/id", "duplicate module id '" + m.id + "'");
    }

    for (std::size_t i = 0; i < sc.platform.partitions.size(); ++i) {
        const auto& rp = sc.platform.partitions[i];
        if (!rp.loaded) continue;
        const std::string pp = "/platform/partitions/" + std::to_string(i) + "/loaded";
        auto it = sc.modules.find(*rp.loaded);
        if (it == sc.modules.end()) rd.error(pp, "unknown module id '" + *rp.loaded + "'");
        if (!rp.can_host(it->second)) rd.error(pp, "module '" + *rp.loaded + "' exceeds the partition's capacity");
    }
    try {
        sc.platform.validate(sc.format);
    } catch (const ModelError& e) {
        rd.error("/platform", e.what());
    }

    const json& pipes = rd.array(root, "", "pipelines");
    std::set<std::string> pipe_ids;
    for (std::size_t i = 0; i < pipes.size(); ++i) {
        const std::string pp = "/pipelines/" + std::to_string(i);
        PipelineSpec p = read_pipeline(rd, pipes[i], pp);
        if (!pipe_ids.insert(p.id).second) rd.error(pp + "/id", "duplicate pipeline id '" + p.id + "'");
        for (std::size_t s = 0; s < p.stages.size(); ++s)
            if (!sc.modules.count(p.stages[s].module))
                rd.error(pp + (pipes[i].contains("modules") ? "/modules/" : "/stages/") + std::to_string(s) +
                             (pipes[i].contains("modules") ? "" : "/module"),
                         "unknown module id '" + p.stages[s].module + "'");
        try {
            validate_pipeline(p, sc.modules);
        } catch (const ModelError& e) {
            rd.error(pp, std::string(to_string(e.kind())) + ": " + e.what());
        }
        sc.pipelines.push_back(std::move(p));
    }

    if (root.contains("schedule")) {
        const json& sj = rd.object(root.at("schedule"), "/schedule");
        rd.allow_keys(sj, "/schedule", {"g", "s"});
        sc.schedule = {rd.integer(sj, "/schedule", "g", 1), rd.integer(sj, "/schedule", "s", 1)};
        if (sc.schedule.g < 1) rd.error("/schedule/g", "must be >= 1");
        if (sc.schedule.s < 1) rd.error("/schedule/s", "must be >= 1");
    }
    try {
        sc.mode = parse_execution_mode(rd.string(root, "", "mode", "basic"));
    } catch (const ModelError& e) {
        rd.error("/mode", e.what());
    }
    sc.rounds = rd.integer(root, "", "rounds", 4);
    if (sc.rounds < 1) rd.error("/rounds", "must be >= 1");

    if (root.contains("sweep")) {
        const json& wj = rd.object(root.at("sweep"), "/sweep");
        rd.allow_keys(wj, "/sweep", {"g", "s", "reconfigs", "pipelines", "resolutions", "stages_per_pipeline",
                                     "buffer_lines", "max_cells"});
        SweepAxes ax;
        if (wj.contains("g")) ax.g = rd.int_list(wj, "/sweep", "g");
        ax.s = rd.int_list(wj, "/sweep", "s");
        ax.reconfigs = rd.int_list(wj, "/sweep", "reconfigs");
        ax.pipelines = rd.int_list(wj, "/sweep", "pipelines");
        if (wj.contains("resolutions")) {
            const json& rs = rd.array(wj, "/sweep", "resolutions");
            for (std::size_t i = 0; i < rs.size(); ++i)
                ax.resolutions.push_back(rd.format(rs[i], "/sweep/resolutions/" + std::to_string(i)));
        }
        ax.stages_per_pipeline = rd.integer(wj, "/sweep", "stages_per_pipeline", 6);
        ax.buffer_lines = rd.integer(wj, "/sweep", "buffer_lines", 10);
        ax.max_cells = static_cast<std::size_t>(rd.integer(wj, "/sweep", "max_cells", 4096));
        for (auto v : ax.g) if (v < 1) rd.error("/sweep/g", "values must be >= 1");
        for (auto v : ax.s) if (v < 1) rd.error("/sweep/s", "values must be >= 1");
        for (auto v : ax.pipelines) if (v < 1) rd.error("/sweep/pipelines", "values must be >= 1");
        for (auto v : ax.reconfigs)
            if (v < 0 || v > ax.stages_per_pipeline)
                rd.error("/sweep/reconfigs", "values must lie in [0, stages_per_pipeline]");
        if (ax.stages_per_pipeline < 1 ||
            static_cast<std::size_t>(ax.stages_per_pipeline) > sc.platform.partitions.size())
            rd.error("/sweep/stages_per_pipeline", "must lie in [1, number of partitions]");
        if (ax.buffer_lines < 0) rd.error("/sweep/buffer_lines", "must be >= 0");
        if (ax.g.empty()) rd.error("/sweep/g", "must not be empty");
        sc.sweep = ax;
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path.string(), "cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string dump_scenario(const Scenario& sc) {
    ordered_json root;
    root["version"] = kScenarioVersion;
    root["name"] = sc.name;
    ordered_json p;
    p["fabric_clock_mhz"] = sc.platform.fabric_clock.hz / 1e6;
    p["pixel_clock_mhz"] = sc.platform.pixel_clock.hz / 1e6;
    p["pcap_mb_per_s"] = sc.platform.pcap_throughput.bytes_per_second / 1e6;
    p["dram_gb_per_s"] = sc.platform.dram_bandwidth.bytes_per_second / 1e9;
    p["max_dram_streams"] = sc.platform.max_dram_streams;
    p["dma_engines"] = sc.platform.dma_engines;
    p["reserved_dma_engines"] = sc.platform.reserved_dma_engines;
    p["switch_overhead_us"] = sc.platform.switch_overhead.us();
    p["route_link_us"] = sc.platform.route_link_time.us();
    ordered_json parts = ordered_json::array();
    for (const auto& rp : sc.platform.partitions) {
        ordered_json r;
        r["id"] = rp.id;
        r["bitstream_bytes"] = rp.bitstream_bytes.value;
        r["capacity"] = {{"lut", rp.capacity.lut}, {"bram36", rp.capacity.bram36}, {"dsp", rp.capacity.dsp}};
        if (rp.loaded) r["loaded"] = *rp.loaded;
        parts.push_back(r);
    }
    p["partitions"] = parts;
    root["platform"] = p;
    root["format"] = {{"width", sc.format.width}, {"height", sc.format.height}, {"fps", sc.format.fps},
                      {"bytes_per_pixel", sc.format.bytes_per_pixel}};
    ordered_json mods = ordered_json::array();
    for (const auto& [id, m] : sc.modules) {
        ordered_json mj;
        mj["id"] = m.id;
        mj["buffer_lines"] = m.buffer_lines;
        mj["cycles_per_pixel"] = m.cycles_per_pixel;
        mj["in_ports"] = m.in_ports;
        mj["out_ports"] = m.out_ports;
        mj["demand"] = {{"lut", m.demand.lut}, {"bram36", m.demand.bram36}, {"dsp", m.demand.dsp}};
        mods.push_back(mj);
    }
    root["modules"] = mods;
    ordered_json pipes = ordered_json::array();
    for (const auto& pl : sc.pipelines) {
        ordered_json pj;
        pj["id"] = pl.id;
        ordered_json st = ordered_json::array();
        for (const auto& s : pl.stages) st.push_back({{"id", s.id}, {"module", s.module}});
        pj["stages"] = st;
        ordered_json ed = ordered_json::array();
        for (const auto& e : pl.edges) ed.push_back({e.from, e.to});
        pj["edges"] = ed;
        pipes.push_back(pj);
    }
    root["pipelines"] = pipes;
    root["schedule"] = {{"g", sc.schedule.g}, {"s", sc.schedule.s}};
    root["mode"] = to_string(sc.mode);
    root["rounds"] = sc.rounds;
    if (sc.sweep) {
        const auto& ax = *sc.sweep;
        ordered_json w;
        w["g"] = ax.g;
        if (!ax.s.empty()) w["s"] = ax.s;
        if (!ax.reconfigs.empty()) w["reconfigs"] = ax.reconfigs;
        if (!ax.pipelines.empty()) w["pipelines"] = ax.pipelines;
        if (!ax.resolutions.empty()) {
            ordered_json rs = ordered_json::array();
            for (const auto& f : ax.resolutions)
                rs.push_back({{"width", f.width}, {"height", f.height}, {"fps", f.fps},
                              {"bytes_per_pixel", f.bytes_per_pixel}});
            w["resolutions"] = rs;
        }
        w["stages_per_pipeline"] = ax.stages_per_pipeline;
        w["buffer_lines"] = ax.buffer_lines;
        w["max_cells"] = ax.max_cells;
        root["sweep"] = w;
    }
    return root.dump(2) + "\n";
}

SimScenario prepare_simulation(const Scenario& scenario) {
    SimScenario sim;
    sim.platform = scenario.platform;
    sim.format = scenario.format;
    sim.library = scenario.modules;
    sim.pipelines = scenario.pipelines;
    sim.plan = plan_round(FabricState::from_platform(scenario.platform), scenario.pipelines, scenario.modules,
                          scenario.platform, scenario.mode);
    sim.config = {scenario.mode, scenario.schedule, scenario.rounds};
    return sim;
}

std::vector<PipelineLoad> loads_from_plan(const Scenario& scenario, const RoundPlan& plan) {
    std::vector<PipelineLoad> loads;
    for (std::size_t i = 0; i < scenario.pipelines.size(); ++i) {
        const auto& p = scenario.pipelines[i];
        const auto& tp = plan.cycle.at(i);
        const PipelineTiming timing = analyze_pipeline(p, scenario.modules, scenario.format, scenario.platform);
        std::vector<Duration> config(timing.stages.size(), Duration::zero());
        for (const auto& rc : tp.reconfigure)
            for (std::size_t k = 0; k < timing.stages.size(); ++k)
                if (timing.stages[k].stage == rc.stage) config[k] = rc.time;
        loads.push_back({estimate_slice(timing, config), scenario.platform.switch_overhead + tp.route_config_time});
    }
    return loads;
}

Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& opt) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
    Scenario sc;
    sc.name = "random-" + std::to_string(seed);
    sc.format = uniform(0, 1) ? VideoFormat::hd720p60() : VideoFormat::hd1080p60();
    sc.mode = opt.mode;
    sc.platform = PlatformSpec::zc706_small_rps(opt.partitions);
    // Generous DMA budget so that staggered plans with many decoupled links stay valid.
    sc.platform.dma_engines = 2 + static_cast<std::int64_t>(opt.partitions) * 2;
    sc.platform.max_dram_streams = sc.platform.dma_engines;
    sc.platform.dram_bandwidth = ByteRate::gb_per_s(64.0);
    for (auto& rp : sc.platform.partitions) rp.bitstream_bytes = {uniform(150, 1200) * 1000};

    const std::size_t n_pipes = static_cast<std::size_t>(uniform(1, static_cast<std::int64_t>(opt.max_pipelines)));
    const std::int64_t n_modules = uniform(2, 10);
    for (std::int64_t m = 0; m < n_modules; ++m) {
        ModuleSpec mod;
        mod.id = "m" + std::to_string(m);
        mod.buffer_lines = uniform(0, 40);
        mod.cycles_per_pixel = uniform(1, 3);
        mod.in_ports = 3;
        mod.out_ports = 3;
        sc.modules[mod.id] = mod;
    }
    const std::size_t max_stages = std::min(opt.max_stages, opt.partitions);
    for (std::size_t p = 0; p < n_pipes; ++p) {
        const auto n = static_cast<std::size_t>(uniform(1, static_cast<std::int64_t>(max_stages)));
        std::vector<std::string> mods;
        for (std::size_t i = 0; i < n; ++i) mods.push_back("m" + std::to_string(uniform(0, n_modules - 1)));
        PipelineSpec pl = PipelineSpec::linear("p" + std::to_string(p), mods);
        if (opt.allow_forks && n >= 3 && uniform(0, 2) == 0) {
            // Add a bypass edge that skips one interior stage, forming a fork/join.
            const auto a = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(n) - 3));
            pl.edges.push_back({pl.stages[a].id, pl.stages[a + 2].id});
        }
        sc.pipelines.push_back(std::move(pl));
    }
    sc.schedule = {uniform(1, 3), uniform(1, 4)};
    sc.rounds = 2;
    return sc;
}

}  // namespace dprshare
