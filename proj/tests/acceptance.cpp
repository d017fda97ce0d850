// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <dprshare/assignment.hpp>
#include <dprshare/cli.hpp>
#include <dprshare/perf_model.hpp>
#include <dprshare/render.hpp>
#include <dprshare/scenario.hpp>
#include <dprshare/simulator.hpp>
#include <dprshare/sweep.hpp>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace dprshare;

namespace {

const std::vector<std::string> kFixtures = {"staggered_overlap", "module_reuse", "sweep_720p_x2", "sweep_720p_x3", "sweep_1080p_x2", "sweep_1080p_x3"};

std::string fixture_path(const std::string& name) { return std::string(DPRSHARE_SCENARIO_DIR) + "/" + name + ".json"; }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string run(const std::vector<std::string>& args, int* code = nullptr) {
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    if (code) *code = rc;
    return out.str();
}

// Two-to-three pipeline setups written out as scenario files so that the
// real `check` and `simulate` commands are exercised.
class Criterion1 {
public:
    Criterion1() : dir_(std::filesystem::temp_directory_path() / "dprshare_acceptance") {
        std::filesystem::create_directories(dir_);
        base_ = load_scenario(fixture_path("sweep_720p_x2"));
    }
    ~Criterion1() { std::filesystem::remove_all(dir_); }

    struct Verdict {
        bool check_feasible;
        double check_fps;
        bool sim_clean;
        double sim_fps;
    };

    Verdict verdict(const VideoFormat& f, int n, int k, std::int64_t g, std::int64_t s) {
        Scenario sc = cell_scenario(base_, {n, k, f, g, s});
        sc.rounds = 4;
        const auto path = dir_ / ("cell_" + std::to_string(counter_++) + ".json");
        std::ofstream(path) << dump_scenario(sc);
        int code = 0;
        const auto check = run({"check", "--scenario", path.string(), "--format", "ndjson"}, &code);
        if (code != kExitOk) throw std::runtime_error("check failed for " + path.string());
        nlohmann::json round;
        std::istringstream cs(check);
        for (std::string line; std::getline(cs, line);) {
            auto j = nlohmann::json::parse(line);
            if (j["record"] == "round") round = j;
        }
        const auto sim = run({"simulate", "--scenario", path.string(), "--format", "ndjson"}, &code);
        if (code != kExitOk) throw std::runtime_error("simulate disagreed or failed for " + path.string());
        nlohmann::json summary;
        std::istringstream ss(sim);
        for (std::string line; std::getline(ss, line);) {
            auto j = nlohmann::json::parse(line);
            if (j["record"] == "summary") summary = j;
        }
        double fps = 1e9;
        for (const auto& p : summary["pipelines"]) fps = std::min(fps, p["achieved_fps"].get<double>());
        return {round["feasible"].get<bool>(), round["fps"].get<double>(), summary["glitches"].get<int>() == 0, fps};
    }

    // Analytic and simulated verdicts both equal `feasible`, at `fps` when feasible.
    bool holds(const VideoFormat& f, int n, int k, std::int64_t g, std::int64_t s, bool feasible) {
        const auto v = verdict(f, n, k, g, s);
        if (v.check_feasible != feasible || v.sim_clean != feasible) return false;
        if (!feasible) return true;
        const double want = f.fps / static_cast<double>(s);
        return std::abs(v.check_fps - want) < 1e-9 && std::abs(v.sim_fps - want) < 1e-6;
    }

private:
    std::filesystem::path dir_;
    Scenario base_;
    int counter_ = 0;
};

Outcome criterion1() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    Criterion1 c;
    const auto hd720 = VideoFormat::hd720p60(), hd1080 = VideoFormat::hd1080p60();
    // (a)
    o.require(c.holds(hd720, 2, 1, 1, 1, true), "(a) two 720p pipelines, 1 reconfiguration, g=1 s=1");
    // (b)
    for (int k = 2; k <= 6; ++k)
        o.require(c.holds(hd720, 2, k, 1, 1, false), "(b) 720p k=" + std::to_string(k) + " should fail at s=1");
    o.require(c.holds(hd720, 2, 2, 1, 2, true), "(b) 720p k=2 should run at s=2");
    // (c)
    for (int k = 1; k <= 3; ++k)
        o.require(c.holds(hd720, 2, k, 2, 1, true), "(c) 720p g=2 k=" + std::to_string(k) + " should run at 60 fps");
    o.require(c.holds(hd720, 2, 4, 2, 1, false), "(c) 720p g=2 k=4 should not reach 60 fps");
    // (d)
    for (std::int64_t g = 1; g <= 3; ++g) {
        o.require(c.holds(hd1080, 2, 1, g, 1, false), "(d) 1080p x2 g=" + std::to_string(g) + " s=1");
        o.require(c.holds(hd1080, 2, 1, g, 2, true), "(d) 1080p x2 g=" + std::to_string(g) + " s=2");
    }
    // (e)
    for (std::int64_t g = 1; g <= 3; ++g) {
        for (std::int64_t s = 1; s <= 2; ++s)
            o.require(c.holds(hd1080, 3, 1, g, s, false), "(e) 1080p x3 should fail below s=3");
        o.require(c.holds(hd1080, 3, 1, g, 3, true), "(e) 1080p x3 should run at s=3");
    }
    // (f)
    for (int k = 1; k <= 6; ++k)
        o.require(c.holds(hd720, 3, k, 1, 1, false), "(f) 720p x3 k=" + std::to_string(k) + " should fail at s=1");
    o.require(c.holds(hd720, 3, 1, 1, 2, true), "(f) 720p x3 k=1 should run at s=2");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < 10.0, "runtime exceeded 10 s");
    if (o.pass) o.detail = "outcomes (a)-(f) hold in check and simulate, " + std::to_string(secs).substr(0, 5) + " s";
    return o;
}

Outcome criterion2() {
    Outcome o;
    ModuleSpec m;
    m.id = "m";
    m.buffer_lines = 10;
    VideoFormat f = VideoFormat::hd1080p60();
    const double ms = fill_time(m, f, Frequency::mhz(148.5)).ms();
    o.require(std::abs(ms - 0.129) < 0.0005, "fill time is not 0.129 ms");
    o.require(std::abs(ms - 0.13) / 0.13 <= 0.10, "fill time not within 10% of 0.13 ms");
    std::ostringstream os;
    os << "fill_time = " << ms << " ms";
    if (o.pass) o.detail = os.str();
    return o;
}

Outcome criterion3() {
    Outcome o;
    const Duration clock = Duration::from_ps(5'000);
    int bracketed = 0, basic = 0;
    for (std::uint64_t seed = 0; bracketed < 250 && seed < 2000; ++seed) {
        const Scenario sc = random_scenario(seed);
        const auto sim = prepare_simulation(sc);
        Timeline tl;
        try {
            tl = simulate(sim);
        } catch (const ModelError& e) {
            if (e.kind() != ErrorKind::BufferOverflow) o.require(false, e.what());
            continue;
        }
        const auto loads = loads_from_plan(sc, sim.plan);
        for (std::int64_t r = 0; r < tl.rounds; ++r)
            for (std::size_t p = 0; p < loads.size(); ++p) {
                const auto m = measured_slice(tl, static_cast<std::int64_t>(p), r);
                o.require(m + clock >= staggered_lower_tight(loads[p].slice, sc.schedule.g),
                          "below tight lower bound, seed " + std::to_string(seed));
                o.require(m <= slice_amortized(loads[p].slice, sc.schedule.g) + clock,
                          "above upper bound, seed " + std::to_string(seed));
            }
        ++bracketed;
    }
    o.require(bracketed >= 200, "fewer than 200 staggered scenarios simulated");
    RandomScenarioOptions opt;
    opt.mode = ExecutionMode::Basic;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Scenario sc = random_scenario(seed, opt);
        const auto sim = prepare_simulation(sc);
        const auto tl = simulate(sim);
        const auto loads = loads_from_plan(sc, sim.plan);
        for (std::int64_t r = 0; r < tl.rounds; ++r)
            for (std::size_t p = 0; p < loads.size(); ++p)
                o.require(measured_slice(tl, static_cast<std::int64_t>(p), r) ==
                              slice_amortized(loads[p].slice, sc.schedule.g),
                          "basic slice differs from formula, seed " + std::to_string(seed));
        ++basic;
    }
    if (o.pass)
        o.detail = std::to_string(bracketed) + " staggered scenarios bracketed, " + std::to_string(basic) +
                   " basic scenarios exact";
    return o;
}

Outcome criterion4() {
    Outcome o;
    std::mt19937_64 rng(4242);
    auto uni = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
    int compared = 0;
    while (compared < 600) {
        const auto m = static_cast<std::size_t>(uni(1, 6));
        PlatformSpec platform = PlatformSpec::zc706_small_rps(m);
        for (auto& rp : platform.partitions) rp.bitstream_bytes = {uni(1, 12) * 100'000};
        ModuleLibrary lib;
        const auto modules = uni(1, 9);
        for (std::int64_t k = 0; k < modules; ++k) {
            ModuleSpec mod;
            mod.id = "m" + std::to_string(k);
            lib[mod.id] = mod;
        }
        FabricState state = FabricState::empty(m);
        for (std::size_t r = 0; r < m; ++r)
            if (uni(0, 3)) state.loaded[r] = "m" + std::to_string(uni(0, modules - 1));
        std::vector<std::string> mods;
        for (std::int64_t k = 0, n = uni(1, static_cast<std::int64_t>(m)); k < n; ++k)
            mods.push_back("m" + std::to_string(uni(0, modules - 1)));
        const auto next = PipelineSpec::linear("p", mods);
        const auto want = brute_force_min_reconfigs(state, next, lib, platform);
        const auto got = plan_transition(state, next, lib, platform).reconfigure.size();
        o.require(got == want, "planner differs from oracle on instance " + std::to_string(compared));
        ++compared;
    }
    const auto module_reuse = load_scenario(fixture_path("module_reuse"));
    FabricState s = FabricState::from_platform(module_reuse.platform);
    std::vector<std::size_t> counts;
    for (std::size_t i = 1; i < module_reuse.pipelines.size(); ++i) {
        const auto plan = plan_transition(s, module_reuse.pipelines[i], module_reuse.modules, module_reuse.platform);
        counts.push_back(plan.reconfigure.size());
        s = apply_transition(s, plan);
    }
    o.require(counts == std::vector<std::size_t>{1, 0, 0}, "reuse example counts are not 1, 0, 0");
    if (o.pass) o.detail = std::to_string(compared) + " random instances match; reuse example counts 1, 0, 0";
    return o;
}

Outcome criterion5() {
    Outcome o;
    const auto fmt = VideoFormat::hd1080p60();
    auto thru = [](std::size_t i) {
        return Route{{EndpointKind::RpOut, i, 0}, {EndpointKind::RpIn, i + 1, 0}, RouteKind::ThruDram, "", ""};
    };
    auto has = [](const std::vector<TopologyViolation>& v, ViolationKind k) {
        for (const auto& x : v)
            if (x.kind == k) return true;
        return false;
    };
    auto platform = PlatformSpec::zc706_small_rps();
    std::vector<Route> routes = {thru(0), thru(1), thru(2)};
    o.require(validate_topology(routes, platform, fmt).empty(), "three decoupling FIFOs rejected");
    routes.push_back(thru(3));
    o.require(has(validate_topology(routes, platform, fmt), ViolationKind::DmaBudget), "fourth FIFO accepted");

    auto wide = platform;
    wide.dma_engines = 10;
    routes = {thru(0), thru(1), thru(2)};
    o.require(validate_topology(routes, wide, fmt).empty(), "five 1080p60 streams rejected");
    routes.push_back(thru(3));
    o.require(has(validate_topology(routes, wide, fmt), ViolationKind::DramStreams), "sixth 1080p60 stream accepted");

    // Every planned route set, from fixtures and random scenarios, has unique sinks.
    std::size_t plans = 0;
    auto unique_sinks = [&](const RoundPlan& plan) {
        for (const auto* steps : {&plan.prologue, &plan.cycle})
            for (const auto& t : *steps) {
                std::set<Endpoint> sinks;
                for (const auto& r : t.routes) sinks.insert(r.sink);
                o.require(sinks.size() == t.routes.size(), "two routes share a sink in " + t.pipeline_id);
                o.require(!has(validate_topology(t.routes, platform, fmt), ViolationKind::SharedSink),
                          "shared sink reported");
                ++plans;
            }
    };
    for (const auto& name : kFixtures) {
        const auto sc = load_scenario(fixture_path(name));
        for (auto mode : {ExecutionMode::Basic, ExecutionMode::Staggered})
            unique_sinks(plan_round(FabricState::from_platform(sc.platform), sc.pipelines, sc.modules, sc.platform, mode));
    }
    for (std::uint64_t seed = 0; seed < 300; ++seed) unique_sinks(prepare_simulation(random_scenario(seed)).plan);
    if (o.pass) o.detail = "6th stream and 4th FIFO rejected; " + std::to_string(plans) + " planned route sets have unique sinks";
    return o;
}

Outcome criterion6() {
    Outcome o;
    std::size_t timelines = 0, clean = 0;
    auto inspect = [&](const Scenario& sc, const Timeline& tl, const std::string& where) {
        ++timelines;
        std::vector<std::pair<Duration, Duration>> intervals;
        std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, Duration> open;
        for (const auto& e : tl.events) {
            if (e.kind == EventKind::ReconfigStart) open[{e.round, e.pipeline, e.rp}] = e.time;
            if (e.kind == EventKind::ReconfigEnd) intervals.push_back({open[{e.round, e.pipeline, e.rp}], e.time});
        }
        std::sort(intervals.begin(), intervals.end());
        for (std::size_t i = 1; i < intervals.size(); ++i)
            o.require(intervals[i].first >= intervals[i - 1].second, "overlapping reconfigurations in " + where);
        if (!tl.glitches.empty()) return;
        ++clean;
        const auto window = sc.schedule.g * sc.schedule.s;
        std::map<std::int64_t, std::set<std::int64_t>> done;
        for (const auto& e : tl.events)
            if (e.kind == EventKind::PipelineFrameDone) done[e.pipeline].insert(e.frame);
        std::set<std::int64_t> want;
        for (std::int64_t k = 0; k < window * tl.rounds; ++k)
            if (k % sc.schedule.s == 0) want.insert(k);
        for (std::size_t p = 0; p < sc.pipelines.size(); ++p)
            o.require(done[static_cast<std::int64_t>(p)] == want, "frame skipped in " + where);
    };
    for (const auto& name : kFixtures) {
        const auto base = load_scenario(fixture_path(name));
        inspect(base, simulate(prepare_simulation(base)), name);
        for (const auto& cell : expand_cells(base)) {
            Scenario sc = cell_scenario(base, cell);
            const auto sim = prepare_simulation(sc);
            if (cell.s < 1) sc.schedule.s = min_downsample(loads_from_plan(sc, sim.plan), sc.format, cell.g);
            auto run_sim = sim;
            run_sim.config.params = sc.schedule;
            try {
                inspect(sc, simulate(run_sim), name + " cell");
            } catch (const ModelError& e) {
                o.require(false, name + ": " + e.what());
            }
            sc.schedule.s = 1;
            run_sim.config.params = sc.schedule;
            inspect(sc, simulate(run_sim), name + " cell s=1");
        }
    }
    if (o.pass)
        o.detail = std::to_string(timelines) + " fixture timelines serialized, " + std::to_string(clean) +
                   " glitch-free ones skip no frames";
    return o;
}

Outcome criterion7() {
    Outcome o;
    double worst = 1e300, worst_full = 1e300;
    std::size_t transitions = 0;
    auto inspect = [&](const PlatformSpec& platform, const TransitionPlan& t) {
        if (t.reconfigure.size() != 1) return;
        ++transitions;
        const double ratio = t.reconfig_time_total.seconds() / t.route_config_time.seconds();
        const double full = t.reconfig_time_total.seconds() / (t.route_config_time + platform.switch_overhead).seconds();
        worst = std::min(worst, ratio);
        worst_full = std::min(worst_full, full);
        o.require(ratio >= 1000.0, "ratio below 1000 for " + t.pipeline_id);
    };
    for (const auto& name : kFixtures) {
        const auto base = load_scenario(fixture_path(name));
        for (const auto& cell : expand_cells(base)) {
            const auto sc = cell_scenario(base, cell);
            const auto sim = prepare_simulation(sc);
            for (const auto& t : sim.plan.cycle) inspect(sc.platform, t);
        }
    }
    // Every single-partition switch on the default platform, up to six stages.
    const auto platform = PlatformSpec::zc706_small_rps();
    ModuleLibrary lib;
    for (int i = 0; i < 7; ++i) lib["m" + std::to_string(i)] = ModuleSpec{"m" + std::to_string(i)};
    for (int n = 1; n <= 6; ++n) {
        FabricState s = FabricState::empty(6);
        for (int i = 0; i < 6; ++i) s.loaded[static_cast<std::size_t>(i)] = "m" + std::to_string(i);
        std::vector<std::string> mods;
        for (int i = 0; i < n - 1; ++i) mods.push_back("m" + std::to_string(i));
        mods.push_back("m6");
        inspect(platform, plan_transition(s, PipelineSpec::linear("n" + std::to_string(n), mods), lib, platform));
    }
    o.require(transitions > 0, "no single-partition transitions found");
    std::ostringstream os;
    os << transitions << " single-partition switches, minimum ratio " << static_cast<long long>(worst)
       << " (" << static_cast<long long>(worst_full) << " including fixed switch overhead)";
    if (o.pass) o.detail = os.str();
    return o;
}

Outcome criterion8() {
    Outcome o;
    std::size_t compared = 0;
    for (const auto& name : kFixtures) {
        const auto path = fixture_path(name);
        for (const auto& fmt : {"table", "csv", "ndjson"}) {
            const auto a = run({"sweep", "--scenario", path, "--format", fmt, "--jobs", "1"});
            const auto b = run({"sweep", "--scenario", path, "--format", fmt, "--jobs", "8"});
            const auto c = run({"sweep", "--scenario", path, "--format", fmt, "--jobs", "3"});
            o.require(a == b && b == c, "sweep output differs for " + name);
            ++compared;
        }
        for (const auto& fmt : {"table", "ndjson", "csv"}) {
            const auto a = run({"render", "--scenario", path, "--format", fmt});
            const auto b = run({"render", "--scenario", path, "--format", fmt});
            o.require(a == b && !a.empty(), "timeline output differs for " + name);
            ++compared;
        }
    }
    if (o.pass) o.detail = std::to_string(compared) + " repeated sweep tables and timelines are byte-identical";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"calibration coherence", criterion1}, {"fill time", criterion2},
        {"bound bracketing", criterion3},      {"assignment oracle", criterion4},
        {"topology and DRAM limits", criterion5}, {"serialization and conservation", criterion6},
        {"switch-cost ratio", criterion7},     {"determinism", criterion8},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
                  << std::endl;
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
