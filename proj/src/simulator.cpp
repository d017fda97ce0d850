#include <dprshare/simulator.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <istream>
#include <ostream>
#include <sstream>

namespace dprshare {

namespace {

constexpr std::array<const char*, 10> kEventNames = {
    "CameraFrameCaptured", "PipelineSwitch", "ReconfigStart",     "ReconfigEnd", "StageStarted",
    "StageFirstPixelOut",  "StageFrameDone", "PipelineFrameDone", "RoundEnd",    "DeadlineMiss",
};

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw ModelError(kind, msg); }

// Cumulative pixels of a sequence of equal-rate frame intervals at time t.
double cumulative(std::span<const Duration> starts, Duration length, double pixels, Duration t) {
    double total = 0.0;
    for (Duration s : starts) {
        if (t <= s) break;
        if (t >= s + length) total += pixels;
        else total += pixels * static_cast<double>((t - s).ps()) / static_cast<double>(length.ps());
    }
    return total;
}

}  // namespace

const char* to_string(EventKind kind) { return kEventNames[static_cast<std::size_t>(kind)]; }

EventKind parse_event_kind(const std::string& text) {
    for (std::size_t i = 0; i < kEventNames.size(); ++i)
        if (text == kEventNames[i]) return static_cast<EventKind>(i);
    fail(ErrorKind::InvalidArgument, "unknown event kind '" + text + "'");
}

Timeline simulate(const SimScenario& sc) {
    const auto& cfg = sc.config;
    cfg.params.validate();
    sc.format.validate();
    if (cfg.rounds < 1) fail(ErrorKind::InvalidArgument, "simulation needs at least one round");
    if (sc.plan.cycle.size() != sc.pipelines.size())
        fail(ErrorKind::InvalidArgument, "round plan does not cover every pipeline transition");

    const std::int64_t g = cfg.params.g, s = cfg.params.s;
    const std::int64_t frames_per_window = g * s;

    Timeline tl;
    tl.mode = cfg.mode;
    tl.params = cfg.params;
    tl.round_quantum = round_quantum(sc.format, cfg.params);
    tl.rounds = cfg.rounds;
    for (const auto& rp : sc.platform.partitions) tl.partition_ids.push_back(rp.id);
    const Duration q = tl.round_quantum;

    // Per-pipeline static data.
    std::vector<PipelineTiming> timing;
    for (std::size_t i = 0; i < sc.pipelines.size(); ++i) {
        const auto& p = sc.pipelines[i];
        if (sc.plan.cycle[i].pipeline_id != p.id)
            fail(ErrorKind::InvalidArgument, "round plan order does not match pipeline '" + p.id + "'");
        timing.push_back(analyze_pipeline(p, sc.library, sc.format, sc.platform));
        tl.pipeline_ids.push_back(p.id);
        std::vector<std::string> ids;
        for (const auto& st : p.stages) ids.push_back(st.id);
        tl.stage_ids.push_back(std::move(ids));
        PipelineStats ps;
        ps.id = p.id;
        tl.per_pipeline.push_back(std::move(ps));

        const auto violations = validate_topology(sc.plan.cycle[i].routes, sc.platform, sc.format);
        for (const auto& v : violations) {
            const ErrorKind kind = (cfg.mode == ExecutionMode::Staggered &&
                                    (v.kind == ViolationKind::DmaBudget || v.kind == ViolationKind::DramStreams))
                                       ? ErrorKind::DecouplingBudget
                                       : ErrorKind::TopologyViolation;
            fail(kind, "pipeline '" + p.id + "': " + v.detail);
        }
    }

    // Camera capture times; window w spans [w*q, (w+1)*q) and holds g*s frames.
    auto frame_boundary = [&](std::int64_t k) {
        const std::int64_t w = k / frames_per_window, j = k % frames_per_window;
        return q * w + Duration::from_ps(q.ps() * j / frames_per_window);
    };

    std::vector<Event> ev;
    const std::int64_t reserved = sc.platform.reserved_dma_engines;
    tl.peak_dram_streams = reserved;
    std::map<std::tuple<std::int64_t, std::string, std::string>, Bytes> fifo_high;
    Duration prev_end = Duration::zero();
    const double frame_pixels = static_cast<double>(sc.format.pixels());

    for (std::int64_t r = 0; r < cfg.rounds; ++r) {
        // Frames of capture window r, after downsampling.
        std::vector<std::int64_t> frames;
        for (std::int64_t k = r * frames_per_window; k < (r + 1) * frames_per_window; ++k) {
            if (k % s != 0) continue;
            frames.push_back(k);
            ev.push_back({frame_boundary(k + 1), EventKind::CameraFrameCaptured, r, -1, -1, -1, k});
        }

        const Duration nominal = q * (r + 1);
        const Duration deadline = q * (r + 2);
        const Duration round_start = std::max(nominal, prev_end);
        Duration t = round_start;

        for (std::size_t pi = 0; pi < sc.pipelines.size(); ++pi) {
            const auto& p = sc.pipelines[pi];
            const auto& plan = sc.plan.cycle[pi];
            const auto& tm = timing[pi];
            const auto pid = static_cast<std::int64_t>(pi);
            const std::size_t n = p.stages.size();

            t += sc.platform.switch_overhead + plan.route_config_time;
            const Duration slice_start = t;
            ev.push_back({t, EventKind::PipelineSwitch, r, pid, -1, -1, -1});

            // Serialized PCAP reconfiguration in topological stage order.
            std::vector<Duration> ready(n, slice_start);
            Duration pcap = slice_start;
            for (const auto& rc : plan.reconfigure) {
                const auto st = static_cast<std::int64_t>(rc.stage);
                const auto rp = static_cast<std::int64_t>(rc.rp);
                ev.push_back({pcap, EventKind::ReconfigStart, r, pid, st, rp, -1});
                pcap += rc.time;
                ev.push_back({pcap, EventKind::ReconfigEnd, r, pid, st, rp, -1});
                ready[rc.stage] = pcap;
            }
            if (cfg.mode == ExecutionMode::Basic) std::fill(ready.begin(), ready.end(), pcap);

            // Fluid streaming at the bottleneck rate.
            const Duration len = tm.frame;
            std::vector<Duration> fill(n);
            for (const auto& st : tm.stages) fill[st.stage] = st.fill;
            std::vector<std::vector<Duration>> begin(n, std::vector<Duration>(frames.size()));
            std::vector<std::vector<Duration>> first_out(n, std::vector<Duration>(frames.size()));
            for (std::size_t j = 0; j < frames.size(); ++j) {
                for (std::size_t v : tm.graph.topo) {
                    Duration b = ready[v];
                    if (j > 0) b = std::max(b, begin[v][j - 1] + len);
                    for (std::size_t u : tm.graph.preds[v]) b = std::max(b, first_out[u][j]);
                    begin[v][j] = b;
                    first_out[v][j] = b + fill[v];
                }
            }
            for (std::size_t v : tm.graph.topo) {
                const auto st = static_cast<std::int64_t>(v);
                const auto rp = static_cast<std::int64_t>(plan.assignment[v]);
                ev.push_back({begin[v][0], EventKind::StageStarted, r, pid, st, rp, frames[0]});
                ev.push_back({first_out[v][0], EventKind::StageFirstPixelOut, r, pid, st, rp, frames[0]});
                for (std::size_t j = 0; j < frames.size(); ++j)
                    ev.push_back({first_out[v][j] + len, EventKind::StageFrameDone, r, pid, st, rp, frames[j]});
            }
            auto& stats = tl.per_pipeline[pi];
            const std::size_t exit = tm.graph.exit;
            Duration slice_end = slice_start;
            for (std::size_t j = 0; j < frames.size(); ++j) {
                const Duration done = first_out[exit][j] + len;
                ev.push_back({done, EventKind::PipelineFrameDone, r, pid, -1, -1, frames[j]});
                slice_end = std::max(slice_end, done);
                ++stats.frames_processed;
                if (done <= deadline) ++stats.frames_on_time;
                stats.max_latency = std::max(stats.max_latency, done - frame_boundary(frames[j]));
            }
            stats.slice_durations.push_back(slice_end - slice_start);

            // Decoupling FIFOs and DRAM stream accounting.
            std::int64_t thru = 0;
            std::map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < n; ++i) index[p.stages[i].id] = i;
            for (const auto& route : plan.routes) {
                if (route.kind != RouteKind::ThruDram) continue;
                ++thru;
                const std::size_t u = index.at(route.from_stage), d = index.at(route.to_stage);
                std::vector<Duration> produced = first_out[u];
                std::vector<Duration> consumed = begin[d];
                std::vector<Duration> probes;
                for (std::size_t j = 0; j < frames.size(); ++j)
                    for (Duration x : {produced[j], produced[j] + len, consumed[j], consumed[j] + len}) probes.push_back(x);
                double high = 0.0;
                for (Duration x : probes)
                    high = std::max(high, cumulative(produced, len, frame_pixels, x) -
                                              cumulative(consumed, len, frame_pixels, x));
                const Bytes bytes{static_cast<std::int64_t>(std::llround(high)) * sc.format.bytes_per_pixel};
                if (bytes > sc.format.frame_bytes())
                    fail(ErrorKind::BufferOverflow, "pipeline '" + p.id + "': decoupling buffer " + route.from_stage +
                                                        " -> " + route.to_stage + " exceeds one frame");
                auto& slot = fifo_high[{pid, route.from_stage, route.to_stage}];
                slot = std::max(slot, bytes);
            }
            tl.peak_dram_streams = std::max(tl.peak_dram_streams, reserved + thru);
            t = slice_end;
        }

        tl.round_totals.push_back(t - round_start);
        ev.push_back({t, EventKind::RoundEnd, r, -1, -1, -1, -1});
        if (t > deadline) {
            Event miss{t, EventKind::DeadlineMiss, r, -1, -1, -1, -1};
            ev.push_back(miss);
            tl.glitches.push_back(miss);
        }
        prev_end = t;
    }

    std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    tl.events = std::move(ev);

    const double seconds = (q * cfg.rounds).seconds();
    for (auto& ps : tl.per_pipeline) ps.achieved_fps = static_cast<double>(ps.frames_on_time) / seconds;
    tl.peak_dram_bandwidth = sc.platform.per_stream_bandwidth(sc.format) * static_cast<double>(tl.peak_dram_streams);
    for (const auto& [key, bytes] : fifo_high)
        tl.fifos.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), bytes});
    return tl;
}

Duration measured_slice(const Timeline& timeline, std::int64_t pipeline, std::int64_t round) {
    std::optional<Duration> start, end;
    for (const auto& e : timeline.events) {
        if (e.round != round || e.pipeline != pipeline) continue;
        if (e.kind == EventKind::PipelineSwitch) start = e.time;
        if (e.kind == EventKind::PipelineFrameDone) end = end ? std::max(*end, e.time) : e.time;
    }
    if (!start || !end) {
        std::ostringstream os;
        os << "no slice for pipeline #" << pipeline << " in round " << round;
        fail(ErrorKind::MissingRound, os.str());
    }
    return *end - *start;
}

Bytes buffer_high_water(const Timeline& timeline, std::int64_t pipeline, const std::string& from_stage,
                        const std::string& to_stage) {
    for (const auto& f : timeline.fifos)
        if (f.pipeline == pipeline && f.from_stage == from_stage && f.to_stage == to_stage) return f.high_water;
    fail(ErrorKind::UnknownRoute, "no thru-DRAM route " + from_stage + " -> " + to_stage);
}

void write_ndjson(std::ostream& os, const Timeline& tl, const std::function<std::string(const Event&)>& lane) {
    using nlohmann::ordered_json;
    for (const auto& e : tl.events) {
        ordered_json j;
        j["record"] = "event";
        j["t_ps"] = e.time.ps();
        j["kind"] = to_string(e.kind);
        j["round"] = e.round;
        j["pipeline"] = e.pipeline;
        j["stage"] = e.stage;
        j["rp"] = e.rp;
        j["frame"] = e.frame;
        if (lane) j["lane"] = lane(e);
        os << j.dump() << '\n';
    }
    ordered_json sum;
    sum["record"] = "summary";
    sum["mode"] = to_string(tl.mode);
    sum["g"] = tl.params.g;
    sum["s"] = tl.params.s;
    sum["round_quantum_ps"] = tl.round_quantum.ps();
    sum["rounds"] = tl.rounds;
    sum["glitches"] = tl.glitches.size();
    sum["peak_dram_streams"] = tl.peak_dram_streams;
    sum["peak_dram_bandwidth_bps"] = tl.peak_dram_bandwidth.bytes_per_second;
    ordered_json totals = ordered_json::array();
    for (Duration d : tl.round_totals) totals.push_back(d.ps());
    sum["round_totals_ps"] = totals;
    ordered_json pipes = ordered_json::array();
    for (const auto& ps : tl.per_pipeline) {
        ordered_json pj;
        pj["id"] = ps.id;
        pj["frames_processed"] = ps.frames_processed;
        pj["frames_on_time"] = ps.frames_on_time;
        pj["achieved_fps"] = ps.achieved_fps;
        pj["max_latency_ps"] = ps.max_latency.ps();
        ordered_json sl = ordered_json::array();
        for (Duration d : ps.slice_durations) sl.push_back(d.ps());
        pj["slice_ps"] = sl;
        pipes.push_back(pj);
    }
    sum["pipelines"] = pipes;
    ordered_json fifos = ordered_json::array();
    for (const auto& f : tl.fifos)
        fifos.push_back({{"pipeline", f.pipeline}, {"from", f.from_stage}, {"to", f.to_stage},
                         {"high_water_bytes", f.high_water.value}});
    sum["fifos"] = fifos;
    os << sum.dump() << '\n';
}

std::vector<Event> read_ndjson_events(std::istream& is) {
    std::vector<Event> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::InvalidArgument, "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (j.value("record", "") != "event") continue;
        Event e;
        e.time = Duration::from_ps(j.at("t_ps").get<std::int64_t>());
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.round = j.at("round").get<std::int64_t>();
        e.pipeline = j.at("pipeline").get<std::int64_t>();
        e.stage = j.at("stage").get<std::int64_t>();
        e.rp = j.at("rp").get<std::int64_t>();
        e.frame = j.at("frame").get<std::int64_t>();
        out.push_back(e);
    }
    return out;
}

}  // namespace dprshare
