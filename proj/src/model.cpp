#include <dprshare/model.hpp>

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace dprshare {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::UnknownModule: return "unknown-module";
        case ErrorKind::UnknownStage: return "unknown-stage";
        case ErrorKind::DuplicateId: return "duplicate-id";
        case ErrorKind::MissingSource: return "missing-source";
        case ErrorKind::MissingSink: return "missing-sink";
        case ErrorKind::Cycle: return "cycle";
        case ErrorKind::DanglingStage: return "dangling-stage";
        case ErrorKind::PortOverflow: return "port-overflow";
        case ErrorKind::UnassignedStage: return "unassigned-stage";
        case ErrorKind::InsufficientPartitions: return "insufficient-partitions";
        case ErrorKind::ModuleFitsNoPartition: return "module-fits-no-partition";
        case ErrorKind::TopologyViolation: return "topology-violation";
        case ErrorKind::DecouplingBudget: return "decoupling-budget";
        case ErrorKind::BufferOverflow: return "buffer-overflow";
        case ErrorKind::InstanceTooLarge: return "instance-too-large";
        case ErrorKind::MissingRound: return "missing-round";
        case ErrorKind::UnknownRoute: return "unknown-route";
    }
    return "unknown";
}

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw ModelError(kind, msg); }

}  // namespace

void VideoFormat::validate() const {
    if (width <= 0 || height <= 0) fail(ErrorKind::InvalidArgument, "video format dimensions must be positive");
    if (!(fps > 0.0) || !std::isfinite(fps)) fail(ErrorKind::InvalidArgument, "video format fps must be positive");
    if (bytes_per_pixel <= 0) fail(ErrorKind::InvalidArgument, "bytes_per_pixel must be positive");
}

void ModuleSpec::validate() const {
    if (id.empty()) fail(ErrorKind::InvalidArgument, "module id must not be empty");
    if (buffer_lines < 0) fail(ErrorKind::InvalidArgument, "module '" + id + "': buffer_lines must be >= 0");
    if (cycles_per_pixel < 1) fail(ErrorKind::InvalidArgument, "module '" + id + "': cycles_per_pixel must be >= 1");
    if (in_ports < 1 || out_ports < 1) fail(ErrorKind::InvalidArgument, "module '" + id + "': needs at least one input and one output port");
    if (!demand.non_negative()) fail(ErrorKind::InvalidArgument, "module '" + id + "': negative resource demand");
}

ByteRate PlatformSpec::per_stream_bandwidth(const VideoFormat& format) const {
    return {2.0 * static_cast<double>(format.frame_bytes().value) * format.fps};
}

ByteRate PlatformSpec::per_stream_share() const {
    return {dram_bandwidth.bytes_per_second / static_cast<double>(max_dram_streams)};
}

std::optional<std::size_t> PlatformSpec::partition_index(const std::string& id) const {
    for (std::size_t i = 0; i < partitions.size(); ++i)
        if (partitions[i].id == id) return i;
    return std::nullopt;
}

void PlatformSpec::validate(const VideoFormat& reference) const {
    if (fabric_clock.hz <= 0.0 || pixel_clock.hz <= 0.0) fail(ErrorKind::InvalidArgument, "clocks must be positive");
    if (pcap_throughput.bytes_per_second <= 0.0) fail(ErrorKind::InvalidArgument, "pcap_throughput must be positive");
    if (dram_bandwidth.bytes_per_second <= 0.0) fail(ErrorKind::InvalidArgument, "dram_bandwidth must be positive");
    if (max_dram_streams < 2) fail(ErrorKind::InvalidArgument, "max_dram_streams must cover the camera and display buffers");
    if (reserved_dma_engines < 2 || dma_engines < reserved_dma_engines)
        fail(ErrorKind::InvalidArgument, "dma_engines must be >= 2 (camera and display double-buffers)");
    if (switch_overhead < Duration::zero() || route_link_time < Duration::zero())
        fail(ErrorKind::InvalidArgument, "switch costs must be non-negative");

    const double demand = static_cast<double>(max_dram_streams) * per_stream_bandwidth(reference).bytes_per_second;
    if (demand > dram_bandwidth.bytes_per_second)
        fail(ErrorKind::InvalidArgument, "max_dram_streams x per-stream bandwidth exceeds dram_bandwidth");

    std::set<std::string> ids;
    for (const auto& rp : partitions) {
        if (rp.id.empty()) fail(ErrorKind::InvalidArgument, "partition id must not be empty");
        if (!ids.insert(rp.id).second) fail(ErrorKind::DuplicateId, "duplicate partition id '" + rp.id + "'");
        if (rp.bitstream_bytes.value <= 0) fail(ErrorKind::InvalidArgument, "partition '" + rp.id + "': bitstream_bytes must be > 0");
        if (!rp.capacity.non_negative()) fail(ErrorKind::InvalidArgument, "partition '" + rp.id + "': negative capacity");
        const Duration reconfig = transfer_time(rp.bitstream_bytes, pcap_throughput);
        if (reconfig <= Duration::zero()) fail(ErrorKind::InvalidArgument, "partition '" + rp.id + "': zero reconfiguration time");
        if (switch_overhead * 1000 > reconfig)
            fail(ErrorKind::InvalidArgument,
                 "switch_overhead must be three orders of magnitude below the reconfiguration time of '" + rp.id + "'");
    }
}

PlatformSpec PlatformSpec::zc706_small_rps(std::size_t count) {
    PlatformSpec p;
    for (std::size_t i = 0; i < count; ++i) {
        RPSpec rp;
        rp.id = "rp" + std::to_string(i);
        p.partitions.push_back(rp);
    }
    return p;
}

PipelineSpec PipelineSpec::linear(std::string id, const std::vector<std::string>& modules) {
    PipelineSpec p;
    p.id = std::move(id);
    std::string prev = kCamera;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        std::string sid = "s" + std::to_string(i);
        p.stages.push_back({sid, modules[i]});
        p.edges.push_back({prev, sid});
        prev = sid;
    }
    if (!modules.empty()) p.edges.push_back({prev, kDisplay});
    return p;
}

const ModuleSpec& lookup_module(const ModuleLibrary& library, const std::string& id) {
    auto it = library.find(id);
    if (it == library.end()) fail(ErrorKind::UnknownModule, "unknown module id '" + id + "'");
    return it->second;
}

StageGraph validate_pipeline(const PipelineSpec& pipeline, const ModuleLibrary& library) {
    const std::string where = "pipeline '" + pipeline.id + "': ";
    if (pipeline.stages.empty()) fail(ErrorKind::InvalidArgument, where + "has no stages");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < pipeline.stages.size(); ++i) {
        const auto& st = pipeline.stages[i];
        if (st.id.empty() || st.id == kCamera || st.id == kDisplay)
            fail(ErrorKind::InvalidArgument, where + "invalid stage id '" + st.id + "'");
        if (!index.emplace(st.id, i).second) fail(ErrorKind::DuplicateId, where + "duplicate stage id '" + st.id + "'");
        if (!library.count(st.module))
            fail(ErrorKind::UnknownModule, where + "stage '" + st.id + "' references unknown module id '" + st.module + "'");
    }

    const std::size_t n = pipeline.stages.size();
    StageGraph g;
    g.preds.resize(n);
    g.succs.resize(n);
    std::optional<std::size_t> entry, exit;
    std::set<std::pair<std::string, std::string>> seen;
    auto stage_of = [&](const std::string& id) -> std::size_t {
        auto it = index.find(id);
        if (it == index.end()) fail(ErrorKind::UnknownStage, where + "edge references unknown stage '" + id + "'");
        return it->second;
    };
    for (const auto& e : pipeline.edges) {
        if (!seen.insert({e.from, e.to}).second)
            fail(ErrorKind::DuplicateId, where + "duplicate edge " + e.from + " -> " + e.to);
        if (e.from == kDisplay || e.to == kCamera)
            fail(ErrorKind::InvalidArgument, where + "edge " + e.from + " -> " + e.to + " has the wrong direction");
        if (e.from == kCamera && e.to == kDisplay)
            fail(ErrorKind::InvalidArgument, where + "camera cannot feed the display directly");
        if (e.from == kCamera) {
            if (entry) fail(ErrorKind::InvalidArgument, where + "more than one camera-source edge");
            entry = stage_of(e.to);
        } else if (e.to == kDisplay) {
            if (exit) fail(ErrorKind::InvalidArgument, where + "more than one display-sink edge");
            exit = stage_of(e.from);
        } else {
            const std::size_t a = stage_of(e.from), b = stage_of(e.to);
            if (a == b) fail(ErrorKind::Cycle, where + "self-loop on stage '" + e.from + "'");
            g.succs[a].push_back(b);
            g.preds[b].push_back(a);
        }
    }
    if (!entry) fail(ErrorKind::MissingSource, where + "no camera-source edge");
    if (!exit) fail(ErrorKind::MissingSink, where + "no display-sink edge");
    g.entry = *entry;
    g.exit = *exit;

    // Kahn's algorithm; among ready stages the lowest declaration index goes first.
    std::vector<std::size_t> indeg(n);
    for (std::size_t i = 0; i < n; ++i) indeg[i] = g.preds[i].size();
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.insert(i);
    while (!ready.empty()) {
        const std::size_t v = *ready.begin();
        ready.erase(ready.begin());
        g.topo.push_back(v);
        for (std::size_t w : g.succs[v])
            if (--indeg[w] == 0) ready.insert(w);
    }
    if (g.topo.size() != n) fail(ErrorKind::Cycle, where + "stage graph contains a cycle");

    // Reachability from the camera and to the display.
    auto reach = [n](std::size_t start, const std::vector<std::vector<std::size_t>>& adj) {
        std::vector<bool> mark(n, false);
        std::deque<std::size_t> q{start};
        mark[start] = true;
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop_front();
            for (std::size_t w : adj[v])
                if (!mark[w]) { mark[w] = true; q.push_back(w); }
        }
        return mark;
    };
    const auto from_src = reach(g.entry, g.succs);
    const auto to_sink = reach(g.exit, g.preds);
    for (std::size_t i = 0; i < n; ++i)
        if (!from_src[i] || !to_sink[i])
            fail(ErrorKind::DanglingStage,
                 where + "stage '" + pipeline.stages[i].id + "' is not on a camera-to-display path");

    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = lookup_module(library, pipeline.stages[i].module);
        const auto in_deg = static_cast<std::int64_t>(g.preds[i].size() + (i == g.entry ? 1 : 0));
        const auto out_deg = static_cast<std::int64_t>(g.succs[i].size() + (i == g.exit ? 1 : 0));
        if (in_deg > m.in_ports || out_deg > m.out_ports) {
            std::ostringstream os;
            os << where << "stage '" << pipeline.stages[i].id << "' (module '" << m.id << "') has in/out degree "
               << in_deg << "/" << out_deg << " but only " << m.in_ports << "/" << m.out_ports << " ports";
            fail(ErrorKind::PortOverflow, os.str());
        }
    }
    return g;
}

void ScheduleParams::validate() const {
    if (g < 1) fail(ErrorKind::InvalidArgument, "g must be >= 1");
    if (s < 1) fail(ErrorKind::InvalidArgument, "s must be >= 1");
}

Duration frame_period(const VideoFormat& format) {
    format.validate();
    return Duration::from_seconds(1.0 / format.fps);
}

Duration active_stream_time(const VideoFormat& format, Frequency clock) {
    if (clock.hz <= 0.0) fail(ErrorKind::InvalidArgument, "clock must be positive");
    return cycle_time(static_cast<double>(format.pixels()), clock);
}

}  // namespace dprshare
