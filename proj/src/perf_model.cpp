#include <dprshare/perf_model.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace dprshare {

Duration fill_time(const ModuleSpec& module, const VideoFormat& format, Frequency clock) {
    const double cycles = static_cast<double>(module.buffer_lines * format.width * module.cycles_per_pixel);
    return cycle_time(cycles, clock);
}

Frequency solo_pixel_rate(const VideoFormat& format, const PlatformSpec& platform) {
    const double dram_cap = platform.per_stream_share().bytes_per_second /
                            (2.0 * static_cast<double>(format.bytes_per_pixel));
    return {std::min(platform.fabric_clock.hz, dram_cap)};
}

Duration stage_frame_time(const ModuleSpec& module, const VideoFormat& format, const PlatformSpec& platform) {
    const double cycles = static_cast<double>(format.pixels() * module.cycles_per_pixel);
    return cycle_time(cycles, solo_pixel_rate(format, platform));
}

Duration reconfig_time(const RPSpec& rp, const PlatformSpec& platform) {
    if (rp.bitstream_bytes.value <= 0)
        throw ModelError(ErrorKind::InvalidArgument, "partition '" + rp.id + "': bitstream_bytes must be > 0");
    return transfer_time(rp.bitstream_bytes, platform.pcap_throughput);
}

PipelineTiming analyze_pipeline(const PipelineSpec& pipeline, const ModuleLibrary& library,
                                const VideoFormat& format, const PlatformSpec& platform) {
    PipelineTiming t;
    t.pipeline_id = pipeline.id;
    t.graph = validate_pipeline(pipeline, library);
    const Frequency rate = solo_pixel_rate(format, platform);

    const std::size_t n = pipeline.stages.size();
    std::vector<Duration> fill(n), path_fill(n);
    for (std::size_t v : t.graph.topo) {
        const auto& m = lookup_module(library, pipeline.stages[v].module);
        fill[v] = fill_time(m, format, rate);
        Duration upstream = Duration::zero();
        for (std::size_t u : t.graph.preds[v]) upstream = std::max(upstream, path_fill[u]);
        path_fill[v] = upstream + fill[v];
        const Duration frame = stage_frame_time(m, format, platform);
        t.stages.push_back({v, fill[v], frame});
        t.frame = std::max(t.frame, frame);
    }
    t.fill = path_fill[t.graph.exit];
    return t;
}

Duration pipeline_fill_time(const PipelineSpec& pipeline, const ModuleLibrary& library,
                            const VideoFormat& format, Frequency clock) {
    const StageGraph g = validate_pipeline(pipeline, library);
    std::vector<Duration> path_fill(pipeline.stages.size());
    for (std::size_t v : g.topo) {
        Duration upstream = Duration::zero();
        for (std::size_t u : g.preds[v]) upstream = std::max(upstream, path_fill[u]);
        path_fill[v] = upstream + fill_time(lookup_module(library, pipeline.stages[v].module), format, clock);
    }
    return path_fill[g.exit];
}

SliceEstimate estimate_slice(const PipelineTiming& timing, std::span<const Duration> stage_config) {
    if (stage_config.size() != timing.stages.size())
        throw ModelError(ErrorKind::UnassignedStage,
                         "pipeline '" + timing.pipeline_id + "': reconfiguration times do not cover every stage");
    SliceEstimate e;
    e.pipeline_id = timing.pipeline_id;
    // A stage is released once PCAP has finished its own bitstream (if any)
    // and those of all its ancestors. On a chain this is the running sum.
    Duration cumulative = Duration::zero();
    std::vector<Duration> release(timing.graph.preds.size(), Duration::zero());
    for (std::size_t i = 0; i < timing.stages.size(); ++i) {
        if (stage_config[i] < Duration::zero())
            throw ModelError(ErrorKind::InvalidArgument, "negative reconfiguration time");
        cumulative += stage_config[i];
        const std::size_t v = timing.stages[i].stage;
        Duration r = cumulative;
        if (v < release.size()) {
            r = stage_config[i] > Duration::zero() ? cumulative : Duration::zero();
            for (std::size_t u : timing.graph.preds[v]) r = std::max(r, release[u]);
            release[v] = r;
        }
        e.terms.push_back({r, timing.stages[i].fill, timing.stages[i].frame});
    }
    e.t_config = cumulative;
    e.t_fill = timing.fill;
    e.t_frame = timing.frame;
    e.basic_slice = e.t_config + e.t_fill + e.t_frame;
    e.staggered_upper = e.basic_slice;
    e.staggered_lower_simple = staggered_lower_simple(e, 1);
    e.staggered_lower_tight = staggered_lower_tight(e, 1);
    return e;
}

SliceEstimate slice_basic(const PipelineSpec& pipeline, const ModuleLibrary& library,
                          std::span<const RPSpec> reconfigured, const VideoFormat& format,
                          const PlatformSpec& platform) {
    const PipelineTiming timing = analyze_pipeline(pipeline, library, format, platform);
    if (reconfigured.size() > timing.stages.size())
        throw ModelError(ErrorKind::InvalidArgument,
                         "pipeline '" + pipeline.id + "': more partitions reconfigured than stages");
    // PCAP is a single channel, so the reconfiguration times add up. Charge
    // them to the leading stages in order.
    std::vector<Duration> config(timing.stages.size(), Duration::zero());
    for (std::size_t i = 0; i < reconfigured.size(); ++i) config[i] = reconfig_time(reconfigured[i], platform);
    return estimate_slice(timing, config);
}

SliceEstimate slice_staggered_bounds(const PipelineSpec& pipeline, const ModuleLibrary& library,
                                     std::span<const Duration> stage_config, const VideoFormat& format,
                                     const PlatformSpec& platform) {
    return estimate_slice(analyze_pipeline(pipeline, library, format, platform), stage_config);
}

Duration round_quantum(const VideoFormat& format, const ScheduleParams& params) {
    params.validate();
    format.validate();
    return Duration::from_seconds(static_cast<double>(params.g * params.s) / format.fps);
}

namespace {

void require_g(std::int64_t g) {
    if (g < 1) throw ModelError(ErrorKind::InvalidArgument, "g must be >= 1");
}

}  // namespace

Duration slice_amortized(const SliceEstimate& slice, std::int64_t g) {
    require_g(g);
    return slice.t_config + slice.t_fill + slice.t_frame * g;
}

Duration staggered_lower_simple(const SliceEstimate& slice, std::int64_t g) {
    require_g(g);
    if (slice.terms.empty()) return slice.t_config;
    const StageTerm& last = slice.terms.back();
    return slice.t_config + last.fill + last.frame * g;
}

Duration staggered_lower_tight(const SliceEstimate& slice, std::int64_t g) {
    require_g(g);
    Duration best = slice.t_config;
    for (const auto& t : slice.terms) best = std::max(best, t.cumulative_config + t.fill + t.frame * g);
    return best;
}

FeasibilityReport check_feasibility(std::span<const PipelineLoad> loads, const VideoFormat& format,
                                    const ScheduleParams& params) {
    FeasibilityReport r;
    r.params = params;
    r.round_quantum = round_quantum(format, params);
    Duration frames = Duration::zero();
    for (const auto& load : loads) {
        r.slices.push_back(load.slice);
        r.total += load.switch_cost + slice_amortized(load.slice, params.g);
        frames += load.slice.t_frame;
    }
    r.slack = r.round_quantum - r.total;
    r.feasible = r.total <= r.round_quantum;
    if (r.feasible) {
        r.effective_fps = format.fps / static_cast<double>(params.s);
    } else {
        std::ostringstream os;
        os << std::fixed << std::setprecision(3) << "round needs " << r.total.ms() << " ms but the quantum is " << r.round_quantum.ms() << " ms";
        if (frames > round_quantum(format, {1, params.s}))
            os << "; frame processing alone exceeds s x T_frame, so only a larger s helps";
        else
            os << "; increase g to amortize reconfiguration or s to downsample";
        r.diagnosis = os.str();
    }
    return r;
}

std::int64_t min_downsample(std::span<const PipelineLoad> loads, const VideoFormat& format, std::int64_t g) {
    require_g(g);
    Duration total = Duration::zero();
    for (const auto& load : loads) total += load.switch_cost + slice_amortized(load.slice, g);
    const Duration bundle = round_quantum(format, {g, 1});
    // The quantum grows linearly in s while slices do not depend on s.
    auto s = std::max<std::int64_t>(1, total.ps() / std::max<std::int64_t>(1, bundle.ps()));
    while (s > 1 && check_feasibility(loads, format, {g, s - 1}).feasible) --s;
    while (!check_feasibility(loads, format, {g, s}).feasible) ++s;
    return s;
}

}  // namespace dprshare
