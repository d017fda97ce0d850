#pragma once

// Closed-form timing model for round-robin time-sharing of streaming
// pipelines on a partially reconfigurable fabric.

#include <dprshare/model.hpp>

#include <span>
#include <string>
#include <vector>

namespace dprshare {

Duration fill_time(const ModuleSpec& module, const VideoFormat& format, Frequency clock);

// Solo pixel rate against DRAM: the fabric clock, capped by one stream's
// share of DRAM bandwidth (read and write).
Frequency solo_pixel_rate(const VideoFormat& format, const PlatformSpec& platform);

// Time for a stage to stream one frame solo.
Duration stage_frame_time(const ModuleSpec& module, const VideoFormat& format, const PlatformSpec& platform);

Duration reconfig_time(const RPSpec& rp, const PlatformSpec& platform);

// Per-stage solo timing of one pipeline, in topological order.
struct StageTiming {
    std::size_t stage = 0;  // index into PipelineSpec::stages
    Duration fill;
    Duration frame;
};

struct PipelineTiming {
    std::string pipeline_id;
    StageGraph graph;
    std::vector<StageTiming> stages;  // topological order
    Duration fill;                    // max over camera-to-display paths
    Duration frame;                   // bottleneck stage frame time
};

PipelineTiming analyze_pipeline(const PipelineSpec& pipeline, const ModuleLibrary& library,
                                const VideoFormat& format, const PlatformSpec& platform);

Duration pipeline_fill_time(const PipelineSpec& pipeline, const ModuleLibrary& library,
                            const VideoFormat& format, Frequency clock);

// One lower-bound term: stage i cannot finish before PCAP is done with its
// own bitstream and those of its ancestors, and it has filled and streamed a
// frame. On a chain cumulative_config is the running sum through stage i.
struct StageTerm {
    Duration cumulative_config;
    Duration fill;
    Duration frame;
};

struct SliceEstimate {
    std::string pipeline_id;
    Duration t_config;
    Duration t_fill;
    Duration t_frame;
    Duration basic_slice;
    Duration staggered_upper;
    Duration staggered_lower_simple;
    Duration staggered_lower_tight;
    std::vector<StageTerm> terms;  // reconfiguration order
};

// stage_config[i] is the reconfiguration time charged to the i-th stage of
// timing.stages (zero when the stage reuses a resident module).
SliceEstimate estimate_slice(const PipelineTiming& timing, std::span<const Duration> stage_config);

// Basic execution with the given partitions reconfigured. Only the total
// reconfiguration time matters here since nothing overlaps.
SliceEstimate slice_basic(const PipelineSpec& pipeline, const ModuleLibrary& library,
                          std::span<const RPSpec> reconfigured, const VideoFormat& format,
                          const PlatformSpec& platform);

// Staggered bounds; stage_config follows the pipeline's topological order.
SliceEstimate slice_staggered_bounds(const PipelineSpec& pipeline, const ModuleLibrary& library,
                                     std::span<const Duration> stage_config, const VideoFormat& format,
                                     const PlatformSpec& platform);

Duration round_quantum(const VideoFormat& format, const ScheduleParams& params);

// Upper bound of a slice that processes g frames back to back.
Duration slice_amortized(const SliceEstimate& slice, std::int64_t g);
Duration staggered_lower_simple(const SliceEstimate& slice, std::int64_t g);
Duration staggered_lower_tight(const SliceEstimate& slice, std::int64_t g);

// A pipeline's demand on one round: its slice plus the non-reconfiguration
// cost of switching to it.
struct PipelineLoad {
    SliceEstimate slice;
    Duration switch_cost;
};

struct FeasibilityReport {
    ScheduleParams params;
    Duration round_quantum;
    std::vector<SliceEstimate> slices;
    Duration total;
    bool feasible = false;
    Duration slack;            // round_quantum - total, may be negative
    double effective_fps = 0;  // per pipeline; 0 when infeasible
    std::string diagnosis;
};

FeasibilityReport check_feasibility(std::span<const PipelineLoad> loads, const VideoFormat& format,
                                    const ScheduleParams& params);

// Smallest s >= 1 that makes the round feasible for bundle size g.
std::int64_t min_downsample(std::span<const PipelineLoad> loads, const VideoFormat& format, std::int64_t g);

}  // namespace dprshare
