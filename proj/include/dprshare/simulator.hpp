#pragma once

// Deterministic discrete-event simulation of round-robin time-shared
// execution. Event granularity is stage/frame level; streaming within a
// slice is modeled as fluid flow at the pipeline's bottleneck rate.

#include <dprshare/assignment.hpp>
#include <dprshare/model.hpp>
#include <dprshare/perf_model.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dprshare {

enum class EventKind {
    CameraFrameCaptured,
    PipelineSwitch,
    ReconfigStart,
    ReconfigEnd,
    StageStarted,
    StageFirstPixelOut,
    StageFrameDone,
    PipelineFrameDone,
    RoundEnd,
    DeadlineMiss,
};

const char* to_string(EventKind kind);
EventKind parse_event_kind(const std::string& text);

struct Event {
    Duration time;
    EventKind kind = EventKind::RoundEnd;
    std::int64_t round = -1;
    std::int64_t pipeline = -1;  // index into the pipeline sequence
    std::int64_t stage = -1;     // index into PipelineSpec::stages
    std::int64_t rp = -1;        // partition index
    std::int64_t frame = -1;     // camera frame index

    friend bool operator==(const Event&, const Event&) = default;
};

struct SimConfig {
    ExecutionMode mode = ExecutionMode::Basic;
    ScheduleParams params;
    std::int64_t rounds = 4;
};

struct PipelineStats {
    std::string id;
    std::int64_t frames_processed = 0;
    std::int64_t frames_on_time = 0;
    double achieved_fps = 0.0;  // on-time frames per second of simulated time
    std::vector<Duration> slice_durations;  // one per round
    Duration max_latency;                   // capture start to display-eligible
};

struct FifoStats {
    std::int64_t pipeline = 0;
    std::string from_stage;
    std::string to_stage;
    Bytes high_water;
};

struct Timeline {
    ExecutionMode mode = ExecutionMode::Basic;
    ScheduleParams params;
    Duration round_quantum;
    std::int64_t rounds = 0;
    std::vector<Event> events;
    std::vector<PipelineStats> per_pipeline;
    std::vector<Event> glitches;
    std::vector<Duration> round_totals;  // switch costs plus slices, per round
    std::int64_t peak_dram_streams = 0;
    ByteRate peak_dram_bandwidth;
    std::vector<FifoStats> fifos;

    // Names for rendering.
    std::vector<std::string> pipeline_ids;
    std::vector<std::vector<std::string>> stage_ids;
    std::vector<std::string> partition_ids;
};

struct SimScenario {
    PlatformSpec platform;
    VideoFormat format;
    ModuleLibrary library;
    std::vector<PipelineSpec> pipelines;  // round-robin order
    RoundPlan plan;                       // from plan_round over `pipelines`
    SimConfig config;
};

Timeline simulate(const SimScenario& scenario);

// Duration from a pipeline's PipelineSwitch to its last PipelineFrameDone in `round`.
Duration measured_slice(const Timeline& timeline, std::int64_t pipeline, std::int64_t round);

Bytes buffer_high_water(const Timeline& timeline, std::int64_t pipeline, const std::string& from_stage,
                        const std::string& to_stage);

// One event per line followed by one summary record. When `lane` is given
// each event record also carries a "lane" field.
void write_ndjson(std::ostream& os, const Timeline& timeline,
                  const std::function<std::string(const Event&)>& lane = {});
// Reads back the event records of write_ndjson output (the summary line is skipped).
std::vector<Event> read_ndjson_events(std::istream& is);

}  // namespace dprshare
