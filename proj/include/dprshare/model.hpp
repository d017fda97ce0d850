#pragma once

// Domain types shared by the planner, the analytical model and the simulator.

#include <dprshare/units.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dprshare {

enum class ErrorKind {
    InvalidArgument,
    UnknownModule,
    UnknownStage,
    DuplicateId,
    MissingSource,
    MissingSink,
    Cycle,
    DanglingStage,
    PortOverflow,
    UnassignedStage,
    InsufficientPartitions,
    ModuleFitsNoPartition,
    TopologyViolation,
    DecouplingBudget,
    BufferOverflow,
    InstanceTooLarge,
    MissingRound,
    UnknownRoute,
};

const char* to_string(ErrorKind kind);

class ModelError : public std::runtime_error {
public:
    ModelError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct VideoFormat {
    std::int64_t width = 1920;
    std::int64_t height = 1080;
    double fps = 60.0;
    std::int64_t bytes_per_pixel = 2;  // YUYV422

    std::int64_t pixels() const { return width * height; }
    Bytes frame_bytes() const { return {pixels() * bytes_per_pixel}; }
    void validate() const;

    static VideoFormat hd1080p60() { return {1920, 1080, 60.0, 2}; }
    static VideoFormat hd720p60() { return {1280, 720, 60.0, 2}; }
};

struct ResourceVector {
    std::int64_t lut = 0;
    std::int64_t bram36 = 0;
    std::int64_t dsp = 0;

    // Componentwise <=.
    bool fits_within(const ResourceVector& capacity) const {
        return lut <= capacity.lut && bram36 <= capacity.bram36 && dsp <= capacity.dsp;
    }
    bool non_negative() const { return lut >= 0 && bram36 >= 0 && dsp >= 0; }
    friend bool operator==(const ResourceVector&, const ResourceVector&) = default;
};

struct ModuleSpec {
    std::string id;
    std::int64_t buffer_lines = 0;
    // Clock cycles spent per pixel when streaming solo; 1 is full rate.
    std::int64_t cycles_per_pixel = 1;
    ResourceVector demand;
    std::int64_t in_ports = 1;
    std::int64_t out_ports = 1;

    void validate() const;
};

struct RPSpec {
    std::string id;
    Bytes bitstream_bytes{300'000};
    ResourceVector capacity{20'000, 60, 50};
    std::optional<std::string> loaded;  // initial resident module, if any

    bool can_host(const ModuleSpec& module) const { return module.demand.fits_within(capacity); }
};

struct PlatformSpec {
    Frequency fabric_clock = Frequency::mhz(200.0);
    Frequency pixel_clock = Frequency::mhz(148.5);
    ByteRate pcap_throughput = ByteRate::mb_per_s(128.0);
    ByteRate dram_bandwidth = ByteRate::gb_per_s(12.8);
    std::int64_t max_dram_streams = 5;
    std::int64_t dma_engines = 5;
    // Camera and display double-buffers each hold one DMA engine permanently.
    std::int64_t reserved_dma_engines = 2;
    // Fixed non-reconfiguration cost of a pipeline switch (DMA/module setup,
    // completion polling). Route programming is charged separately per link.
    Duration switch_overhead = Duration::from_us(1.0);
    Duration route_link_time = Duration::from_ps(100'000);  // 0.1 us per crossbar link
    std::vector<RPSpec> partitions;

    // Read+write demand of one thru-DRAM streaming connection at the format's rate.
    ByteRate per_stream_bandwidth(const VideoFormat& format) const;
    // DRAM bandwidth available to one stream when the stream budget is fully used.
    ByteRate per_stream_share() const;
    std::int64_t usable_decoupling_engines() const { return dma_engines - reserved_dma_engines; }
    std::optional<std::size_t> partition_index(const std::string& id) const;

    void validate(const VideoFormat& reference) const;

    // Six identical 300 KB partitions, the time-sharing set of the prototype.
    static PlatformSpec zc706_small_rps(std::size_t count = 6);
};

// Stage endpoint names reserved for the pipeline source and sink.
inline constexpr const char* kCamera = "camera";
inline constexpr const char* kDisplay = "display";

struct Stage {
    std::string id;
    std::string module;
};

struct Edge {
    std::string from;  // stage id or kCamera
    std::string to;    // stage id or kDisplay
};

struct PipelineSpec {
    std::string id;
    std::vector<Stage> stages;
    std::vector<Edge> edges;

    // camera -> s0 -> s1 -> ... -> display
    static PipelineSpec linear(std::string id, const std::vector<std::string>& modules);
};

using ModuleLibrary = std::map<std::string, ModuleSpec>;

// Index-based view of a validated pipeline DAG.
struct StageGraph {
    std::vector<std::vector<std::size_t>> preds;  // upstream stages, edge order
    std::vector<std::vector<std::size_t>> succs;  // downstream stages, edge order
    std::vector<std::size_t> topo;                // deterministic topological order
    std::size_t entry = 0;                        // stage fed by the camera
    std::size_t exit = 0;                         // stage feeding the display
};

// Checks every structural invariant and returns the index view. Each failure
// class raises a distinct ErrorKind.
StageGraph validate_pipeline(const PipelineSpec& pipeline, const ModuleLibrary& library);

const ModuleSpec& lookup_module(const ModuleLibrary& library, const std::string& id);

struct ScheduleParams {
    std::int64_t g = 1;  // frames per bundle
    std::int64_t s = 1;  // downsample divisor
    void validate() const;
    friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

Duration frame_period(const VideoFormat& format);

// Time to stream one frame's active pixels at one pixel per clock.
Duration active_stream_time(const VideoFormat& format, Frequency clock);

}  // namespace dprshare
