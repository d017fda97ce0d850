#pragma once

// Stage-to-partition assignment and crossbar route planning. Resident
// modules are retained and reused across pipeline switches so that only
// partitions whose module actually changes go through PCAP.

#include <dprshare/model.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dprshare {

enum class ExecutionMode { Basic, Staggered };

const char* to_string(ExecutionMode mode);
ExecutionMode parse_execution_mode(const std::string& text);

enum class EndpointKind { Camera, Display, RpIn, RpOut };

struct Endpoint {
    EndpointKind kind = EndpointKind::Camera;
    std::size_t rp = 0;     // RpIn / RpOut only
    std::int64_t port = 0;  // RpIn / RpOut only

    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& e, const PlatformSpec& platform);

enum class RouteKind { Direct, ThruDram };

struct Route {
    Endpoint source;
    Endpoint sink;
    RouteKind kind = RouteKind::Direct;
    std::string from_stage;  // kCamera or stage id
    std::string to_stage;    // kDisplay or stage id

    friend bool operator==(const Route&, const Route&) = default;
};

struct FabricState {
    std::vector<std::optional<std::string>> loaded;  // per partition
    std::vector<std::uint64_t> last_used;            // per partition, 0 = never
    std::uint64_t tick = 0;
    std::vector<Route> routes;

    // Partition contents as declared by RPSpec::loaded.
    static FabricState from_platform(const PlatformSpec& platform);
    static FabricState empty(std::size_t partitions);
};

struct Reconfiguration {
    std::size_t rp = 0;
    std::string module;
    std::size_t stage = 0;  // index into PipelineSpec::stages
    Duration time;

    friend bool operator==(const Reconfiguration&, const Reconfiguration&) = default;
};

struct TransitionPlan {
    std::string pipeline_id;
    std::vector<std::size_t> assignment;       // stage index -> partition index
    std::vector<Reconfiguration> reconfigure;  // PCAP order: topological stage order
    std::vector<Route> routes;
    Duration reconfig_time_total;
    Duration route_config_time;

    friend bool operator==(const TransitionPlan&, const TransitionPlan&) = default;
};

// Plan the switch from `state` to `next`. Minimizes the number of
// reconfigured partitions, then total reconfiguration time, then prefers
// evicting the least recently used resident module.
TransitionPlan plan_transition(const FabricState& state, const PipelineSpec& next, const ModuleLibrary& library,
                               const PlatformSpec& platform, ExecutionMode mode = ExecutionMode::Basic);

FabricState apply_transition(FabricState state, const TransitionPlan& plan);

// Crossbar routes realizing the pipeline DAG under the given assignment.
// In staggered mode every stage-to-stage link into a reconfigured stage is
// decoupled through a DRAM circular buffer.
std::vector<Route> realize_routes(const PipelineSpec& pipeline, std::span<const std::size_t> assignment,
                                  const std::vector<bool>& reconfigured, ExecutionMode mode);

struct RoundPlan {
    // Transitions that bring the fabric from its initial contents to the
    // steady state; these happen before timed execution.
    std::vector<TransitionPlan> prologue;
    // cycle[i] switches into sequence[i] from sequence[i-1] (cyclically).
    std::vector<TransitionPlan> cycle;
    bool optimal = false;  // true when proven minimal by exhaustive search
    Duration cycle_reconfig_time;
    std::size_t cycle_reconfig_count = 0;
};

struct RoundPlanOptions {
    std::size_t exhaustive_max_partitions = 6;
    std::size_t exhaustive_max_pipelines = 4;
    std::uint64_t node_budget = 20'000'000;
};

RoundPlan plan_round(const FabricState& initial, std::span<const PipelineSpec> sequence,
                     const ModuleLibrary& library, const PlatformSpec& platform,
                     ExecutionMode mode = ExecutionMode::Basic, const RoundPlanOptions& options = {});

enum class ViolationKind { SharedSink, DmaBudget, DramStreams, DramBandwidth, UnknownPartition };

const char* to_string(ViolationKind kind);

struct TopologyViolation {
    ViolationKind kind;
    std::string detail;
    std::vector<Endpoint> endpoints;
};

std::vector<TopologyViolation> validate_topology(std::span<const Route> routes, const PlatformSpec& platform,
                                                 const VideoFormat& format);

// Exact minimum reconfiguration count by enumerating every injective
// stage-to-partition assignment. Limited to 8 partitions and 8 stages.
std::size_t brute_force_min_reconfigs(const FabricState& state, const PipelineSpec& next,
                                      const ModuleLibrary& library, const PlatformSpec& platform);

}  // namespace dprshare
