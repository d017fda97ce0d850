#pragma once

// Scenario files: a versioned JSON document describing the platform, the
// video format, the module library, the registered pipelines, schedule
// parameters and optionally a sweep grid.

#include <dprshare/assignment.hpp>
#include <dprshare/model.hpp>
#include <dprshare/simulator.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dprshare {

inline constexpr int kScenarioVersion = 1;

// Load failure with a location: "file:line:col" for syntax errors or
// "file:/json/pointer" for schema and reference errors.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string location, const std::string& message)
        : std::runtime_error(location + ": " + message), location_(std::move(location)) {}
    const std::string& location() const { return location_; }

private:
    std::string location_;
};

struct SweepAxes {
    std::vector<std::int64_t> g{1};
    std::vector<std::int64_t> s;           // empty: search for the smallest feasible s
    std::vector<std::int64_t> reconfigs;   // partitions reconfigured per switch; empty: use base pipelines
    std::vector<std::int64_t> pipelines;   // pipelines time-shared; empty: use base pipelines
    std::vector<VideoFormat> resolutions;  // empty: base format
    std::int64_t stages_per_pipeline = 6;
    std::int64_t buffer_lines = 10;
    std::size_t max_cells = 4096;
};

struct Scenario {
    std::string name;
    PlatformSpec platform;
    VideoFormat format;
    ModuleLibrary modules;
    std::vector<PipelineSpec> pipelines;
    ScheduleParams schedule;
    ExecutionMode mode = ExecutionMode::Basic;
    std::int64_t rounds = 4;
    std::optional<SweepAxes> sweep;
};

Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

// Inverse of parse_scenario for the fields it reads.
std::string dump_scenario(const Scenario& scenario);

// Plan the steady-state round and assemble a simulation input.
SimScenario prepare_simulation(const Scenario& scenario);

// Analytic loads derived from a round plan, one per pipeline in round order.
std::vector<PipelineLoad> loads_from_plan(const Scenario& scenario, const RoundPlan& plan);

// Random but valid scenario for property tests and CLI exploration.
struct RandomScenarioOptions {
    std::size_t max_stages = 6;
    std::size_t max_pipelines = 3;
    std::size_t partitions = 6;
    bool allow_forks = true;
    ExecutionMode mode = ExecutionMode::Staggered;
};

Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& options = {});

}  // namespace dprshare
