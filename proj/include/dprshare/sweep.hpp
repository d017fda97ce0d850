#pragma once

// Parameter sweeps: every cell of the grid is checked analytically and then
// confirmed by simulation.

#include <dprshare/scenario.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace dprshare {

struct SweepCell {
    std::int64_t pipelines = 0;  // 0: base pipelines
    std::int64_t reconfigs = -1; // -1: base pipelines
    VideoFormat format;
    std::int64_t g = 1;
    std::int64_t s = 0;  // 0: smallest feasible s
};

struct SweepRow {
    SweepCell cell;
    std::int64_t s = 0;  // s actually evaluated
    ExecutionMode mode = ExecutionMode::Basic;
    std::size_t reconfigs_per_round = 0;
    Duration quantum;
    Duration total;
    Duration slack;
    bool feasible = false;
    double fps = 0.0;
    std::size_t glitches = 0;
    double sim_fps = 0.0;
    bool agree = true;
    std::string error;  // empty when the cell evaluated cleanly
};

// Cross product of the scenario's sweep axes, in a fixed nesting order:
// resolution, pipelines, reconfigs, g, s. Without axes the base scenario is
// a single cell. Throws ScenarioError when the grid exceeds max_cells.
std::vector<SweepCell> expand_cells(const Scenario& base);

// Scenario realized by one cell. With a reconfigs axis every pipeline is a
// linear chain of stages_per_pipeline stages whose last `reconfigs` modules
// are private to it and whose leading modules are shared by all pipelines.
Scenario cell_scenario(const Scenario& base, const SweepCell& cell);

SweepRow evaluate_cell(const Scenario& base, const SweepCell& cell);

// Rows come back in expand_cells order regardless of `jobs`.
std::vector<SweepRow> run_sweep(const Scenario& base, std::size_t jobs = 1);

// Analytic and simulated verdicts agree: in basic mode feasibility must
// coincide with zero glitches; in staggered mode feasibility must imply it.
bool verdicts_agree(ExecutionMode mode, bool feasible, std::size_t glitches);

enum class ReportFormat { Table, Csv, Ndjson };
ReportFormat parse_report_format(const std::string& text);

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, ReportFormat format);

std::string format_label(const VideoFormat& format);

}  // namespace dprshare
