#pragma once

// Text renderings of a simulated timeline.

#include <dprshare/simulator.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace dprshare {

struct GanttOptions {
    std::size_t columns = 96;
};

// One lane per partition and per pipeline. Partition lanes show 'R' while
// the partition is being reconfigured and the pipeline letter while it
// processes; pipeline lanes show the letter for the whole slice. '.' marks
// idle time. A ruler marks round boundaries with '|' and misses with '!'.
std::string render_gantt(const Timeline& timeline, const GanttOptions& options = {});

// Lane a given event belongs to: "rp:<id>" for partition events,
// "pipeline:<id>" for pipeline-level events, otherwise "camera" or "round".
std::string lane_of(const Timeline& timeline, const Event& event);

// Line-delimited records: one "lane" record per lane, then every event with
// its lane, then the summary. read_ndjson_events recovers the events.
void write_lane_records(std::ostream& os, const Timeline& timeline);

// Letter used for pipeline i in the Gantt chart.
char pipeline_letter(std::size_t index);

}  // namespace dprshare
