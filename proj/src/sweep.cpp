#include <dprshare/sweep.hpp>

#include <dprshare/perf_model.hpp>
#include <dprshare/simulator.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace dprshare {

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

struct Column {
    std::string name;
    bool right = true;
};

const std::vector<Column> kColumns = {
    {"pipelines"}, {"reconfigs"}, {"resolution", false}, {"mode", false}, {"g"}, {"s"},
    {"rp_per_round"}, {"quantum_ms"}, {"total_ms"}, {"slack_ms"}, {"feasible", false}, {"fps"},
    {"glitches"}, {"sim_fps"}, {"agree", false}, {"error", false},
};

std::vector<std::string> cells_of(const SweepRow& r) {
    return {
        std::to_string(r.cell.pipelines),
        r.cell.reconfigs < 0 ? "-" : std::to_string(r.cell.reconfigs),
        format_label(r.cell.format),
        to_string(r.mode),
        std::to_string(r.cell.g),
        std::to_string(r.s),
        std::to_string(r.reconfigs_per_round),
        fixed(r.quantum.ms(), 3),
        fixed(r.total.ms(), 3),
        fixed(r.slack.ms(), 3),
        r.feasible ? "yes" : "no",
        fixed(r.fps, 2),
        std::to_string(r.glitches),
        fixed(r.sim_fps, 2),
        r.agree ? "yes" : "NO",
        r.error,
    };
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_label(const VideoFormat& f) {
    std::ostringstream os;
    os << f.width << 'x' << f.height << '@' << f.fps;
    return os.str();
}

bool verdicts_agree(ExecutionMode mode, bool feasible, std::size_t glitches) {
    if (mode == ExecutionMode::Basic) return feasible == (glitches == 0);
    return !feasible || glitches == 0;
}

std::vector<SweepCell> expand_cells(const Scenario& base) {
    if (!base.sweep) {
        SweepCell c;
        c.pipelines = static_cast<std::int64_t>(base.pipelines.size());
        c.format = base.format;
        c.g = base.schedule.g;
        c.s = base.schedule.s;
        return {c};
    }
    const SweepAxes& ax = *base.sweep;
    const std::vector<VideoFormat> formats = ax.resolutions.empty() ? std::vector{base.format} : ax.resolutions;
    const std::vector<std::int64_t> pipes =
        ax.pipelines.empty() ? std::vector{static_cast<std::int64_t>(base.pipelines.size())} : ax.pipelines;
    const std::vector<std::int64_t> ks = ax.reconfigs.empty() ? std::vector<std::int64_t>{-1} : ax.reconfigs;
    const std::vector<std::int64_t> ss = ax.s.empty() ? std::vector<std::int64_t>{0} : ax.s;

    const std::size_t total = formats.size() * pipes.size() * ks.size() * ax.g.size() * ss.size();
    if (total > ax.max_cells)
        throw ScenarioError("/sweep/max_cells", "grid has " + std::to_string(total) + " cells, limit is " +
                                                    std::to_string(ax.max_cells));
    if (ax.reconfigs.empty())
        for (auto n : pipes)
            if (n > static_cast<std::int64_t>(base.pipelines.size()))
                throw ScenarioError("/sweep/pipelines", "more pipelines requested than the scenario defines");

    std::vector<SweepCell> cells;
    for (const auto& f : formats)
        for (auto n : pipes)
            for (auto k : ks)
                for (auto g : ax.g)
                    for (auto s : ss) cells.push_back({n, k, f, g, s});
    return cells;
}

Scenario cell_scenario(const Scenario& base, const SweepCell& cell) {
    Scenario sc = base;
    sc.sweep.reset();
    sc.format = cell.format;
    sc.schedule = {cell.g, cell.s < 1 ? 1 : cell.s};
    if (cell.reconfigs < 0) {
        sc.pipelines.resize(static_cast<std::size_t>(cell.pipelines));
        return sc;
    }
    const std::int64_t stages = base.sweep ? base.sweep->stages_per_pipeline : 6;
    const std::int64_t lines = base.sweep ? base.sweep->buffer_lines : 10;
    sc.modules.clear();
    sc.pipelines.clear();
    for (auto& rp : sc.platform.partitions) rp.loaded.reset();
    auto add_module = [&](const std::string& id) {
        ModuleSpec m;
        m.id = id;
        m.buffer_lines = lines;
        sc.modules[id] = m;
        return id;
    };
    for (std::int64_t p = 0; p < cell.pipelines; ++p) {
        std::vector<std::string> mods;
        for (std::int64_t i = 0; i < stages; ++i) {
            if (i < stages - cell.reconfigs) mods.push_back(add_module("shared" + std::to_string(i)));
            else mods.push_back(add_module("p" + std::to_string(p) + "_m" + std::to_string(i)));
        }
        sc.pipelines.push_back(PipelineSpec::linear("p" + std::to_string(p), mods));
    }
    return sc;
}

SweepRow evaluate_cell(const Scenario& base, const SweepCell& cell) {
    SweepRow row;
    row.cell = cell;
    row.mode = base.mode;
    row.s = cell.s;
    try {
        Scenario sc = cell_scenario(base, cell);
        SimScenario sim = prepare_simulation(sc);
        row.reconfigs_per_round = sim.plan.cycle_reconfig_count;
        const auto loads = loads_from_plan(sc, sim.plan);
        if (cell.s < 1) row.s = min_downsample(loads, sc.format, cell.g);
        const ScheduleParams params{cell.g, row.s};
        const FeasibilityReport rep = check_feasibility(loads, sc.format, params);
        row.quantum = rep.round_quantum;
        row.total = rep.total;
        row.slack = rep.slack;
        row.feasible = rep.feasible;
        row.fps = rep.effective_fps;

        sim.config.params = params;
        const Timeline tl = simulate(sim);
        row.glitches = tl.glitches.size();
        row.sim_fps = tl.per_pipeline.empty() ? sc.format.fps / static_cast<double>(row.s) : 1e300;
        for (const auto& ps : tl.per_pipeline) row.sim_fps = std::min(row.sim_fps, ps.achieved_fps);
        row.agree = verdicts_agree(row.mode, row.feasible, row.glitches);
    } catch (const ModelError& e) {
        row.feasible = false;
        row.fps = 0.0;
        row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    return row;
}

std::vector<SweepRow> run_sweep(const Scenario& base, std::size_t jobs) {
    const auto cells = expand_cells(base);
    std::vector<SweepRow> rows(cells.size());
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, cells.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = evaluate_cell(base, cells[i]);
    };
    if (jobs == 1) {
        worker();
        return rows;
    }
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    pool.clear();
    return rows;
}

ReportFormat parse_report_format(const std::string& text) {
    if (text == "table") return ReportFormat::Table;
    if (text == "csv") return ReportFormat::Csv;
    if (text == "ndjson") return ReportFormat::Ndjson;
    throw ModelError(ErrorKind::InvalidArgument, "unknown report format '" + text + "'");
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, ReportFormat format) {
    if (format == ReportFormat::Ndjson) {
        for (const auto& r : rows) {
            nlohmann::ordered_json j;
            j["pipelines"] = r.cell.pipelines;
            j["reconfigs"] = r.cell.reconfigs;
            j["width"] = r.cell.format.width;
            j["height"] = r.cell.format.height;
            j["fps_in"] = r.cell.format.fps;
            j["mode"] = to_string(r.mode);
            j["g"] = r.cell.g;
            j["s"] = r.s;
            j["rp_per_round"] = r.reconfigs_per_round;
            j["quantum_ps"] = r.quantum.ps();
            j["total_ps"] = r.total.ps();
            j["slack_ps"] = r.slack.ps();
            j["feasible"] = r.feasible;
            j["fps"] = r.fps;
            j["glitches"] = r.glitches;
            j["sim_fps"] = r.sim_fps;
            j["agree"] = r.agree;
            j["error"] = r.error;
            os << j.dump() << '\n';
        }
        return;
    }
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) body.push_back(cells_of(r));
    if (format == ReportFormat::Csv) {
        for (std::size_t c = 0; c < kColumns.size(); ++c) os << (c ? "," : "") << kColumns[c].name;
        os << '\n';
        for (const auto& line : body) {
            for (std::size_t c = 0; c < line.size(); ++c) os << (c ? "," : "") << csv_escape(line[c]);
            os << '\n';
        }
        return;
    }
    std::vector<std::size_t> width(kColumns.size());
    for (std::size_t c = 0; c < kColumns.size(); ++c) width[c] = kColumns[c].name.size();
    for (const auto& line : body)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    auto emit = [&](const std::vector<std::string>& line) {
        std::string out;
        for (std::size_t c = 0; c < line.size(); ++c) {
            const std::string pad(width[c] - line[c].size(), ' ');
            if (c) out += "  ";
            out += kColumns[c].right ? pad + line[c] : line[c] + pad;
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        os << out << '\n';
    };
    std::vector<std::string> header;
    for (const auto& col : kColumns) header.push_back(col.name);
    emit(header);
    for (const auto& line : body) emit(line);
}

}  // namespace dprshare
