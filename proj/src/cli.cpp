#include <dprshare/cli.hpp>

#include <dprshare/perf_model.hpp>
#include <dprshare/render.hpp>
#include <dprshare/scenario.hpp>
#include <dprshare/simulator.hpp>
#include <dprshare/sweep.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace dprshare {

namespace {

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> g;
    std::optional<std::int64_t> s;
    std::optional<std::string> mode;
    std::optional<std::int64_t> rounds;
    std::string format = "table";
    std::size_t jobs = 1;
    std::size_t columns = 96;
};

// Thrown for bad input that is not tied to a scenario file location.
struct LoadFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string ms(Duration d) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << d.ms();
    return os.str();
}

std::string fps_text(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

Scenario load(const Options& o) {
    Scenario sc;
    if (!o.scenario.empty()) sc = load_scenario(o.scenario);
    else if (o.seed) sc = random_scenario(*o.seed);
    else throw LoadFailure("either --scenario or --seed is required");
    try {
        if (o.g) sc.schedule.g = *o.g;
        if (o.s) sc.schedule.s = *o.s;
        if (o.mode) sc.mode = parse_execution_mode(*o.mode);
        if (o.rounds) sc.rounds = *o.rounds;
        sc.schedule.validate();
        if (sc.rounds < 1) throw LoadFailure("--rounds must be >= 1");
        parse_report_format(o.format);
    } catch (const ModelError& e) {
        throw LoadFailure(e.what());
    }
    if (sc.sweep && o.g) sc.sweep->g = {*o.g};
    if (sc.sweep && o.s) sc.sweep->s = {*o.s};
    return sc;
}

// Simple aligned table: first row is the header.
void write_rows(std::ostream& os, const std::vector<std::vector<std::string>>& rows, ReportFormat format) {
    if (rows.empty()) return;
    if (format == ReportFormat::Csv) {
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
            os << '\n';
        }
        return;
    }
    std::vector<std::size_t> w(rows[0].size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) line += "  ";
            line += c == 0 ? r[c] + std::string(w[c] - r[c].size(), ' ') : std::string(w[c] - r[c].size(), ' ') + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        os << line << '\n';
    }
}

struct Analysis {
    SimScenario sim;
    std::vector<PipelineLoad> loads;
    FeasibilityReport report;
};

Analysis analyze(const Scenario& sc) {
    Analysis a{prepare_simulation(sc), {}, {}};
    a.loads = loads_from_plan(sc, a.sim.plan);
    a.report = check_feasibility(a.loads, sc.format, sc.schedule);
    return a;
}

int cmd_check(const Scenario& sc, ReportFormat fmt, std::ostream& out) {
    const Analysis a = analyze(sc);
    const auto& rep = a.report;
    if (fmt == ReportFormat::Ndjson) {
        for (std::size_t i = 0; i < a.loads.size(); ++i) {
            const auto& l = a.loads[i];
            nlohmann::ordered_json j;
            j["record"] = "pipeline";
            j["id"] = l.slice.pipeline_id;
            j["t_config_ps"] = l.slice.t_config.ps();
            j["t_fill_ps"] = l.slice.t_fill.ps();
            j["t_frame_ps"] = l.slice.t_frame.ps();
            j["switch_ps"] = l.switch_cost.ps();
            j["slice_ps"] = slice_amortized(l.slice, sc.schedule.g).ps();
            j["lower_tight_ps"] = staggered_lower_tight(l.slice, sc.schedule.g).ps();
            out << j.dump() << '\n';
        }
        nlohmann::ordered_json j;
        j["record"] = "round";
        j["scenario"] = sc.name;
        j["mode"] = to_string(sc.mode);
        j["g"] = sc.schedule.g;
        j["s"] = sc.schedule.s;
        j["quantum_ps"] = rep.round_quantum.ps();
        j["total_ps"] = rep.total.ps();
        j["slack_ps"] = rep.slack.ps();
        j["feasible"] = rep.feasible;
        j["fps"] = rep.effective_fps;
        j["diagnosis"] = rep.diagnosis;
        out << j.dump() << '\n';
        return kExitOk;
    }
    std::vector<std::vector<std::string>> rows = {
        {"pipeline", "t_config_ms", "t_fill_ms", "t_frame_ms", "switch_ms", "slice_ms", "lower_ms"}};
    for (const auto& l : a.loads)
        rows.push_back({l.slice.pipeline_id, ms(l.slice.t_config), ms(l.slice.t_fill), ms(l.slice.t_frame),
                        ms(l.switch_cost), ms(slice_amortized(l.slice, sc.schedule.g)),
                        ms(staggered_lower_tight(l.slice, sc.schedule.g))});
    if (fmt == ReportFormat::Csv) {
        rows[0].insert(rows[0].end(), {"quantum_ms", "total_ms", "feasible", "fps"});
        for (std::size_t i = 1; i < rows.size(); ++i)
            rows[i].insert(rows[i].end(),
                           {ms(rep.round_quantum), ms(rep.total), rep.feasible ? "yes" : "no", fps_text(rep.effective_fps)});
        write_rows(out, rows, fmt);
        return kExitOk;
    }
    out << "scenario " << sc.name << "  mode " << to_string(sc.mode) << "  " << format_label(sc.format)
        << "  g=" << sc.schedule.g << " s=" << sc.schedule.s << '\n';
    write_rows(out, rows, fmt);
    out << "quantum " << ms(rep.round_quantum) << " ms  total " << ms(rep.total) << " ms  slack " << ms(rep.slack)
        << " ms\n";
    if (rep.feasible) out << "feasible at " << fps_text(rep.effective_fps) << " fps per pipeline\n";
    else out << "infeasible: " << rep.diagnosis << '\n';
    return kExitOk;
}

int cmd_simulate(const Scenario& sc, ReportFormat fmt, std::ostream& out, std::ostream& err) {
    const Analysis a = analyze(sc);
    const Timeline tl = simulate(a.sim);
    const bool agree = verdicts_agree(sc.mode, a.report.feasible, tl.glitches.size());
    if (fmt == ReportFormat::Ndjson) {
        write_ndjson(out, tl);
    } else {
        std::vector<std::vector<std::string>> rows = {
            {"pipeline", "frames", "on_time", "fps", "max_slice_ms", "max_latency_ms"}};
        for (const auto& ps : tl.per_pipeline) {
            Duration worst = Duration::zero();
            for (Duration d : ps.slice_durations) worst = std::max(worst, d);
            rows.push_back({ps.id, std::to_string(ps.frames_processed), std::to_string(ps.frames_on_time),
                            fps_text(ps.achieved_fps), ms(worst), ms(ps.max_latency)});
        }
        if (fmt == ReportFormat::Table)
            out << "scenario " << sc.name << "  mode " << to_string(sc.mode) << "  " << format_label(sc.format)
                << "  g=" << sc.schedule.g << " s=" << sc.schedule.s << "  rounds " << tl.rounds << '\n';
        write_rows(out, rows, fmt);
        if (fmt == ReportFormat::Table) {
            out << "glitches " << tl.glitches.size() << "  peak dram streams " << tl.peak_dram_streams << '\n';
            for (const auto& f : tl.fifos)
                out << "fifo " << tl.pipeline_ids[static_cast<std::size_t>(f.pipeline)] << ' ' << f.from_stage
                    << " -> " << f.to_stage << " high water " << f.high_water.value << " B\n";
            out << "analytic " << (a.report.feasible ? "feasible" : "infeasible") << "  agreement "
                << (agree ? "yes" : "NO") << '\n';
        }
    }
    if (!agree) {
        err << "error: analytic verdict (" << (a.report.feasible ? "feasible" : "infeasible")
            << ") disagrees with simulation (" << tl.glitches.size() << " glitches)\n";
        return kExitDisagreement;
    }
    return kExitOk;
}

int cmd_sweep(const Scenario& sc, ReportFormat fmt, std::size_t jobs, std::ostream& out, std::ostream& err) {
    const auto rows = run_sweep(sc, jobs);
    write_sweep(out, rows, fmt);
    bool disagree = false, errors = false;
    for (const auto& r : rows) {
        if (!r.agree) {
            disagree = true;
            err << "error: disagreement in cell pipelines=" << r.cell.pipelines << " reconfigs=" << r.cell.reconfigs
                << " " << format_label(r.cell.format) << " g=" << r.cell.g << " s=" << r.s << '\n';
        }
        if (!r.error.empty()) errors = true;
    }
    if (disagree) return kExitDisagreement;
    if (errors) {
        err << "error: some cells failed, see the error column\n";
        return kExitExecution;
    }
    return kExitOk;
}

int cmd_plan(const Scenario& sc, ReportFormat fmt, std::ostream& out) {
    const RoundPlan plan = plan_round(FabricState::from_platform(sc.platform), sc.pipelines, sc.modules, sc.platform,
                                      sc.mode);
    auto rp_name = [&](std::size_t i) { return sc.platform.partitions.at(i).id; };
    std::vector<std::vector<std::string>> rows = {
        {"phase", "pipeline", "stage", "module", "rp", "reconfigure", "reconfig_ms"}};
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    auto add = [&](const char* phase, const std::vector<TransitionPlan>& steps) {
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& t = steps[i];
            const auto* p = &sc.pipelines[0];
            for (const auto& cand : sc.pipelines)
                if (cand.id == t.pipeline_id) p = &cand;
            nlohmann::ordered_json j;
            j["record"] = "transition";
            j["phase"] = phase;
            j["step"] = i;
            j["pipeline"] = t.pipeline_id;
            j["reconfig_ps"] = t.reconfig_time_total.ps();
            j["route_ps"] = t.route_config_time.ps();
            nlohmann::ordered_json asg = nlohmann::ordered_json::array();
            for (std::size_t st = 0; st < t.assignment.size(); ++st) {
                std::optional<Duration> rc;
                for (const auto& r : t.reconfigure)
                    if (r.stage == st) rc = r.time;
                rows.push_back({phase, t.pipeline_id, p->stages[st].id, p->stages[st].module,
                                rp_name(t.assignment[st]), rc ? "yes" : "no", ms(rc.value_or(Duration::zero()))});
                asg.push_back({{"stage", p->stages[st].id},
                               {"module", p->stages[st].module},
                               {"rp", rp_name(t.assignment[st])},
                               {"reconfigure", rc.has_value()}});
            }
            j["assignment"] = asg;
            nlohmann::ordered_json routes = nlohmann::ordered_json::array();
            for (const auto& r : t.routes)
                routes.push_back({{"from", r.from_stage},
                                  {"to", r.to_stage},
                                  {"source", to_string(r.source, sc.platform)},
                                  {"sink", to_string(r.sink, sc.platform)},
                                  {"kind", r.kind == RouteKind::Direct ? "direct" : "thru_dram"}});
            j["routes"] = routes;
            nlohmann::ordered_json viol = nlohmann::ordered_json::array();
            for (const auto& v : validate_topology(t.routes, sc.platform, sc.format))
                viol.push_back({{"kind", to_string(v.kind)}, {"detail", v.detail}});
            j["violations"] = viol;
            records.push_back(j);
        }
    };
    add("prologue", plan.prologue);
    add("cycle", plan.cycle);
    if (fmt == ReportFormat::Ndjson) {
        for (const auto& r : records) out << r.dump() << '\n';
        nlohmann::ordered_json s;
        s["record"] = "summary";
        s["optimal"] = plan.optimal;
        s["cycle_reconfig_count"] = plan.cycle_reconfig_count;
        s["cycle_reconfig_ps"] = plan.cycle_reconfig_time.ps();
        out << s.dump() << '\n';
        return kExitOk;
    }
    write_rows(out, rows, fmt);
    if (fmt == ReportFormat::Table) {
        for (const auto& r : records) {
            out << r["phase"].get<std::string>() << ' ' << r["pipeline"].get<std::string>() << ": routes";
            for (const auto& route : r["routes"])
                out << "  " << route["source"].get<std::string>() << "->" << route["sink"].get<std::string>()
                    << (route["kind"] == "direct" ? "" : " (dram)");
            out << '\n';
            for (const auto& v : r["violations"])
                out << "  violation " << v["kind"].get<std::string>() << ": " << v["detail"].get<std::string>() << '\n';
        }
        out << "cycle: " << plan.cycle_reconfig_count << " reconfigurations, " << ms(plan.cycle_reconfig_time)
            << " ms per round" << (plan.optimal ? " (optimal)" : " (heuristic)") << '\n';
    }
    return kExitOk;
}

int cmd_render(const Scenario& sc, ReportFormat fmt, std::size_t columns, std::ostream& out) {
    const Analysis a = analyze(sc);
    const Timeline tl = simulate(a.sim);
    if (fmt == ReportFormat::Ndjson) {
        write_lane_records(out, tl);
    } else if (fmt == ReportFormat::Csv) {
        out << "t_ps,kind,round,pipeline,stage,rp,frame,lane\n";
        for (const auto& e : tl.events)
            out << e.time.ps() << ',' << to_string(e.kind) << ',' << e.round << ',' << e.pipeline << ',' << e.stage
                << ',' << e.rp << ',' << e.frame << ',' << lane_of(tl, e) << '\n';
    } else {
        out << render_gantt(tl, {columns});
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-shared partial reconfiguration planner and simulator", "dprshare"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "Scenario file (JSON)");
        sub->add_option("--seed", o.seed, "Generate a random scenario from this seed");
        sub->add_option("--g", o.g, "Frames per bundle")->check(CLI::PositiveNumber);
        sub->add_option("--s", o.s, "Downsample divisor")->check(CLI::PositiveNumber);
        sub->add_option("--mode", o.mode, "Execution mode")->check(CLI::IsMember({"basic", "staggered"}));
        sub->add_option("--rounds", o.rounds, "Rounds to simulate")->check(CLI::PositiveNumber);
        sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "table", "ndjson"}));
    };
    auto* check = app.add_subcommand("check", "Analytic feasibility of the scenario's round");
    auto* sim = app.add_subcommand("simulate", "Simulate the scenario and compare with the analytic verdict");
    auto* sweep = app.add_subcommand("sweep", "Evaluate the scenario's sweep grid");
    auto* plan = app.add_subcommand("plan", "Show assignment and transition plans");
    auto* render = app.add_subcommand("render", "Render the simulated timeline");
    for (auto* sub : {check, sim, sweep, plan, render}) common(sub);
    sweep->add_option("--jobs", o.jobs, "Cells evaluated concurrently")->check(CLI::PositiveNumber);
    render->add_option("--columns", o.columns, "Gantt chart width")->check(CLI::Range(8, 1000));

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    Scenario sc;
    ReportFormat fmt = ReportFormat::Table;
    try {
        sc = load(o);
        fmt = parse_report_format(o.format);
    } catch (const ScenarioError& e) {
        err << "load error: " << e.what() << '\n';
        return kExitLoad;
    } catch (const LoadFailure& e) {
        err << "load error: " << e.what() << '\n';
        return kExitLoad;
    }

    try {
        if (check->parsed()) return cmd_check(sc, fmt, out);
        if (sim->parsed()) return cmd_simulate(sc, fmt, out, err);
        if (plan->parsed()) return cmd_plan(sc, fmt, out);
        if (render->parsed()) return cmd_render(sc, fmt, o.columns, out);
        try {
            return cmd_sweep(sc, fmt, o.jobs, out, err);
        } catch (const ScenarioError& e) {
            err << "load error: " << e.what() << '\n';
            return kExitLoad;
        }
    } catch (const ModelError& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return kExitExecution;
    }
}

}  // namespace dprshare
