#include <dprshare/render.hpp>

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace dprshare {

char pipeline_letter(std::size_t index) {
    if (index < 26) return static_cast<char>('A' + index);
    if (index < 52) return static_cast<char>('a' + (index - 26));
    return '#';
}

namespace {

class Canvas {
public:
    Canvas(Duration span, std::size_t columns) : span_(span), columns_(std::max<std::size_t>(columns, 1)) {}

    std::size_t column(Duration t) const {
        if (span_.ps() <= 0) return 0;
        const auto c = static_cast<std::size_t>(std::max<std::int64_t>(0, t.ps()) * static_cast<__int128>(columns_) /
                                                span_.ps());
        return std::min(c, columns_ - 1);
    }

    // Paints [from, to); any interval of positive length covers at least one column.
    void paint(std::string& lane, Duration from, Duration to, char mark) const {
        if (to <= from) return;
        const std::size_t a = column(from);
        const std::size_t b = std::max(a, column(to - Duration::from_ps(1)));
        for (std::size_t c = a; c <= b; ++c) lane[c] = mark;
    }

    std::string blank() const { return std::string(columns_, '.'); }
    std::size_t columns() const { return columns_; }

private:
    Duration span_;
    std::size_t columns_;
};

std::string fmt_ms(Duration d) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << d.ms();
    return os.str();
}

}  // namespace

std::string lane_of(const Timeline& tl, const Event& e) {
    if (e.rp >= 0 && static_cast<std::size_t>(e.rp) < tl.partition_ids.size())
        return "rp:" + tl.partition_ids[static_cast<std::size_t>(e.rp)];
    if (e.pipeline >= 0 && static_cast<std::size_t>(e.pipeline) < tl.pipeline_ids.size())
        return "pipeline:" + tl.pipeline_ids[static_cast<std::size_t>(e.pipeline)];
    if (e.kind == EventKind::CameraFrameCaptured) return "camera";
    return "round";
}

std::string render_gantt(const Timeline& tl, const GanttOptions& options) {
    Duration span = tl.round_quantum * (tl.rounds + 1);
    for (const auto& e : tl.events) span = std::max(span, e.time);
    const Canvas canvas(span, options.columns);

    std::vector<std::string> rp_lane(tl.partition_ids.size(), canvas.blank());
    std::vector<std::string> pipe_lane(tl.pipeline_ids.size(), canvas.blank());

    // Processing on a partition spans StageStarted to the stage's last frame.
    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    std::map<Key, std::pair<Duration, Duration>> busy;
    std::map<Key, std::int64_t> busy_rp;
    std::map<std::pair<std::int64_t, std::int64_t>, std::pair<Duration, Duration>> slice;
    std::map<Key, Duration> reconfig_start;
    std::vector<std::pair<Duration, Duration>> reconfigs;
    std::vector<std::int64_t> reconfig_rp;

    for (const auto& e : tl.events) {
        const Key key{e.round, e.pipeline, e.stage};
        switch (e.kind) {
        case EventKind::StageStarted:
            busy[key] = {e.time, e.time};
            busy_rp[key] = e.rp;
            break;
        case EventKind::StageFrameDone:
            busy[key].second = std::max(busy[key].second, e.time);
            break;
        case EventKind::ReconfigStart:
            reconfig_start[{e.round, e.pipeline, e.rp}] = e.time;
            break;
        case EventKind::ReconfigEnd:
            reconfigs.push_back({reconfig_start[{e.round, e.pipeline, e.rp}], e.time});
            reconfig_rp.push_back(e.rp);
            break;
        case EventKind::PipelineSwitch:
            slice[{e.round, e.pipeline}] = {e.time, e.time};
            break;
        case EventKind::PipelineFrameDone:
            slice[{e.round, e.pipeline}].second = std::max(slice[{e.round, e.pipeline}].second, e.time);
            break;
        default:
            break;
        }
    }
    for (const auto& [key, iv] : busy) {
        const auto rp = busy_rp[key];
        const auto pipe = std::get<1>(key);
        if (rp < 0 || static_cast<std::size_t>(rp) >= rp_lane.size()) continue;
        canvas.paint(rp_lane[static_cast<std::size_t>(rp)], iv.first, iv.second,
                     pipeline_letter(static_cast<std::size_t>(pipe)));
    }
    for (std::size_t i = 0; i < reconfigs.size(); ++i) {
        const auto rp = reconfig_rp[i];
        if (rp < 0 || static_cast<std::size_t>(rp) >= rp_lane.size()) continue;
        canvas.paint(rp_lane[static_cast<std::size_t>(rp)], reconfigs[i].first, reconfigs[i].second, 'R');
    }
    for (const auto& [key, iv] : slice) {
        const auto pipe = static_cast<std::size_t>(key.second);
        if (pipe < pipe_lane.size()) canvas.paint(pipe_lane[pipe], iv.first, iv.second, pipeline_letter(pipe));
    }

    std::string ruler(canvas.columns(), ' ');
    for (std::int64_t r = 0; r <= tl.rounds + 1; ++r) {
        const Duration t = tl.round_quantum * r;
        if (t <= span) ruler[canvas.column(t)] = '|';
    }
    for (const auto& g : tl.glitches) ruler[canvas.column(g.time)] = '!';

    std::vector<std::pair<std::string, std::string>> lanes;
    lanes.push_back({"rounds", ruler});
    for (std::size_t i = 0; i < rp_lane.size(); ++i) lanes.push_back({"rp:" + tl.partition_ids[i], rp_lane[i]});
    for (std::size_t i = 0; i < pipe_lane.size(); ++i)
        lanes.push_back({"pipeline:" + tl.pipeline_ids[i], pipe_lane[i]});
    std::size_t label = 0;
    for (const auto& l : lanes) label = std::max(label, l.first.size());

    std::ostringstream os;
    os << "mode " << to_string(tl.mode) << "  g=" << tl.params.g << " s=" << tl.params.s << "  quantum "
       << fmt_ms(tl.round_quantum) << " ms  span " << fmt_ms(span) << " ms  1 col = "
       << fmt_ms(Duration::from_ps(span.ps() / static_cast<std::int64_t>(canvas.columns()))) << " ms\n";
    for (const auto& [name, row] : lanes) os << std::left << std::setw(static_cast<int>(label)) << name << " " << row << '\n';
    os << "legend: R reconfiguring";
    for (std::size_t i = 0; i < tl.pipeline_ids.size(); ++i)
        os << ", " << pipeline_letter(i) << '=' << tl.pipeline_ids[i];
    os << ", . idle, | round boundary, ! deadline miss\n";
    os << "glitches " << tl.glitches.size() << '\n';
    return os.str();
}

void write_lane_records(std::ostream& os, const Timeline& tl) {
    using nlohmann::ordered_json;
    for (const auto& id : tl.partition_ids)
        os << ordered_json{{"record", "lane"}, {"lane", "rp:" + id}, {"kind", "partition"}}.dump() << '\n';
    for (const auto& id : tl.pipeline_ids)
        os << ordered_json{{"record", "lane"}, {"lane", "pipeline:" + id}, {"kind", "pipeline"}}.dump() << '\n';
    os << ordered_json{{"record", "lane"}, {"lane", "camera"}, {"kind", "camera"}}.dump() << '\n';
    os << ordered_json{{"record", "lane"}, {"lane", "round"}, {"kind", "round"}}.dump() << '\n';
    write_ndjson(os, tl, [&](const Event& e) { return lane_of(tl, e); });
}

}  // namespace dprshare
