#include <doctest.h>

#include <dprshare/render.hpp>

#include "helpers.hpp"

#include <sstream>

using namespace dprshare;
using testing_support::scenario_path;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::string lane(const std::string& chart, const std::string& name) {
    for (const auto& l : lines_of(chart))
        if (l.rfind(name + " ", 0) == 0) return l.substr(l.find_first_not_of(' ', name.size()));
    FAIL("lane not found: " << name);
    return {};
}

}  // namespace

TEST_CASE("staggered gantt shows processing overlapping reconfiguration") {
    const auto sc = load_scenario(scenario_path("staggered_overlap"));
    const auto tl = simulate(prepare_simulation(sc));
    const auto chart = render_gantt(tl, {120});
    const auto rp0 = lane(chart, "rp:rp0");
    const auto rp1 = lane(chart, "rp:rp1");
    REQUIRE(rp0.size() == rp1.size());
    bool overlap = false;
    for (std::size_t c = 0; c < rp0.size(); ++c) overlap |= rp0[c] == 'A' && rp1[c] == 'R';
    CHECK(overlap);
    CHECK(chart.find("pipeline:A") != std::string::npos);
    CHECK(chart.find("pipeline:B") != std::string::npos);
}

TEST_CASE("basic gantt never overlaps processing with reconfiguration within a slice") {
    auto sc = load_scenario(scenario_path("staggered_overlap"));
    sc.mode = ExecutionMode::Basic;
    const auto tl = simulate(prepare_simulation(sc));
    const auto chart = render_gantt(tl, {400});
    const auto rp0 = lane(chart, "rp:rp0");
    const auto rp2 = lane(chart, "rp:rp2");
    // A column may straddle the instant the last reconfiguration ends and processing begins.
    for (std::size_t c = 0; c + 1 < rp0.size(); ++c)
        if (rp0[c] == 'A' && rp2[c] == 'R') CHECK(rp2[c + 1] != 'R');
}

TEST_CASE("empty rounds render as idle lanes") {
    Scenario sc = testing_support::chain_scenario(VideoFormat::hd720p60(), 0, 3, 0, ExecutionMode::Basic);
    const auto tl = simulate(prepare_simulation(sc));
    const auto chart = render_gantt(tl, {40});
    for (const char* name : {"rp:rp0", "rp:rp1", "rp:rp2"}) CHECK(lane(chart, name) == std::string(40, '.'));
}

TEST_CASE("deadline misses are marked") {
    auto sc = testing_support::chain_scenario(VideoFormat::hd720p60(), 2, 6, 6, ExecutionMode::Basic);
    const auto tl = simulate(prepare_simulation(sc));
    CHECK(render_gantt(tl).find('!') != std::string::npos);
}

TEST_CASE("lane records round-trip to events") {
    const auto sc = load_scenario(scenario_path("staggered_overlap"));
    const auto tl = simulate(prepare_simulation(sc));
    std::stringstream ss;
    write_lane_records(ss, tl);
    const std::string text = ss.str();
    CHECK(text.find(R"({"record":"lane","lane":"rp:rp0","kind":"partition"})") != std::string::npos);
    CHECK(text.find(R"("lane":"pipeline:A")") != std::string::npos);
    std::stringstream in(text);
    CHECK(read_ndjson_events(in) == tl.events);
}

TEST_CASE("rendering is deterministic") {
    const auto sc = load_scenario(scenario_path("staggered_overlap"));
    const auto a = simulate(prepare_simulation(sc));
    const auto b = simulate(prepare_simulation(sc));
    CHECK(render_gantt(a) == render_gantt(b));
}

TEST_CASE("pipeline letters") {
    CHECK(pipeline_letter(0) == 'A');
    CHECK(pipeline_letter(27) == 'b');
    CHECK(pipeline_letter(99) == '#');
}
