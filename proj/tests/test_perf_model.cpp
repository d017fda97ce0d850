#include <doctest.h>

#include <dprshare/perf_model.hpp>

#include "expected_values.hpp"

#include <vector>

using namespace dprshare;

namespace {

ModuleSpec module(const std::string& id, std::int64_t lines, std::int64_t ports = 1) {
    ModuleSpec m;
    m.id = id;
    m.buffer_lines = lines;
    m.in_ports = ports;
    m.out_ports = ports;
    return m;
}

struct Setup {
    PlatformSpec platform = PlatformSpec::zc706_small_rps();
    ModuleLibrary lib;
    Setup() {
        for (int i = 0; i < 12; ++i) {
            auto m = module("m" + std::to_string(i), 10);
            lib[m.id] = m;
        }
    }
};

PipelineLoad linear_load(const Setup& s, const VideoFormat& f, int stages, int reconfigs, const std::string& id) {
    std::vector<std::string> mods;
    for (int i = 0; i < stages; ++i) mods.push_back("m" + std::to_string(i));
    const auto p = PipelineSpec::linear(id, mods);
    std::vector<RPSpec> rps(s.platform.partitions.begin(), s.platform.partitions.begin() + reconfigs);
    return {slice_basic(p, s.lib, rps, f, s.platform), s.platform.switch_overhead};
}

}  // namespace

TEST_CASE("fill time") {
    const auto f = VideoFormat::hd1080p60();
    CHECK(fill_time(module("x", 10), f, Frequency::mhz(148.5)).ps() == expected::fill_1080_pixclk_ps);
    CHECK(fill_time(module("x", 0), f, Frequency::mhz(148.5)) == Duration::zero());
    CHECK(fill_time(module("x", 10), f, Frequency::mhz(200)).ps() == expected::fill_1080_stage_ps);
}

TEST_CASE("pipeline fill time is the longest path") {
    ModuleLibrary lib;
    for (auto m : {module("a", 10), module("b", 10), module("c", 10)}) lib[m.id] = m;
    const auto f = VideoFormat::hd1080p60();
    CHECK(pipeline_fill_time(PipelineSpec::linear("p", {"a", "b", "c"}), lib, f, Frequency::mhz(200)).ps() ==
          3 * expected::fill_1080_stage_ps);
    lib["z"] = module("z", 0);
    CHECK(pipeline_fill_time(PipelineSpec::linear("p", {"z"}), lib, f, Frequency::mhz(200)) == Duration::zero());

    for (auto m : {module("fork", 0, 3), module("join", 0, 3), module("w20", 20), module("w5", 5)}) lib[m.id] = m;
    PipelineSpec fj;
    fj.id = "fj";
    fj.stages = {{"f", "fork"}, {"x", "w5"}, {"y", "w20"}, {"z", "w5"}, {"j", "join"}};
    fj.edges = {{kCamera, "f"}, {"f", "x"}, {"f", "y"}, {"f", "z"},
                {"x", "j"},     {"y", "j"}, {"z", "j"}, {"j", kDisplay}};
    CHECK(pipeline_fill_time(fj, lib, f, Frequency::mhz(200)) == fill_time(lib["w20"], f, Frequency::mhz(200)));
}

TEST_CASE("reconfiguration time is linear in bitstream size") {
    const auto p = PlatformSpec::zc706_small_rps();
    RPSpec small;
    small.bitstream_bytes = {300'000};
    RPSpec large;
    large.bitstream_bytes = {1'100'000};
    CHECK(reconfig_time(small, p).ps() == expected::reconfig_300k_ps);
    CHECK(reconfig_time(large, p).seconds() == doctest::Approx(reconfig_time(small, p).seconds() * 11.0 / 3.0));
    RPSpec empty;
    empty.bitstream_bytes = {0};
    CHECK_THROWS_AS(reconfig_time(empty, p), ModelError);
}

TEST_CASE("basic slice components") {
    Setup s;
    const auto f720 = VideoFormat::hd720p60();
    const auto one = linear_load(s, f720, 3, 1, "p").slice;
    CHECK(one.t_config.ps() == expected::reconfig_300k_ps);
    CHECK(one.t_fill.ps() == 3 * expected::fill_720_stage_ps);
    CHECK(one.t_frame.ps() == expected::frame_720_ps);
    CHECK(one.basic_slice.ms() == doctest::Approx(7.144).epsilon(1e-3));

    const auto none = linear_load(s, f720, 3, 0, "p").slice;
    CHECK(none.basic_slice == none.t_fill + none.t_frame);

    const auto f1080 = VideoFormat::hd1080p60();
    const auto big = linear_load(s, f1080, 3, 0, "p").slice;
    CHECK(big.basic_slice.ms() == doctest::Approx(10.656).epsilon(1e-3));
    CHECK(big.basic_slice * 2 > round_quantum(f1080, {1, 1}));
}

TEST_CASE("staggered bounds") {
    SUBCASE("equal stages: tight lower bound is dominated by the last stage") {
        PipelineTiming t;
        t.pipeline_id = "eq";
        for (std::size_t i = 0; i < 3; ++i) t.stages.push_back({i, Duration::from_ms(0.1), Duration::from_ms(4.6)});
        t.fill = Duration::from_ms(0.3);
        t.frame = Duration::from_ms(4.6);
        const std::vector<Duration> cfg(3, Duration::from_ms(2.3));
        const auto e = estimate_slice(t, cfg);
        CHECK(e.staggered_lower_tight == Duration::from_ms(11.6));
        CHECK(e.staggered_lower_simple == Duration::from_ms(11.6));
        CHECK(e.staggered_upper == Duration::from_ms(6.9 + 0.3 + 4.6));
    }
    SUBCASE("single stage: all bounds coincide") {
        Setup s;
        const auto e = linear_load(s, VideoFormat::hd720p60(), 1, 1, "p").slice;
        CHECK(e.staggered_lower_simple == e.staggered_upper);
        CHECK(e.staggered_lower_tight == e.staggered_upper);
    }
    SUBCASE("a slow first stage dominates the tight bound") {
        PipelineTiming t;
        t.pipeline_id = "slow";
        t.stages = {{0, Duration::from_ms(0.1), Duration::from_ms(40)},
                    {1, Duration::from_ms(0.1), Duration::from_ms(1)},
                    {2, Duration::from_ms(0.1), Duration::from_ms(1)}};
        t.fill = Duration::from_ms(0.3);
        t.frame = Duration::from_ms(40);
        const std::vector<Duration> cfg(3, Duration::from_ms(2));
        const auto e = estimate_slice(t, cfg);
        CHECK(e.staggered_lower_tight == Duration::from_ms(2 + 0.1 + 40));
        CHECK(e.staggered_lower_simple == Duration::from_ms(6 + 0.1 + 1));
    }
    SUBCASE("a reused branch does not wait for its sibling's reconfiguration") {
        ModuleLibrary lib;
        for (auto m : {module("f", 0, 2), module("l", 10), module("r", 10), module("j", 0, 2)}) lib[m.id] = m;
        PipelineSpec p;
        p.id = "fj";
        p.stages = {{"f", "f"}, {"l", "l"}, {"r", "r"}, {"j", "j"}};
        p.edges = {{kCamera, "f"}, {"f", "l"}, {"f", "r"}, {"l", "j"}, {"r", "j"}, {"j", kDisplay}};
        const auto platform = PlatformSpec::zc706_small_rps();
        const std::vector<Duration> cfg = {Duration::zero(), Duration::from_ms(2), Duration::zero(), Duration::zero()};
        const auto e = slice_staggered_bounds(p, lib, cfg, VideoFormat::hd720p60(), platform);
        CHECK(e.terms[2].cumulative_config == Duration::zero());
        CHECK(e.terms[3].cumulative_config == Duration::from_ms(2));
    }
}

TEST_CASE("round quantum") {
    const auto f = VideoFormat::hd720p60();
    CHECK(round_quantum(f, {1, 1}).ms() == doctest::Approx(16.6667).epsilon(1e-4));
    CHECK(round_quantum(f, {2, 1}).ms() == doctest::Approx(33.3333).epsilon(1e-4));
    CHECK(round_quantum(f, {3, 2}) == Duration::from_ms(100));
}

TEST_CASE("amortized slice") {
    Setup s;
    const auto e = linear_load(s, VideoFormat::hd720p60(), 3, 1, "p").slice;
    CHECK(slice_amortized(e, 1) == e.basic_slice);
    CHECK(slice_amortized(e, 2).ms() == doctest::Approx(11.752).epsilon(1e-3));
    SliceEstimate z = e;
    z.t_frame = Duration::zero();
    CHECK(slice_amortized(z, 5) == slice_amortized(z, 1));
    CHECK_THROWS_AS(slice_amortized(e, 0), ModelError);
}

TEST_CASE("feasibility verdicts") {
    Setup s;
    const auto f720 = VideoFormat::hd720p60();
    const auto f1080 = VideoFormat::hd1080p60();

    std::vector<PipelineLoad> one = {linear_load(s, f720, 3, 1, "a"), linear_load(s, f720, 3, 1, "b")};
    auto r = check_feasibility(one, f720, {1, 1});
    CHECK(r.feasible);
    CHECK(r.effective_fps == 60.0);
    CHECK(r.slack == r.round_quantum - r.total);

    std::vector<PipelineLoad> two = {linear_load(s, f720, 6, 2, "a"), linear_load(s, f720, 6, 2, "b")};
    r = check_feasibility(two, f720, {1, 1});
    CHECK_FALSE(r.feasible);
    CHECK(r.effective_fps == 0.0);
    CHECK_FALSE(r.diagnosis.empty());
    r = check_feasibility(two, f720, {1, 2});
    CHECK(r.feasible);
    CHECK(r.effective_fps == 30.0);

    std::vector<PipelineLoad> hd = {linear_load(s, f1080, 3, 0, "a"), linear_load(s, f1080, 3, 0, "b")};
    for (std::int64_t g = 1; g <= 6; ++g) CHECK_FALSE(check_feasibility(hd, f1080, {g, 1}).feasible);
    CHECK(check_feasibility(hd, f1080, {1, 1}).diagnosis.find("only a larger s") != std::string::npos);
}

TEST_CASE("minimum downsample") {
    Setup s;
    const auto f720 = VideoFormat::hd720p60();
    const auto f1080 = VideoFormat::hd1080p60();
    std::vector<PipelineLoad> two = {linear_load(s, f720, 3, 1, "a"), linear_load(s, f720, 3, 1, "b")};
    CHECK(min_downsample(two, f720, 1) == 1);
    std::vector<PipelineLoad> three;
    for (const char* id : {"a", "b", "c"}) three.push_back(linear_load(s, f1080, 6, 1, id));
    CHECK(min_downsample(three, f1080, 1) == 3);
    CHECK(min_downsample({}, f1080, 1) == 1);
}

TEST_CASE("round totals match the oracle for two 720p pipelines") {
    Setup s;
    const auto f = VideoFormat::hd720p60();
    for (int k = 1; k <= 6; ++k) {
        std::vector<PipelineLoad> loads = {linear_load(s, f, 6, k, "a"), linear_load(s, f, 6, k, "b")};
        // Seven crossbar links per six-stage chain.
        for (auto& l : loads) l.switch_cost = s.platform.switch_overhead + s.platform.route_link_time * 7;
        for (int g = 1; g <= 3; ++g) {
            CAPTURE(k);
            CAPTURE(g);
            CHECK(check_feasibility(loads, f, {g, 1}).total.ps() == expected::total_720x2[k - 1][g - 1]);
            CHECK(min_downsample(loads, f, g) == expected::min_s_720x2[k - 1][g - 1]);
        }
    }
}
