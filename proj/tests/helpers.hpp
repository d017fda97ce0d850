#pragma once

#include <dprshare/scenario.hpp>

#include <string>

namespace testing_support {

using namespace dprshare;

// n linear pipelines of `stages` stages on `stages` partitions; the last k
// modules of every pipeline are private, the rest shared.
inline Scenario chain_scenario(VideoFormat format, int n, int stages, int k, ExecutionMode mode, std::int64_t g = 1,
                               std::int64_t s = 1, std::int64_t lines = 10) {
    Scenario sc;
    sc.name = "chain";
    sc.platform = PlatformSpec::zc706_small_rps(static_cast<std::size_t>(stages));
    sc.format = format;
    sc.mode = mode;
    sc.schedule = {g, s};
    sc.rounds = 3;
    for (int p = 0; p < n; ++p) {
        std::vector<std::string> mods;
        for (int i = 0; i < stages; ++i) {
            ModuleSpec m;
            m.id = i < stages - k ? "sh" + std::to_string(i) : "p" + std::to_string(p) + "x" + std::to_string(i);
            m.buffer_lines = lines;
            sc.modules[m.id] = m;
            mods.push_back(m.id);
        }
        sc.pipelines.push_back(PipelineSpec::linear("p" + std::to_string(p), mods));
    }
    return sc;
}

inline std::string scenario_path(const std::string& name) {
    return std::string(DPRSHARE_SCENARIO_DIR) + "/" + name + ".json";
}

}  // namespace testing_support
