#include <dprshare/assignment.hpp>

#include <dprshare/perf_model.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dprshare {

const char* to_string(ExecutionMode mode) { return mode == ExecutionMode::Basic ? "basic" : "staggered"; }

ExecutionMode parse_execution_mode(const std::string& text) {
    if (text == "basic") return ExecutionMode::Basic;
    if (text == "staggered") return ExecutionMode::Staggered;
    throw ModelError(ErrorKind::InvalidArgument, "unknown execution mode '" + text + "' (expected basic|staggered)");
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::SharedSink: return "shared-sink";
        case ViolationKind::DmaBudget: return "dma-budget";
        case ViolationKind::DramStreams: return "dram-streams";
        case ViolationKind::DramBandwidth: return "dram-bandwidth";
        case ViolationKind::UnknownPartition: return "unknown-partition";
    }
    return "unknown";
}

std::string to_string(const Endpoint& e, const PlatformSpec& platform) {
    auto rp_name = [&](std::size_t i) {
        return i < platform.partitions.size() ? platform.partitions[i].id : "rp#" + std::to_string(i);
    };
    switch (e.kind) {
        case EndpointKind::Camera: return "camera";
        case EndpointKind::Display: return "display";
        case EndpointKind::RpIn: return rp_name(e.rp) + ".in" + std::to_string(e.port);
        case EndpointKind::RpOut: return rp_name(e.rp) + ".out" + std::to_string(e.port);
    }
    return "?";
}

FabricState FabricState::empty(std::size_t partitions) {
    FabricState s;
    s.loaded.assign(partitions, std::nullopt);
    s.last_used.assign(partitions, 0);
    return s;
}

FabricState FabricState::from_platform(const PlatformSpec& platform) {
    FabricState s = empty(platform.partitions.size());
    for (std::size_t i = 0; i < platform.partitions.size(); ++i) s.loaded[i] = platform.partitions[i].loaded;
    return s;
}

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw ModelError(kind, msg); }

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
// Classic O(n^2 m) potentials formulation.
std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<std::int64_t>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost.front().size();
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(m + 1, kInf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

struct Problem {
    StageGraph graph;
    std::vector<const ModuleSpec*> modules;  // per stage
};

Problem prepare(const PipelineSpec& next, const ModuleLibrary& library, const PlatformSpec& platform) {
    Problem pr;
    pr.graph = validate_pipeline(next, library);
    const std::size_t n = next.stages.size();
    if (n > platform.partitions.size()) {
        std::ostringstream os;
        os << "pipeline '" << next.id << "' has " << n << " stages but the fabric has only "
           << platform.partitions.size() << " partitions";
        fail(ErrorKind::InsufficientPartitions, os.str());
    }
    for (const auto& st : next.stages) {
        const ModuleSpec& m = lookup_module(library, st.module);
        const bool fits = std::any_of(platform.partitions.begin(), platform.partitions.end(),
                                      [&](const RPSpec& rp) { return rp.can_host(m); });
        if (!fits) fail(ErrorKind::ModuleFitsNoPartition, "module '" + m.id + "' fits no partition");
        pr.modules.push_back(&m);
    }
    return pr;
}

TransitionPlan finish_plan(const FabricState& state, const PipelineSpec& next, const Problem& pr,
                           std::vector<std::size_t> assignment, const PlatformSpec& platform, ExecutionMode mode) {
    TransitionPlan plan;
    plan.pipeline_id = next.id;
    plan.assignment = std::move(assignment);
    std::vector<bool> reconfigured(next.stages.size(), false);
    for (std::size_t v : pr.graph.topo) {
        const std::size_t rp = plan.assignment[v];
        const auto& resident = state.loaded[rp];
        if (resident && *resident == next.stages[v].module) continue;
        reconfigured[v] = true;
        const Duration t = reconfig_time(platform.partitions[rp], platform);
        plan.reconfigure.push_back({rp, next.stages[v].module, v, t});
        plan.reconfig_time_total += t;
    }
    plan.routes = realize_routes(next, plan.assignment, reconfigured, mode);
    plan.route_config_time = platform.route_link_time * static_cast<std::int64_t>(plan.routes.size());
    return plan;
}

}  // namespace

std::vector<Route> realize_routes(const PipelineSpec& pipeline, std::span<const std::size_t> assignment,
                                  const std::vector<bool>& reconfigured, ExecutionMode mode) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < pipeline.stages.size(); ++i) index[pipeline.stages[i].id] = i;
    if (assignment.size() != pipeline.stages.size() || reconfigured.size() != pipeline.stages.size())
        fail(ErrorKind::UnassignedStage, "pipeline '" + pipeline.id + "': assignment does not cover every stage");

    std::vector<std::int64_t> next_in(pipeline.stages.size(), 0), next_out(pipeline.stages.size(), 0);
    std::vector<Route> routes;
    for (const auto& e : pipeline.edges) {
        Route r;
        r.from_stage = e.from;
        r.to_stage = e.to;
        std::optional<std::size_t> from, to;
        if (e.from == kCamera) {
            r.source = {EndpointKind::Camera, 0, 0};
        } else {
            from = index.at(e.from);
            r.source = {EndpointKind::RpOut, assignment[*from], next_out[*from]++};
        }
        if (e.to == kDisplay) {
            r.sink = {EndpointKind::Display, 0, 0};
        } else {
            to = index.at(e.to);
            r.sink = {EndpointKind::RpIn, assignment[*to], next_in[*to]++};
        }
        if (mode == ExecutionMode::Staggered && from && to && reconfigured[*to]) r.kind = RouteKind::ThruDram;
        routes.push_back(std::move(r));
    }
    return routes;
}

TransitionPlan plan_transition(const FabricState& state, const PipelineSpec& next, const ModuleLibrary& library,
                               const PlatformSpec& platform, ExecutionMode mode) {
    if (state.loaded.size() != platform.partitions.size())
        fail(ErrorKind::InvalidArgument, "fabric state does not match the platform's partitions");
    const Problem pr = prepare(next, library, platform);
    const std::size_t n = next.stages.size();
    const std::size_t m = platform.partitions.size();

    // Eviction rank: empty partitions first, then least recently used.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool ea = !state.loaded[a], eb = !state.loaded[b];
        if (ea != eb) return ea;
        return state.last_used[a] < state.last_used[b];
    });
    std::vector<std::int64_t> rank(m, 0);
    for (std::size_t k = 0; k < m; ++k) rank[order[k]] = state.loaded[order[k]] ? static_cast<std::int64_t>(k) + 1 : 0;

    // Lexicographic objective packed into one integer: count, then bytes, then eviction rank.
    constexpr std::int64_t kCount = std::int64_t{1} << 44;
    constexpr std::int64_t kInfeasible = std::int64_t{1} << 56;
    constexpr std::int64_t kMaxBytes = std::int64_t{1} << 30;
    if (m >= 64) fail(ErrorKind::InstanceTooLarge, "at most 63 partitions are supported");

    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(m, kInfeasible));
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t r = 0; r < m; ++r) {
            const RPSpec& rp = platform.partitions[r];
            if (!rp.can_host(*pr.modules[s])) continue;
            if (state.loaded[r] && *state.loaded[r] == pr.modules[s]->id) {
                cost[s][r] = 0;
                continue;
            }
            if (rp.bitstream_bytes.value >= kMaxBytes)
                fail(ErrorKind::InstanceTooLarge, "partition '" + rp.id + "' bitstream too large for the planner");
            cost[s][r] = kCount + rp.bitstream_bytes.value * 64 + rank[r];
        }
    }
    const auto assignment = min_cost_assignment(cost);
    for (std::size_t s = 0; s < n; ++s)
        if (cost[s][assignment[s]] >= kInfeasible)
            fail(ErrorKind::InsufficientPartitions,
                 "pipeline '" + next.id + "': no assignment satisfies every stage's capacity demand");
    return finish_plan(state, next, pr, assignment, platform, mode);
}

FabricState apply_transition(FabricState state, const TransitionPlan& plan) {
    ++state.tick;
    for (const auto& rc : plan.reconfigure) state.loaded.at(rc.rp) = rc.module;
    for (std::size_t rp : plan.assignment) state.last_used.at(rp) = state.tick;
    state.routes = plan.routes;
    return state;
}

namespace {

// Branch and bound over per-pipeline assignments for the cyclic steady state.
// Each partition accumulates the cyclic sequence of modules placed on it;
// the steady-state reconfiguration count of a partition is the number of
// cyclically adjacent unequal entries. Appending to a cyclic sequence never
// lowers that count, so partial cost is a valid lower bound.
class CyclicSearch {
public:
    CyclicSearch(std::span<const PipelineSpec> seq, const std::vector<Problem>& problems,
                 const PlatformSpec& platform, std::uint64_t budget)
        : seq_(seq), problems_(problems), platform_(platform), budget_(budget) {
        const std::size_t m = platform.partitions.size();
        seqs_.resize(m);
        weight_.resize(m);
        constexpr std::int64_t kCountScale = 4096;
        for (std::size_t r = 0; r < m; ++r)
            weight_[r] = platform.partitions[r].bitstream_bytes.value * kCountScale + 1;
        min_weight_ = *std::min_element(weight_.begin(), weight_.end());

        // Modules used by exactly one pipeline; their stages can only be placed
        // for free on an untouched partition.
        std::map<std::string, std::set<std::size_t>> users;
        for (std::size_t p = 0; p < seq.size(); ++p)
            for (const auto& st : seq[p].stages) users[st.module].insert(p);
        private_stages_.assign(seq.size(), 0);
        for (std::size_t p = 0; p < seq.size(); ++p)
            for (const auto& st : seq[p].stages)
                if (users[st.module].size() == 1) ++private_stages_[p];
        is_private_.resize(seq.size());
        for (std::size_t p = 0; p < seq.size(); ++p)
            for (std::size_t v : problems[p].graph.topo)
                is_private_[p].push_back(users[seq[p].stages[v].module].size() == 1);

        current_.resize(seq.size());
        for (std::size_t p = 0; p < seq.size(); ++p) current_[p].assign(seq[p].stages.size(), 0);
    }

    void seed(std::int64_t cost, std::vector<std::vector<std::size_t>> assignment) {
        best_cost_ = cost;
        best_ = std::move(assignment);
    }

    bool run() {
        if (seq_.empty()) return true;
        used_.assign(platform_.partitions.size(), false);
        remaining_private_ = std::accumulate(private_stages_.begin(), private_stages_.end(), std::int64_t{0});
        search(0, 0, 0);
        return !exhausted_;
    }

    std::int64_t best_cost() const { return best_cost_; }
    const std::vector<std::vector<std::size_t>>& best() const { return best_; }

private:
    std::int64_t untouched() const {
        return std::count_if(seqs_.begin(), seqs_.end(), [](const auto& s) { return s.empty(); });
    }

    std::int64_t delta(std::size_t r, const std::string& module) const {
        const auto& s = seqs_[r];
        if (s.empty()) return 0;
        const int d = (s.back() != module) + (module != s.front()) - (s.back() != s.front());
        return d * weight_[r];
    }

    void search(std::size_t p, std::size_t k, std::int64_t cost) {
        if (exhausted_) return;
        if (++nodes_ > budget_) { exhausted_ = true; return; }
        if (p == seq_.size()) {
            if (cost < best_cost_) { best_cost_ = cost; best_ = current_; }
            return;
        }
        const Problem& pr = problems_[p];
        if (k == pr.graph.topo.size()) {
            used_.assign(platform_.partitions.size(), false);
            search(p + 1, 0, cost);
            used_.assign(platform_.partitions.size(), false);
            for (std::size_t kk = 0; kk < k; ++kk) used_[current_[p][pr.graph.topo[kk]]] = true;
            return;
        }
        const std::size_t v = pr.graph.topo[k];
        const std::string& module = seq_[p].stages[v].module;
        const bool priv = is_private_[p][k];
        if (priv) --remaining_private_;

        // Candidate partitions, cheapest first; untouched identical partitions are interchangeable.
        std::vector<std::pair<std::int64_t, std::size_t>> cand;
        std::set<std::pair<std::int64_t, std::tuple<std::int64_t, std::int64_t, std::int64_t>>> seen_empty;
        for (std::size_t r = 0; r < platform_.partitions.size(); ++r) {
            if (used_[r] || !platform_.partitions[r].can_host(*pr.modules[v])) continue;
            if (seqs_[r].empty()) {
                const auto& rp = platform_.partitions[r];
                auto key = std::make_pair(rp.bitstream_bytes.value,
                                          std::make_tuple(rp.capacity.lut, rp.capacity.bram36, rp.capacity.dsp));
                if (!seen_empty.insert(key).second) continue;
            }
            cand.emplace_back(delta(r, module), r);
        }
        std::stable_sort(cand.begin(), cand.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [d, r] : cand) {
            const std::int64_t next_cost = cost + d;
            seqs_[r].push_back(module);
            used_[r] = true;
            const std::int64_t free_slots = untouched();
            const std::int64_t bound = next_cost + std::max<std::int64_t>(0, remaining_private_ - free_slots) * min_weight_;
            if (bound < best_cost_) {
                current_[p][v] = r;
                search(p, k + 1, next_cost);
            }
            used_[r] = false;
            seqs_[r].pop_back();
            if (exhausted_) break;
        }
        if (priv) ++remaining_private_;
    }

    std::span<const PipelineSpec> seq_;
    const std::vector<Problem>& problems_;
    const PlatformSpec& platform_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    bool exhausted_ = false;
    std::vector<std::vector<std::string>> seqs_;
    std::vector<std::int64_t> weight_;
    std::int64_t min_weight_ = 1;
    std::vector<std::int64_t> private_stages_;
    std::vector<std::vector<bool>> is_private_;  // per pipeline, per topo position
    std::int64_t remaining_private_ = 0;
    std::vector<bool> used_;
    std::vector<std::vector<std::size_t>> current_;
    std::vector<std::vector<std::size_t>> best_;
    std::int64_t best_cost_ = std::numeric_limits<std::int64_t>::max();
};

std::int64_t cyclic_cost(std::span<const PipelineSpec> seq, const std::vector<std::vector<std::size_t>>& assignment,
                         const PlatformSpec& platform) {
    std::vector<std::vector<std::string>> seqs(platform.partitions.size());
    for (std::size_t p = 0; p < seq.size(); ++p)
        for (std::size_t v = 0; v < seq[p].stages.size(); ++v) seqs[assignment[p][v]].push_back(seq[p].stages[v].module);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < seqs.size(); ++r) {
        const auto& s = seqs[r];
        if (s.size() < 2) continue;
        std::int64_t changes = 0;
        for (std::size_t i = 0; i < s.size(); ++i) changes += s[i] != s[(i + 1) % s.size()];
        total += changes * (platform.partitions[r].bitstream_bytes.value * 4096 + 1);
    }
    return total;
}

}  // namespace

RoundPlan plan_round(const FabricState& initial, std::span<const PipelineSpec> sequence,
                     const ModuleLibrary& library, const PlatformSpec& platform, ExecutionMode mode,
                     const RoundPlanOptions& options) {
    RoundPlan out;
    if (sequence.empty()) { out.optimal = true; return out; }
    std::vector<Problem> problems;
    for (const auto& p : sequence) problems.push_back(prepare(p, library, platform));

    // Greedy: run the per-transition planner for two passes and keep the
    // second pass's assignments as the steady-state choice.
    std::vector<std::vector<std::size_t>> greedy(sequence.size());
    {
        FabricState st = initial;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < sequence.size(); ++i) {
                auto plan = plan_transition(st, sequence[i], library, platform, mode);
                greedy[i] = plan.assignment;
                st = apply_transition(std::move(st), plan);
            }
    }
    std::vector<std::vector<std::size_t>> chosen = greedy;

    if (platform.partitions.size() <= options.exhaustive_max_partitions &&
        sequence.size() <= options.exhaustive_max_pipelines) {
        CyclicSearch search(sequence, problems, platform, options.node_budget);
        search.seed(cyclic_cost(sequence, greedy, platform), greedy);
        out.optimal = search.run();
        chosen = search.best();
    }

    // Prologue: apply the chosen assignments once from the initial contents.
    FabricState st = initial;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        auto plan = finish_plan(st, sequence[i], problems[i], chosen[i], platform, mode);
        st = apply_transition(std::move(st), plan);
        out.prologue.push_back(std::move(plan));
    }
    // The fabric now holds the steady state preceding sequence[0].
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        auto plan = finish_plan(st, sequence[i], problems[i], chosen[i], platform, mode);
        st = apply_transition(std::move(st), plan);
        out.cycle_reconfig_time += plan.reconfig_time_total;
        out.cycle_reconfig_count += plan.reconfigure.size();
        out.cycle.push_back(std::move(plan));
    }
    return out;
}

std::vector<TopologyViolation> validate_topology(std::span<const Route> routes, const PlatformSpec& platform,
                                                 const VideoFormat& format) {
    std::vector<TopologyViolation> out;
    std::map<Endpoint, std::vector<Endpoint>> drivers;
    std::int64_t thru_dram = 0;
    for (const auto& r : routes) {
        for (const Endpoint* e : {&r.source, &r.sink}) {
            if ((e->kind == EndpointKind::RpIn || e->kind == EndpointKind::RpOut) && e->rp >= platform.partitions.size())
                out.push_back({ViolationKind::UnknownPartition,
                               "route references partition #" + std::to_string(e->rp) + " which does not exist", {*e}});
        }
        drivers[r.sink].push_back(r.source);
        if (r.kind == RouteKind::ThruDram) ++thru_dram;
    }
    for (const auto& [sink, sources] : drivers) {
        if (sources.size() < 2) continue;
        std::ostringstream os;
        os << to_string(sink, platform) << " is driven by " << sources.size() << " sources:";
        for (const auto& s : sources) os << ' ' << to_string(s, platform);
        std::vector<Endpoint> eps{sink};
        eps.insert(eps.end(), sources.begin(), sources.end());
        out.push_back({ViolationKind::SharedSink, os.str(), eps});
    }
    if (thru_dram > platform.usable_decoupling_engines()) {
        std::ostringstream os;
        os << thru_dram << " thru-DRAM connections requested but only " << platform.usable_decoupling_engines()
           << " DMA engines remain after the camera and display double-buffers";
        std::vector<Endpoint> eps;
        for (const auto& r : routes)
            if (r.kind == RouteKind::ThruDram) eps.push_back(r.sink);
        out.push_back({ViolationKind::DmaBudget, os.str(), eps});
    }
    const std::int64_t streams = platform.reserved_dma_engines + thru_dram;
    if (streams > platform.max_dram_streams) {
        std::ostringstream os;
        os << streams << " concurrent DRAM streams exceed the ceiling of " << platform.max_dram_streams;
        out.push_back({ViolationKind::DramStreams, os.str(), {}});
    }
    const double demand = static_cast<double>(streams) * platform.per_stream_bandwidth(format).bytes_per_second;
    if (demand > platform.dram_bandwidth.bytes_per_second) {
        std::ostringstream os;
        os << "DRAM demand " << demand / 1e6 << " MB/s exceeds " << platform.dram_bandwidth.bytes_per_second / 1e6
           << " MB/s";
        out.push_back({ViolationKind::DramBandwidth, os.str(), {}});
    }
    return out;
}

std::size_t brute_force_min_reconfigs(const FabricState& state, const PipelineSpec& next,
                                      const ModuleLibrary& library, const PlatformSpec& platform) {
    const std::size_t m = platform.partitions.size();
    const std::size_t n = next.stages.size();
    if (m > 8 || n > 8) fail(ErrorKind::InstanceTooLarge, "brute force is limited to 8 partitions and 8 stages");
    if (n > m) fail(ErrorKind::InsufficientPartitions, "more stages than partitions");
    validate_pipeline(next, library);

    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::vector<bool> taken(m, false);
    std::size_t count = 0;
    // Plain recursive enumeration of all injective maps.
    auto rec = [&](auto&& self, std::size_t s) -> void {
        if (s == n) { best = std::min(best, count); return; }
        const ModuleSpec& mod = lookup_module(library, next.stages[s].module);
        for (std::size_t r = 0; r < m; ++r) {
            if (taken[r] || !platform.partitions[r].can_host(mod)) continue;
            const bool change = !(state.loaded[r] && *state.loaded[r] == mod.id);
            taken[r] = true;
            count += change;
            self(self, s + 1);
            count -= change;
            taken[r] = false;
        }
    };
    rec(rec, 0);
    if (best == std::numeric_limits<std::size_t>::max())
        fail(ErrorKind::InsufficientPartitions, "no valid assignment exists");
    return best;
}

}  // namespace dprshare
