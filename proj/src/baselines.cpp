#include "giph/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace giph {

double Schedule::makespan() const {
    double end = 0.0;
    for (const auto& t : tasks) end = std::max(end, t.finish);
    return end;
}

namespace {

struct Slot {
    double start;
    double finish;
};

// Earliest start >= ready on a device whose busy intervals are sorted.
double earliest_start(const std::vector<Slot>& busy, double ready, double duration, bool insertion) {
    if (!insertion) return busy.empty() ? ready : std::max(ready, busy.back().finish);
    double candidate = ready;
    for (const auto& s : busy) {
        if (candidate + duration <= s.start) return candidate;
        candidate = std::max(candidate, s.finish);
    }
    return candidate;
}

} // namespace

HeftResult heft(const ProblemInstance& instance, HeftOptions options) {
    const TaskGraph& g = instance.graph();
    const std::size_t n = g.size();

    std::vector<double> mean_w(n, 0.0);
    for (TaskId i = 0; i < n; ++i) {
        for (DeviceId d : instance.feasible(i)) mean_w[i] += expected_compute_time(instance, i, d);
        mean_w[i] /= static_cast<double>(instance.feasible(i).size());
    }
    std::vector<double> mean_c(g.edge_count(), 0.0);
    for (EdgeId k = 0; k < g.edge_count(); ++k) {
        const auto& src = instance.feasible(g.edge(k).src);
        const auto& dst = instance.feasible(g.edge(k).dst);
        for (DeviceId a : src) {
            for (DeviceId b : dst) mean_c[k] += expected_comm_time(instance, k, a, b);
        }
        mean_c[k] /= static_cast<double>(src.size() * dst.size());
    }

    HeftResult result;
    result.upward_rank.assign(n, 0.0);
    const auto& topo = g.topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        double tail = 0.0;
        for (EdgeId k : g.out_edges(*it)) tail = std::max(tail, mean_c[k] + result.upward_rank[g.edge(k).dst]);
        result.upward_rank[*it] = mean_w[*it] + tail;
    }
    std::vector<std::size_t> topo_pos(n);
    for (std::size_t p = 0; p < n; ++p) topo_pos[topo[p]] = p;
    std::vector<TaskId> order(topo.begin(), topo.end());
    std::stable_sort(order.begin(), order.end(), [&](TaskId a, TaskId b) {
        if (result.upward_rank[a] != result.upward_rank[b]) return result.upward_rank[a] > result.upward_rank[b];
        return topo_pos[a] < topo_pos[b];
    });

    std::vector<std::vector<Slot>> busy(instance.network().size());
    result.schedule.tasks.assign(n, {});
    result.placement.assignment.assign(n, 0);
    std::vector<bool> done(n, false);
    for (TaskId i : order) {
        double best_finish = std::numeric_limits<double>::infinity();
        double best_start = 0.0;
        DeviceId best_device = 0;
        for (DeviceId d : instance.feasible(i)) {
            double ready = 0.0;
            for (EdgeId k : g.in_edges(i)) {
                const TaskId p = g.edge(k).src;
                if (!done[p]) throw Error("HEFT priority order visited v" + std::to_string(i) + " before its parent");
                ready = std::max(ready, result.schedule.tasks[p].finish +
                                            expected_comm_time(instance, k, result.placement[p], d));
            }
            const double w = expected_compute_time(instance, i, d);
            const double start = earliest_start(busy[d], ready, w, options.insertion);
            if (start + w < best_finish) {
                best_finish = start + w;
                best_start = start;
                best_device = d;
            }
        }
        result.placement[i] = best_device;
        result.schedule.tasks[i] = ScheduledTask{best_device, best_start, best_finish};
        auto& slots = busy[best_device];
        slots.insert(std::upper_bound(slots.begin(), slots.end(), best_start,
                                      [](double s, const Slot& slot) { return s < slot.start; }),
                     Slot{best_start, best_finish});
        done[i] = true;
    }
    return result;
}

EftContext EftContext::from_trace(const Placement& placement, const SimTrace& trace) {
    EftContext ctx;
    ctx.device.assign(placement.size(), std::nullopt);
    ctx.finish.assign(placement.size(), 0.0);
    for (TaskId i = 0; i < placement.size(); ++i) {
        ctx.device[i] = placement[i];
        ctx.finish[i] = trace.tasks.at(i).t_done;
    }
    return ctx;
}

double eft_estimate(const ProblemInstance& instance, const EftContext& context, TaskId task, DeviceId device) {
    const TaskGraph& g = instance.graph();
    double ready = 0.0;
    for (EdgeId k : g.in_edges(task)) {
        const TaskId p = g.edge(k).src;
        if (p >= context.device.size() || !context.device[p]) {
            throw Error("EFT for v" + std::to_string(task) + " needs parent v" + std::to_string(p) + " placed");
        }
        ready = std::max(ready, context.finish[p] + expected_comm_time(instance, k, *context.device[p], device));
    }
    return ready + expected_compute_time(instance, task, device);
}

DeviceId eft_device(const ProblemInstance& instance, const EftContext& context, TaskId task) {
    if (task >= instance.graph().size()) throw Error("unknown task id v" + std::to_string(task));
    double best = std::numeric_limits<double>::infinity();
    DeviceId choice = instance.feasible(task).front();
    for (DeviceId d : instance.feasible(task)) {
        const double finish = eft_estimate(instance, context, task, d);
        if (finish < best) {
            best = finish;
            choice = d;
        }
    }
    return choice;
}

Action RandomTaskEftPolicy::choose(const SearchState& state, Rng& rng, PolicyContext*) {
    const TaskId task = rng.below(state.instance->graph().size());
    return Action{task, eft_device(*state.instance, EftContext::from_trace(state.placement, state.trace), task)};
}

std::vector<bool> TaskSelectEftPolicy::task_mask(const SearchState& state) {
    std::vector<bool> mask(state.instance->graph().size(), false);
    if (state.last_moved) mask[*state.last_moved] = true;
    return mask;
}

Action TaskSelectEftPolicy::choose(const SearchState& state, Rng& rng, PolicyContext* context) {
    auto net = std::make_shared<GpNet>(pivot_subgraph(build_gpnet(*state.instance, state.placement, state.trace)));
    auto pass = std::make_shared<ForwardPass>(forward(*net, *params_, config_));
    std::vector<double> probs;
    const std::size_t task = sample_masked(pass->scores, task_mask(state), greedy_, rng, probs);
    const Action action{task, eft_device(*state.instance, EftContext::from_trace(state.placement, state.trace), task)};
    if (context) {
        context->net = std::move(net);
        context->pass = std::move(pass);
        context->probs = std::move(probs);
        context->choice = task;
    }
    return action;
}

Episode random_task_eft_search(const ProblemInstance& instance, const Placement& initial, std::size_t T,
                               const EnvConfig& config, Rng& rng) {
    if (T == 0) {
        Episode ep;
        SearchState s = initial_state(instance, initial, config, rng);
        ep.initial = ep.best = initial;
        ep.initial_objective = ep.best_objective = s.objective;
        ep.best_curve = {s.objective};
        return ep;
    }
    RandomTaskEftPolicy policy;
    return run_episode(instance, initial, policy, T, config, rng);
}

Episode random_sampling_search(const ProblemInstance& instance, const Placement& initial, std::size_t budget,
                               const EnvConfig& config, Rng& rng) {
    Episode ep;
    ep.initial = initial;
    ep.best = initial;
    ep.initial_objective = evaluate_objective(instance, initial, config.objective, config.noise, rng);
    ep.best_objective = ep.initial_objective;
    ep.best_curve.push_back(ep.best_objective);
    for (std::size_t t = 0; t < budget; ++t) {
        Placement p = random_placement(instance, rng);
        const double value = evaluate_objective(instance, p, config.objective, config.noise, rng);
        if (value < ep.best_objective) {
            ep.best_objective = value;
            ep.best = p;
        }
        StepRecord rec;
        rec.t = t;
        rec.objective = value;
        rec.best = ep.best_objective;
        ep.steps.push_back(std::move(rec));
        ep.best_curve.push_back(ep.best_objective);
    }
    return ep;
}

namespace {

// Placement for a mixed-radix index; task 0 is the most significant digit so
// index order equals lexicographic assignment order.
Placement decode(const ProblemInstance& instance, std::size_t index) {
    const std::size_t n = instance.graph().size();
    Placement p;
    p.assignment.resize(n);
    for (std::size_t i = n; i-- > 0;) {
        const auto& set = instance.feasible(i);
        p[i] = set[index % set.size()];
        index /= set.size();
    }
    return p;
}

} // namespace

BruteForceResult brute_force_optimal(const ProblemInstance& instance, Execution mode) {
    const double states = instance.state_count();
    if (states > kBruteForceLimit) {
        throw Error("state space of " + std::to_string(static_cast<long long>(states)) +
                    " placements exceeds the brute-force limit");
    }
    const auto count = static_cast<std::size_t>(states);
    BruteForceResult best;
    best.makespan = std::numeric_limits<double>::infinity();
    best.evaluated = count;

    if (mode == Execution::Serial) {
        std::size_t best_index = 0;
        for (std::size_t idx = 0; idx < count; ++idx) {
            const double ms = simulate(instance, decode(instance, idx)).makespan;
            if (ms < best.makespan) {
                best.makespan = ms;
                best_index = idx;
            }
        }
        best.placement = decode(instance, best_index);
        return best;
    }

    // Each worker scans a contiguous shard; shards merge by (makespan, index).
    const std::size_t workers = static_cast<std::size_t>(std::max(1, worker_count()));
    const std::size_t shards = std::min(count, workers * 4);
    std::vector<double> shard_best(shards, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> shard_index(shards, 0);
    parallel_for(shards, Execution::Parallel, [&](std::size_t s) {
        const std::size_t lo = count * s / shards;
        const std::size_t hi = count * (s + 1) / shards;
        for (std::size_t idx = lo; idx < hi; ++idx) {
            const double ms = simulate(instance, decode(instance, idx)).makespan;
            if (ms < shard_best[s]) {
                shard_best[s] = ms;
                shard_index[s] = idx;
            }
        }
    });
    std::size_t best_index = 0;
    for (std::size_t s = 0; s < shards; ++s) {
        if (shard_best[s] < best.makespan) {
            best.makespan = shard_best[s];
            best_index = shard_index[s];
        }
    }
    best.placement = decode(instance, best_index);
    return best;
}

} // namespace giph
