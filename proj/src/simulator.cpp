#include "giph/simulator.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <string>
#include <tuple>

namespace giph {

bool SimTrace::has_queueing() const {
    return std::any_of(tasks.begin(), tasks.end(), [](const TaskTiming& t) { return t.t_start > t.t_runnable; });
}

double expected_compute_time(const ProblemInstance& instance, TaskId task, DeviceId device) {
    if (!instance.is_feasible(task, device)) {
        throw Error("device d" + std::to_string(device) + " cannot host task v" + std::to_string(task));
    }
    return instance.graph().task(task).compute / instance.network().device(device).speed;
}

double expected_comm_time(const ProblemInstance& instance, EdgeId edge, DeviceId src_device, DeviceId dst_device) {
    if (src_device == dst_device) return 0.0;
    const DataLink& e = instance.graph().edge(edge);
    const Link& link = instance.network().link(src_device, dst_device);
    return link.delay + e.bytes / link.bandwidth;
}

namespace {

double realize(double expected, double noise, Rng& rng) {
    if (noise == 0.0 || expected == 0.0) return expected;
    return rng.uniform(expected * (1.0 - noise), expected * (1.0 + noise));
}

struct QueuedEvent {
    SimEvent event;
    std::uint64_t seq = 0;

    // Min-heap order: time, kind priority, subject, insertion.
    bool operator>(const QueuedEvent& other) const {
        return std::tie(event.timestamp, event.kind, event.subject, seq) >
               std::tie(other.event.timestamp, other.event.kind, other.event.subject, other.seq);
    }
};

struct ReadyTask {
    double t_runnable;
    TaskId task;
    bool operator>(const ReadyTask& o) const { return std::tie(t_runnable, task) > std::tie(o.t_runnable, o.task); }
};

} // namespace

SimTrace simulate(const ProblemInstance& instance, const Placement& placement, const LatencyModel& model, Rng& rng) {
    require_feasible(instance, placement);
    if (!(model.noise >= 0.0 && model.noise < 1.0)) throw Error("noise must lie in [0, 1)");
    const TaskGraph& g = instance.graph();
    const std::size_t n = g.size();
    const std::size_t m = instance.network().size();

    SimTrace trace;
    trace.tasks.resize(n);
    trace.edges.resize(g.edge_count());
    for (TaskId i = 0; i < n; ++i) trace.tasks[i].device = placement[i];

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> events;
    std::uint64_t seq = 0;
    auto push = [&](double t, EventKind kind, std::size_t subject) {
        events.push(QueuedEvent{SimEvent{t, kind, subject}, seq++});
    };

    // Per-device FIFO keyed by (runnable time, task id).
    std::vector<std::priority_queue<ReadyTask, std::vector<ReadyTask>, std::greater<>>> queues(m);
    std::vector<bool> busy(m, false);
    std::vector<std::size_t> pending(n);
    for (TaskId i = 0; i < n; ++i) pending[i] = g.in_edges(i).size();

    auto dispatch = [&](DeviceId d, double t) {
        if (!busy[d] && !queues[d].empty()) {
            busy[d] = true;
            push(t, EventKind::TaskStart, d);
        }
    };

    for (TaskId i = 0; i < n; ++i) {
        if (pending[i] == 0) push(0.0, EventKind::TaskRunnable, i);
    }

    std::size_t done = 0;
    while (!events.empty()) {
        const SimEvent ev = events.top().event;
        events.pop();
        const double t = ev.timestamp;
        switch (ev.kind) {
        case EventKind::TaskRunnable: {
            const TaskId i = ev.subject;
            trace.tasks[i].t_runnable = t;
            queues[placement[i]].push(ReadyTask{t, i});
            dispatch(placement[i], t);
            break;
        }
        case EventKind::TaskStart: {
            const DeviceId d = ev.subject;
            const TaskId i = queues[d].top().task;
            queues[d].pop();
            trace.tasks[i].t_start = t;
            const double w = realize(g.task(i).compute / instance.network().device(d).speed, model.noise, rng);
            push(t + w, EventKind::TaskDone, i);
            break;
        }
        case EventKind::TaskDone: {
            const TaskId i = ev.subject;
            trace.tasks[i].t_done = t;
            ++done;
            busy[placement[i]] = false;
            for (EdgeId k : g.out_edges(i)) {
                trace.edges[k].t_tx_start = t;
                const double c = realize(expected_comm_time(instance, k, placement[i], placement[g.edge(k).dst]),
                                         model.noise, rng);
                push(t + c, EventKind::TxDone, k);
            }
            dispatch(placement[i], t);
            break;
        }
        case EventKind::TxDone: {
            const EdgeId k = ev.subject;
            trace.edges[k].t_tx_done = t;
            const TaskId j = g.edge(k).dst;
            if (--pending[j] == 0) push(t, EventKind::TaskRunnable, j);
            break;
        }
        }
    }
    if (done != n) throw Error("simulation stalled before every task finished");
    trace.makespan = trace.tasks[g.exit()].t_done - trace.tasks[g.entry()].t_start;
    return trace;
}

SimTrace simulate(const ProblemInstance& instance, const Placement& placement) {
    Rng unused(0);
    return simulate(instance, placement, LatencyModel{}, unused);
}

double path_makespan(const ProblemInstance& instance, const Placement& placement) {
    require_feasible(instance, placement);
    const TaskGraph& g = instance.graph();
    std::vector<double> finish(g.size(), 0.0);
    double best = 0.0;
    for (TaskId u : g.topological_order()) {
        double start = 0.0;
        for (EdgeId k : g.in_edges(u)) {
            const TaskId p = g.edge(k).src;
            start = std::max(start, finish[p] + expected_comm_time(instance, k, placement[p], placement[u]));
        }
        finish[u] = start + g.task(u).compute / instance.network().device(placement[u]).speed;
        best = std::max(best, finish[u]);
    }
    return best;
}

double slr(double makespan, const ProblemInstance& instance) {
    const double bound = instance.cp_min_bound();
    if (!(bound > 0.0)) throw Error("SLR undefined: critical-path lower bound is zero");
    return makespan / bound;
}

double total_cost(const ProblemInstance& instance, const Placement& placement) {
    require_feasible(instance, placement);
    const TaskGraph& g = instance.graph();
    double cost = 0.0;
    for (TaskId i = 0; i < g.size(); ++i) cost += g.task(i).compute / instance.network().device(placement[i]).speed;
    for (EdgeId k = 0; k < g.edge_count(); ++k) {
        cost += expected_comm_time(instance, k, placement[g.edge(k).src], placement[g.edge(k).dst]);
    }
    return cost;
}

Objective parse_objective(const std::string& name) {
    if (name == "makespan") return Objective::Makespan;
    if (name == "total_cost") return Objective::TotalCost;
    throw Error("unknown objective '" + name + "' (expected makespan or total_cost)");
}

const char* objective_name(Objective objective) {
    return objective == Objective::Makespan ? "makespan" : "total_cost";
}

double evaluate_objective(const ProblemInstance& instance, const Placement& placement, Objective objective,
                          const LatencyModel& model, Rng& rng) {
    if (objective == Objective::TotalCost) return total_cost(instance, placement);
    return simulate(instance, placement, model, rng).makespan;
}

double normalized_score(const ProblemInstance& instance, double objective_value, Objective objective) {
    return objective == Objective::Makespan ? slr(objective_value, instance) : objective_value;
}

nlohmann::json to_json(const SimTrace& trace, const TaskGraph& graph) {
    nlohmann::json tasks = nlohmann::json::array();
    for (TaskId i = 0; i < trace.tasks.size(); ++i) {
        const auto& t = trace.tasks[i];
        tasks.push_back({{"task", i},
                         {"device", t.device},
                         {"t_runnable", t.t_runnable},
                         {"t_start", t.t_start},
                         {"t_done", t.t_done}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (EdgeId k = 0; k < trace.edges.size(); ++k) {
        edges.push_back({{"src", graph.edge(k).src},
                         {"dst", graph.edge(k).dst},
                         {"t_tx_start", trace.edges[k].t_tx_start},
                         {"t_tx_done", trace.edges[k].t_tx_done}});
    }
    return {{"makespan", trace.makespan}, {"tasks", std::move(tasks)}, {"edges", std::move(edges)}};
}

} // namespace giph
