#include "giph/domain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <string>

namespace giph {

namespace {

std::string edge_name(TaskId src, TaskId dst) {
    return "v" + std::to_string(src) + "->v" + std::to_string(dst);
}

// Locates an edge closing a cycle among the tasks Kahn's algorithm could not
// order.
std::string find_back_edge(std::size_t n, std::span<const DataLink> edges, const std::vector<bool>& ordered) {
    std::vector<std::vector<TaskId>> succ(n);
    for (const auto& e : edges) {
        if (!ordered[e.src] && !ordered[e.dst]) succ[e.src].push_back(e.dst);
    }
    for (auto& s : succ) std::sort(s.begin(), s.end());
    std::vector<int> color(n, 0);  // 0 white, 1 on stack, 2 done
    for (TaskId root = 0; root < n; ++root) {
        if (ordered[root] || color[root] != 0) continue;
        std::vector<std::pair<TaskId, std::size_t>> stack{{root, 0}};
        color[root] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < succ[u].size()) {
                const TaskId v = succ[u][next++];
                if (color[v] == 1) return edge_name(u, v);
                if (color[v] == 0) {
                    color[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                color[u] = 2;
                stack.pop_back();
            }
        }
    }
    return "unknown edge";
}

} // namespace

std::vector<TaskId> topological_order(std::size_t task_count, std::span<const DataLink> edges) {
    std::vector<std::size_t> indegree(task_count, 0);
    std::vector<std::vector<TaskId>> succ(task_count);
    for (const auto& e : edges) {
        if (e.src >= task_count || e.dst >= task_count) {
            throw Error("edge " + edge_name(e.src, e.dst) + " references an unknown task");
        }
        succ[e.src].push_back(e.dst);
        ++indegree[e.dst];
    }
    std::priority_queue<TaskId, std::vector<TaskId>, std::greater<>> ready;
    for (TaskId i = 0; i < task_count; ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::vector<TaskId> order;
    order.reserve(task_count);
    std::vector<bool> ordered(task_count, false);
    while (!ready.empty()) {
        const TaskId u = ready.top();
        ready.pop();
        order.push_back(u);
        ordered[u] = true;
        for (TaskId v : succ[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    if (order.size() != task_count) {
        throw Error("task graph has a cycle through back edge " + find_back_edge(task_count, edges, ordered));
    }
    return order;
}

TaskGraph::TaskGraph(std::vector<Task> tasks, std::vector<DataLink> edges)
    : tasks_(std::move(tasks)), edges_(std::move(edges)) {
    if (tasks_.empty()) throw Error("task graph has no tasks");
    std::sort(tasks_.begin(), tasks_.end(), [](const Task& a, const Task& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (tasks_[i].id != i) throw Error("task ids must be dense and 0-based; missing v" + std::to_string(i));
        if (!(tasks_[i].compute >= 0.0) || !std::isfinite(tasks_[i].compute)) {
            throw Error("task v" + std::to_string(i) + " has invalid compute requirement");
        }
    }
    std::set<std::pair<TaskId, TaskId>> seen;
    for (const auto& e : edges_) {
        if (e.src >= tasks_.size() || e.dst >= tasks_.size()) {
            throw Error("edge " + edge_name(e.src, e.dst) + " references an unknown task");
        }
        if (e.src == e.dst) throw Error("self-loop on v" + std::to_string(e.src));
        if (!seen.emplace(e.src, e.dst).second) throw Error("duplicate edge " + edge_name(e.src, e.dst));
        if (!(e.bytes >= 0.0) || !std::isfinite(e.bytes)) {
            throw Error("edge " + edge_name(e.src, e.dst) + " has invalid data volume");
        }
    }
    // Cycle check before any normalization.
    (void)giph::topological_order(tasks_.size(), edges_);

    first_pseudo_ = tasks_.size();
    const std::size_t n = tasks_.size();
    std::vector<bool> has_parent(n, false), has_child(n, false);
    for (const auto& e : edges_) {
        has_parent[e.dst] = true;
        has_child[e.src] = true;
    }
    std::vector<TaskId> sources, sinks;
    for (TaskId i = 0; i < n; ++i) {
        if (!has_parent[i]) sources.push_back(i);
        if (!has_child[i]) sinks.push_back(i);
    }
    if (sources.size() > 1) {
        const TaskId entry = tasks_.size();
        tasks_.push_back(Task{entry, 0.0, kUniversalTag});
        for (TaskId s : sources) edges_.push_back(DataLink{entry, s, 0.0});
    }
    if (sinks.size() > 1) {
        const TaskId exit = tasks_.size();
        tasks_.push_back(Task{exit, 0.0, kUniversalTag});
        for (TaskId s : sinks) edges_.push_back(DataLink{s, exit, 0.0});
    }

    in_.assign(tasks_.size(), {});
    out_.assign(tasks_.size(), {});
    for (EdgeId k = 0; k < edges_.size(); ++k) {
        out_[edges_[k].src].push_back(k);
        in_[edges_[k].dst].push_back(k);
    }
    topo_ = giph::topological_order(tasks_.size(), edges_);
    entry_ = topo_.front();
    exit_ = topo_.back();
}

std::size_t TaskGraph::depth() const {
    std::vector<std::size_t> longest(size(), 1);
    std::size_t best = 0;
    for (TaskId u : topo_) {
        for (EdgeId k : out_[u]) {
            const TaskId v = edges_[k].dst;
            longest[v] = std::max(longest[v], longest[u] + 1);
        }
        best = std::max(best, longest[u]);
    }
    return best;
}

DeviceNetwork::DeviceNetwork(std::vector<Device> devices, std::vector<Link> links)
    : devices_(std::move(devices)), links_(std::move(links)) {
    const std::size_t m = devices_.size();
    if (m == 0) throw Error("device network has no devices");
    std::sort(devices_.begin(), devices_.end(), [](const Device& a, const Device& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < m; ++k) {
        auto& d = devices_[k];
        if (d.id != k) throw Error("device ids must be dense and 0-based; missing d" + std::to_string(k));
        if (!(d.speed > 0.0) || !std::isfinite(d.speed)) {
            throw Error("device d" + std::to_string(k) + " has non-positive speed");
        }
        std::sort(d.hw_support.begin(), d.hw_support.end());
        d.hw_support.erase(std::unique(d.hw_support.begin(), d.hw_support.end()), d.hw_support.end());
    }
    if (links_.size() != m * m) throw Error("link matrix must have |D|^2 entries");
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < m; ++l) {
            Link& link = links_[k * m + l];
            if (k == l) {
                link = Link{};
                continue;
            }
            link.is_local = false;
            if (!(link.bandwidth > 0.0) || !std::isfinite(link.bandwidth)) {
                throw Error("link d" + std::to_string(k) + "->d" + std::to_string(l) + " has non-positive bandwidth");
            }
            if (!(link.delay >= 0.0) || !std::isfinite(link.delay)) {
                throw Error("link d" + std::to_string(k) + "->d" + std::to_string(l) + " has negative delay");
            }
        }
    }
}

bool DeviceNetwork::supports(DeviceId id, HwTag tag) const {
    if (tag == kUniversalTag) return true;
    const auto& tags = devices_.at(id).hw_support;
    return std::binary_search(tags.begin(), tags.end(), tag);
}

double DeviceNetwork::max_bandwidth() const {
    double best = 0.0;
    for (const auto& l : links_) {
        if (!l.is_local) best = std::max(best, l.bandwidth);
    }
    return best > 0.0 ? best : 1.0;
}

ProblemInstance::ProblemInstance(std::shared_ptr<const TaskGraph> graph, std::shared_ptr<const DeviceNetwork> network)
    : graph_(std::move(graph)), network_(std::move(network)) {
    init();
}

ProblemInstance::ProblemInstance(TaskGraph graph, DeviceNetwork network)
    : graph_(std::make_shared<const TaskGraph>(std::move(graph))),
      network_(std::make_shared<const DeviceNetwork>(std::move(network))) {
    init();
}

void ProblemInstance::init() {
    if (!graph_ || !network_) throw Error("problem instance needs both a graph and a network");
    const auto& g = *graph_;
    const auto& net = *network_;
    feasible_.assign(g.size(), {});
    for (const auto& task : g.tasks()) {
        for (DeviceId d = 0; d < net.size(); ++d) {
            if (net.supports(d, task.hw_req)) feasible_[task.id].push_back(d);
        }
        if (feasible_[task.id].empty()) {
            throw Error("task v" + std::to_string(task.id) + " requires hardware tag " + std::to_string(task.hw_req) +
                        " which no device supports");
        }
        action_count_ += feasible_[task.id].size();
    }

    std::vector<double> finish(g.size(), 0.0);
    for (TaskId u : g.topological_order()) {
        double start = 0.0;
        for (EdgeId k : g.in_edges(u)) start = std::max(start, finish[g.edge(k).src]);
        double fastest = std::numeric_limits<double>::infinity();
        for (DeviceId d : feasible_[u]) fastest = std::min(fastest, g.task(u).compute / net.device(d).speed);
        finish[u] = start + fastest;
        cp_min_bound_ = std::max(cp_min_bound_, finish[u]);
    }
}

bool ProblemInstance::is_feasible(TaskId task, DeviceId device) const {
    const auto& set = feasible_.at(task);
    return std::binary_search(set.begin(), set.end(), device);
}

bool ProblemInstance::is_feasible(const Placement& placement) const {
    if (placement.size() != graph_->size()) return false;
    for (TaskId i = 0; i < placement.size(); ++i) {
        if (!is_feasible(i, placement[i])) return false;
    }
    return true;
}

double ProblemInstance::state_count() const {
    double count = 1.0;
    for (const auto& set : feasible_) count *= static_cast<double>(set.size());
    return count;
}

const std::vector<DeviceId>& feasible_devices(const ProblemInstance& instance, TaskId task) {
    if (task >= instance.graph().size()) throw Error("unknown task id v" + std::to_string(task));
    return instance.feasible(task);
}

Placement random_placement(const ProblemInstance& instance, Rng& rng) {
    Placement p;
    p.assignment.resize(instance.graph().size());
    for (TaskId i = 0; i < p.size(); ++i) {
        const auto& set = instance.feasible(i);
        p[i] = set[rng.below(set.size())];
    }
    return p;
}

void require_feasible(const ProblemInstance& instance, const Placement& placement) {
    if (placement.size() != instance.graph().size()) {
        throw Error("placement covers " + std::to_string(placement.size()) + " tasks, graph has " +
                    std::to_string(instance.graph().size()));
    }
    for (TaskId i = 0; i < placement.size(); ++i) {
        if (!instance.is_feasible(i, placement[i])) {
            throw Error("infeasible placement: v" + std::to_string(i) + " on d" + std::to_string(placement[i]));
        }
    }
}

} // namespace giph
