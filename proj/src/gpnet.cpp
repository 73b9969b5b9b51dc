#include "giph/gpnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace giph {

namespace {

constexpr double kScaleEpsilon = 1e-6;

void link_adjacency(GpNet& net) {
    net.in_edges.assign(net.nodes.size(), {});
    net.out_edges.assign(net.nodes.size(), {});
    for (std::size_t k = 0; k < net.edges.size(); ++k) {
        net.out_edges[net.edges[k].src].push_back(k);
        net.in_edges[net.edges[k].dst].push_back(k);
    }
}

} // namespace

NodeFeatures GpNet::scaled_node(std::size_t u) const {
    NodeFeatures x = nodes[u].features;
    for (std::size_t c = 0; c < kNodeFeatureDim; ++c) x[c] /= node_scale[c];
    return x;
}

EdgeFeatures GpNet::scaled_edge(std::size_t k) const {
    EdgeFeatures x = edges[k].features;
    for (std::size_t c = 0; c < kEdgeFeatureDim; ++c) x[c] /= edge_scale[c];
    return x;
}

std::size_t GpNet::depth() const {
    std::vector<std::size_t> longest(nodes.size(), 1);
    std::size_t best = 0;
    for (std::size_t u : topo) {
        for (std::size_t k : out_edges[u]) longest[edges[k].dst] = std::max(longest[edges[k].dst], longest[u] + 1);
        best = std::max(best, longest[u]);
    }
    return best;
}

NodeFeatures compose_node_features(const ProblemInstance& instance, const Placement& placement, const SimTrace& trace,
                                   TaskId task, DeviceId device) {
    const double w = expected_compute_time(instance, task, device);
    const TaskGraph& g = instance.graph();
    double est = 0.0;
    for (EdgeId k : g.in_edges(task)) {
        const TaskId p = g.edge(k).src;
        est = std::max(est, trace.tasks[p].t_done + expected_comm_time(instance, k, placement[p], device));
    }
    return {g.task(task).compute, instance.network().device(device).speed, w, est - trace.tasks[task].t_start};
}

EdgeFeatures compose_edge_features(const ProblemInstance& instance, EdgeId edge, DeviceId src_device,
                                   DeviceId dst_device) {
    const auto& g = instance.graph();
    const double bytes = g.edge(edge).bytes;
    if (src_device == dst_device) return {bytes, instance.network().max_bandwidth(), 0.0, 0.0};
    const Link& link = instance.network().link(src_device, dst_device);
    return {bytes, link.bandwidth, link.delay, link.delay + bytes / link.bandwidth};
}

GpNet build_gpnet(const ProblemInstance& instance, const Placement& placement, const SimTrace& trace) {
    require_feasible(instance, placement);
    const TaskGraph& g = instance.graph();
    if (trace.tasks.size() != g.size() || trace.edges.size() != g.edge_count()) {
        throw Error("trace does not match the task graph");
    }
    for (TaskId i = 0; i < g.size(); ++i) {
        if (trace.tasks[i].device != placement[i]) {
            throw Error("trace places v" + std::to_string(i) + " on d" + std::to_string(trace.tasks[i].device) +
                        " but the placement uses d" + std::to_string(placement[i]));
        }
    }

    GpNet net;
    net.option_groups.resize(g.size());
    net.pivots.resize(g.size());
    for (TaskId i = 0; i < g.size(); ++i) {
        for (DeviceId d : instance.feasible(i)) {
            const std::size_t u = net.nodes.size();
            net.option_groups[i].push_back(u);
            const bool pivot = placement[i] == d;
            if (pivot) net.pivots[i] = u;
            net.nodes.push_back(GpNode{i, d, compose_node_features(instance, placement, trace, i, d), pivot});
        }
    }
    for (EdgeId k = 0; k < g.edge_count(); ++k) {
        const auto& e = g.edge(k);
        for (std::size_t u1 : net.option_groups[e.src]) {
            for (std::size_t u2 : net.option_groups[e.dst]) {
                if (!net.nodes[u1].is_pivot && !net.nodes[u2].is_pivot) continue;
                net.edges.push_back(
                    GpEdge{u1, u2, k, compose_edge_features(instance, k, net.nodes[u1].device, net.nodes[u2].device)});
            }
        }
    }
    link_adjacency(net);
    for (TaskId i : g.topological_order()) {
        for (std::size_t u : net.option_groups[i]) net.topo.push_back(u);
    }
    rescale_features(net);
    return net;
}

GpNet build_gpnet(const ProblemInstance& instance, const Placement& placement) {
    return build_gpnet(instance, placement, simulate(instance, placement));
}

GpNet pivot_subgraph(const GpNet& net) {
    GpNet sub;
    const std::size_t n = net.pivots.size();
    std::vector<std::size_t> remap(net.nodes.size(), n);
    for (TaskId i = 0; i < n; ++i) {
        remap[net.pivots[i]] = i;
        sub.nodes.push_back(net.nodes[net.pivots[i]]);
        sub.option_groups.push_back({i});
        sub.pivots.push_back(i);
    }
    for (const auto& e : net.edges) {
        if (remap[e.src] < n && remap[e.dst] < n) sub.edges.push_back(GpEdge{remap[e.src], remap[e.dst], e.task_edge, e.features});
    }
    link_adjacency(sub);
    for (std::size_t u : net.topo) {
        if (remap[u] < n) sub.topo.push_back(remap[u]);
    }
    rescale_features(sub);
    return sub;
}

void rescale_features(GpNet& net) {
    NodeFeatures node_mean{};
    for (const auto& node : net.nodes) {
        for (std::size_t c = 0; c < kNodeFeatureDim; ++c) node_mean[c] += std::abs(node.features[c]);
    }
    for (std::size_t c = 0; c < kNodeFeatureDim; ++c) {
        net.node_scale[c] = (net.nodes.empty() ? 0.0 : node_mean[c] / static_cast<double>(net.nodes.size())) + kScaleEpsilon;
    }
    EdgeFeatures edge_mean{};
    for (const auto& edge : net.edges) {
        for (std::size_t c = 0; c < kEdgeFeatureDim; ++c) edge_mean[c] += std::abs(edge.features[c]);
    }
    for (std::size_t c = 0; c < kEdgeFeatureDim; ++c) {
        net.edge_scale[c] = (net.edges.empty() ? 0.0 : edge_mean[c] / static_cast<double>(net.edges.size())) + kScaleEpsilon;
    }
}

nlohmann::json to_json(const GpNet& net) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : net.nodes) {
        nodes.push_back({{"task", n.task}, {"device", n.device}, {"pivot", n.is_pivot}, {"features", n.features}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : net.edges) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"task_edge", e.task_edge}, {"features", e.features}});
    }
    return {{"nodes", std::move(nodes)},
            {"edges", std::move(edges)},
            {"node_scale", net.node_scale},
            {"edge_scale", net.edge_scale}};
}

} // namespace giph
