#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "giph/domain.hpp"
#include "giph/simulator.hpp"

namespace giph {

inline constexpr std::size_t kNodeFeatureDim = 4;
inline constexpr std::size_t kEdgeFeatureDim = 4;

using NodeFeatures = std::array<double, kNodeFeatureDim>;
using EdgeFeatures = std::array<double, kEdgeFeatureDim>;

struct GpNode {
    TaskId task = 0;
    DeviceId device = 0;
    NodeFeatures features{};  // (C_i, SP_k, w_ik, start-time potential)
    bool is_pivot = false;
};

struct GpEdge {
    std::size_t src = 0;  // node index
    std::size_t dst = 0;
    EdgeId task_edge = 0;
    EdgeFeatures features{};  // (B_ij, BW_kl, DL_kl, c_ij,kl)
};

// Placement graph: one node per feasible (task, device) option, edges between
// options of dependent tasks whenever one endpoint belongs to the current
// placement (a pivot). Node order matches the action order of the search
// environment: ascending task id, then ascending device id.
struct GpNet {
    std::vector<GpNode> nodes;
    std::vector<GpEdge> edges;
    std::vector<std::vector<std::size_t>> option_groups;  // O_i, indexed by task
    std::vector<std::size_t> pivots;                      // pivot node per task
    std::vector<std::vector<std::size_t>> in_edges;       // per node
    std::vector<std::vector<std::size_t>> out_edges;      // per node
    std::vector<std::size_t> topo;                        // node topological order

    // Per-channel divisors applied before the features enter the network.
    NodeFeatures node_scale{1.0, 1.0, 1.0, 1.0};
    EdgeFeatures edge_scale{1.0, 1.0, 1.0, 1.0};

    std::size_t size() const { return nodes.size(); }
    NodeFeatures scaled_node(std::size_t u) const;
    EdgeFeatures scaled_edge(std::size_t k) const;
    std::size_t depth() const;
};

/// (C_i, SP_k, w_ik, EST_ik - t_start_i) for task i on device k given the
/// trace of the current placement.
NodeFeatures compose_node_features(const ProblemInstance& instance, const Placement& placement, const SimTrace& trace,
                                   TaskId task, DeviceId device);

/// (B_ij, BW_kl, DL_kl, c_ij,kl). Co-located endpoints carry the network's
/// largest finite bandwidth, zero delay and zero cost.
EdgeFeatures compose_edge_features(const ProblemInstance& instance, EdgeId edge, DeviceId src_device,
                                   DeviceId dst_device);

/// `trace` must come from a noise-free simulation of `placement`.
GpNet build_gpnet(const ProblemInstance& instance, const Placement& placement, const SimTrace& trace);
/// Simulates the placement noise-free and builds its gpNet.
GpNet build_gpnet(const ProblemInstance& instance, const Placement& placement);

/// Subgraph induced by the pivots: one node per task, isomorphic to the task
/// graph. Node i corresponds to task i.
GpNet pivot_subgraph(const GpNet& net);

/// Divides each channel by its mean magnitude over the graph.
void rescale_features(GpNet& net);

nlohmann::json to_json(const GpNet& net);

} // namespace giph
