#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "giph/error.hpp"
#include "giph/rng.hpp"

namespace giph {

using TaskId = std::size_t;
using DeviceId = std::size_t;
using EdgeId = std::size_t;
using HwTag = int;

/// Tag every device supports; tasks carrying it are unconstrained.
inline constexpr HwTag kUniversalTag = 0;

struct Task {
    TaskId id = 0;
    double compute = 0.0;
    HwTag hw_req = kUniversalTag;
};

struct DataLink {
    TaskId src = 0;
    TaskId dst = 0;
    double bytes = 0.0;
};

// Task ids must be dense and 0-based. Graphs with several entry or exit
// tasks are normalized on construction by appending zero-compute pseudo
// tasks joined through zero-byte links.
class TaskGraph {
public:
    TaskGraph(std::vector<Task> tasks, std::vector<DataLink> edges);

    std::size_t size() const { return tasks_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Task>& tasks() const { return tasks_; }
    const std::vector<DataLink>& edges() const { return edges_; }
    const Task& task(TaskId id) const { return tasks_.at(id); }
    const DataLink& edge(EdgeId id) const { return edges_.at(id); }

    std::span<const EdgeId> in_edges(TaskId id) const { return in_.at(id); }
    std::span<const EdgeId> out_edges(TaskId id) const { return out_.at(id); }
    std::size_t degree(TaskId id) const { return in_.at(id).size() + out_.at(id).size(); }

    TaskId entry() const { return entry_; }
    TaskId exit() const { return exit_; }
    bool is_pseudo(TaskId id) const { return id >= first_pseudo_; }
    /// Task count before pseudo entry/exit were appended.
    std::size_t original_size() const { return first_pseudo_; }
    const std::vector<TaskId>& topological_order() const { return topo_; }

    /// Number of tasks on the longest entry-to-exit path.
    std::size_t depth() const;

private:
    std::vector<Task> tasks_;
    std::vector<DataLink> edges_;
    std::vector<std::vector<EdgeId>> in_;
    std::vector<std::vector<EdgeId>> out_;
    std::vector<TaskId> topo_;
    TaskId entry_ = 0;
    TaskId exit_ = 0;
    TaskId first_pseudo_ = 0;
};

struct Device {
    DeviceId id = 0;
    double speed = 1.0;
    std::vector<HwTag> hw_support;  // sorted, unique
};

struct Link {
    double bandwidth = std::numeric_limits<double>::infinity();
    double delay = 0.0;
    bool is_local = true;
};

// Fully connected device cluster. Links are stored as a dense row-major
// |D|x|D| matrix; the diagonal is local with zero delay and unbounded
// bandwidth.
class DeviceNetwork {
public:
    /// `links` is row-major of size |D|^2; diagonal entries are overwritten.
    DeviceNetwork(std::vector<Device> devices, std::vector<Link> links);

    std::size_t size() const { return devices_.size(); }
    const std::vector<Device>& devices() const { return devices_; }
    const Device& device(DeviceId id) const { return devices_.at(id); }
    const Link& link(DeviceId from, DeviceId to) const { return links_.at(from * devices_.size() + to); }
    bool supports(DeviceId id, HwTag tag) const;

    /// Largest off-diagonal bandwidth; 1 for a single-device network.
    double max_bandwidth() const;

private:
    std::vector<Device> devices_;
    std::vector<Link> links_;
};

struct Placement {
    std::vector<DeviceId> assignment;

    std::size_t size() const { return assignment.size(); }
    DeviceId operator[](TaskId id) const { return assignment[id]; }
    DeviceId& operator[](TaskId id) { return assignment[id]; }
    friend bool operator==(const Placement&, const Placement&) = default;
    friend auto operator<=>(const Placement&, const Placement&) = default;
};

class ProblemInstance {
public:
    ProblemInstance(std::shared_ptr<const TaskGraph> graph, std::shared_ptr<const DeviceNetwork> network);
    ProblemInstance(TaskGraph graph, DeviceNetwork network);

    const TaskGraph& graph() const { return *graph_; }
    const DeviceNetwork& network() const { return *network_; }
    std::shared_ptr<const TaskGraph> graph_ptr() const { return graph_; }
    std::shared_ptr<const DeviceNetwork> network_ptr() const { return network_; }

    /// D_i, sorted by device id.
    const std::vector<DeviceId>& feasible(TaskId task) const { return feasible_.at(task); }
    bool is_feasible(TaskId task, DeviceId device) const;
    bool is_feasible(const Placement& placement) const;

    /// Sum of |D_i|.
    std::size_t action_count() const { return action_count_; }
    /// Product of |D_i| as a double (it overflows integers quickly).
    double state_count() const;

    /// Critical-path length when each task costs its fastest feasible
    /// compute time and links cost nothing.
    double cp_min_bound() const { return cp_min_bound_; }

private:
    void init();

    std::shared_ptr<const TaskGraph> graph_;
    std::shared_ptr<const DeviceNetwork> network_;
    std::vector<std::vector<DeviceId>> feasible_;
    std::size_t action_count_ = 0;
    double cp_min_bound_ = 0.0;
};

/// Kahn's algorithm with ascending-id tie break. Throws naming a back edge
/// when the edge list is cyclic.
std::vector<TaskId> topological_order(std::size_t task_count, std::span<const DataLink> edges);
inline std::vector<TaskId> topological_order(const TaskGraph& graph) { return graph.topological_order(); }

const std::vector<DeviceId>& feasible_devices(const ProblemInstance& instance, TaskId task);

/// Each task independently uniform over its feasible devices.
Placement random_placement(const ProblemInstance& instance, Rng& rng);

void require_feasible(const ProblemInstance& instance, const Placement& placement);

} // namespace giph
