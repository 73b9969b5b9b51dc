#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "giph/domain.hpp"

namespace giph {

struct LatencyModel {
    double noise = 0.0;  // sigma in [0, 1)
};

struct TaskTiming {
    double t_runnable = 0.0;
    double t_start = 0.0;
    double t_done = 0.0;
    DeviceId device = 0;
};

struct EdgeTiming {
    double t_tx_start = 0.0;
    double t_tx_done = 0.0;
};

struct SimTrace {
    std::vector<TaskTiming> tasks;
    std::vector<EdgeTiming> edges;
    double makespan = 0.0;

    /// True when some task waited in a device queue after becoming runnable.
    bool has_queueing() const;
};

enum class EventKind : std::uint8_t { TxDone = 0, TaskRunnable = 1, TaskDone = 2, TaskStart = 3 };

struct SimEvent {
    double timestamp = 0.0;
    EventKind kind = EventKind::TaskRunnable;
    std::size_t subject = 0;  // task id, edge id, or device id for TaskStart
};

/// w_{i,k} = C_i / SP_k. Throws when the device cannot host the task.
double expected_compute_time(const ProblemInstance& instance, TaskId task, DeviceId device);
/// DL_kl + B_ij / BW_kl, zero for co-located endpoints.
double expected_comm_time(const ProblemInstance& instance, EdgeId edge, DeviceId src_device, DeviceId dst_device);

// FIFO, non-preemptive, one task per device, contention-free transfers that
// overlap computation. With noise > 0 each execution and transfer time is
// drawn uniformly within +/- noise of its expectation; with noise == 0 the
// rng is never touched.
SimTrace simulate(const ProblemInstance& instance, const Placement& placement, const LatencyModel& model, Rng& rng);
SimTrace simulate(const ProblemInstance& instance, const Placement& placement);

/// Noise-free critical path cost of a placement (no device queueing).
double path_makespan(const ProblemInstance& instance, const Placement& placement);

/// makespan / cp_min_bound.
double slr(double makespan, const ProblemInstance& instance);

/// Sum of expected compute and communication costs.
double total_cost(const ProblemInstance& instance, const Placement& placement);

enum class Objective { Makespan, TotalCost };

Objective parse_objective(const std::string& name);
const char* objective_name(Objective objective);

/// Objective value of a placement; makespan objectives use the simulator.
double evaluate_objective(const ProblemInstance& instance, const Placement& placement, Objective objective,
                          const LatencyModel& model, Rng& rng);

/// Normalized score used for reporting: SLR for makespan, raw cost otherwise.
double normalized_score(const ProblemInstance& instance, double objective_value, Objective objective);

nlohmann::json to_json(const SimTrace& trace, const TaskGraph& graph);

} // namespace giph
