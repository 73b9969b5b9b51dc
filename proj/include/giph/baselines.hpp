#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "giph/environment.hpp"
#include "giph/parallel.hpp"

namespace giph {

struct ScheduledTask {
    DeviceId device = 0;
    double start = 0.0;
    double finish = 0.0;
};

struct Schedule {
    std::vector<ScheduledTask> tasks;
    double makespan() const;
};

struct HeftOptions {
    bool insertion = true;
};

struct HeftResult {
    Placement placement;
    Schedule schedule;
    std::vector<double> upward_rank;
};

/// Upward-rank list scheduling with earliest-finish-time device choice.
HeftResult heft(const ProblemInstance& instance, HeftOptions options = {});

/// Placed parents and their finish times, the input to a single EFT decision.
struct EftContext {
    std::vector<std::optional<DeviceId>> device;
    std::vector<double> finish;

    static EftContext from_trace(const Placement& placement, const SimTrace& trace);
};

/// max over parents (finish + comm to `device`) + w(task, device).
double eft_estimate(const ProblemInstance& instance, const EftContext& context, TaskId task, DeviceId device);
/// Feasible device with the smallest estimate; ties go to the lower id.
DeviceId eft_device(const ProblemInstance& instance, const EftContext& context, TaskId task);

/// Uniformly random task each step, moved to its EFT device given the
/// current placement.
class RandomTaskEftPolicy final : public SearchPolicy {
public:
    Action choose(const SearchState& state, Rng& rng, PolicyContext* context) override;
    bool respects_mask() const override { return false; }
};

/// Learned task selection over the pivot subgraph followed by EFT device
/// selection. Consecutive selection of the same task is masked.
class TaskSelectEftPolicy final : public SearchPolicy {
public:
    TaskSelectEftPolicy(const PolicyParams& params, EmbedConfig config = {}, bool greedy = false)
        : params_(&params), config_(config), greedy_(greedy) {}
    Action choose(const SearchState& state, Rng& rng, PolicyContext* context) override;
    bool respects_mask() const override { return false; }

    static std::vector<bool> task_mask(const SearchState& state);

private:
    const PolicyParams* params_;
    EmbedConfig config_;
    bool greedy_;
};

Episode random_task_eft_search(const ProblemInstance& instance, const Placement& initial, std::size_t T,
                               const EnvConfig& config, Rng& rng);

/// Evaluates `budget` independent uniform placements after the initial one
/// and tracks the best objective.
Episode random_sampling_search(const ProblemInstance& instance, const Placement& initial, std::size_t budget,
                               const EnvConfig& config, Rng& rng);

struct BruteForceResult {
    Placement placement;
    double makespan = 0.0;
    std::size_t evaluated = 0;
};

inline constexpr double kBruteForceLimit = 1e6;

/// Exhaustive noise-free search; ties resolve to the lexicographically
/// smallest assignment. The serial path is the reference for the parallel
/// one.
BruteForceResult brute_force_optimal(const ProblemInstance& instance, Execution mode = Execution::Serial);

} // namespace giph
