#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "giph/environment.hpp"
#include "giph/generator.hpp"
#include "giph/parallel.hpp"

namespace giph {

enum class MethodKind { Giph, GiphTaskEft, RandomTaskEft, RandomSampling, Heft };

MethodKind parse_method(const std::string& name);
const char* method_name(MethodKind kind);

struct Method {
    MethodKind kind = MethodKind::RandomSampling;
    const PolicyParams* params = nullptr;  // learned methods only
    EmbedConfig embed{};
    bool greedy = false;
};

struct EvalOptions {
    Objective objective = Objective::Makespan;
    double noise = 0.0;
    double T_factor = 2.0;
    bool plateau_stop = false;
    std::uint64_t seed = 0;
    /// Start every case from this placement instead of the seeded one.
    std::optional<Placement> initial;
};

/// Initial placement of evaluation case `case_id`, shared by every method.
Placement case_initial_placement(const ProblemInstance& instance, std::uint64_t seed, std::size_t case_id);

struct CaseResult {
    std::size_t instance_id = 0;
    std::string policy;
    std::size_t stage = 0;
    std::size_t depth = 0;
    std::size_t steps = 0;
    double initial_score = 0.0;
    double best_score = 0.0;  // SLR for makespan, raw cost for total_cost
    Placement initial;
    Placement best;
    std::vector<double> curve;  // normalized best-so-far after 0..steps evaluations
    double wall_ms = 0.0;
};

/// Runs every method on every instance. Search methods get a budget of
/// ceil(T_factor * |V|) evaluations; all start from the same initial
/// placement. Results are ordered by instance, then method.
std::vector<CaseResult> evaluate_cases(std::span<const ProblemInstance> instances, std::span<const Method> methods,
                                       const EvalOptions& options, Execution mode = Execution::Parallel,
                                       std::size_t stage = 0);

struct ChurnConfig {
    std::size_t steps = 4;
    std::size_t remove = 4;
    double capacity_factor = 0.5;
};

/// Network at stage 0..steps; stage s applies one churn step to stage s-1.
std::vector<DeviceNetwork> churn_stages(const DeviceNetwork& network, const NetworkGenParams& params,
                                        const ChurnConfig& churn, const std::vector<HwTag>& required,
                                        std::uint64_t seed);

/// Evaluation seed for churn stage s; stage 0 matches a plain evaluation.
std::uint64_t stage_seed(std::uint64_t seed, std::size_t stage);

} // namespace giph
