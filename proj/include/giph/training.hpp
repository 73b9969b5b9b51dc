#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "giph/environment.hpp"
#include "giph/neuralnet.hpp"

namespace giph {

enum class PolicyKind { Giph, TaskEft };

PolicyKind parse_policy_kind(const std::string& name);
const char* policy_kind_name(PolicyKind kind);

struct TrainConfig {
    std::size_t episodes = 200;
    double lr = 0.01;
    double gamma = 0.97;
    double T_factor = 2.0;  // episode length = ceil(T_factor * |V|)
    std::size_t eval_every = 0;  // 0 disables periodic evaluation
    std::uint64_t seed = 0;
    Objective objective = Objective::Makespan;
    double noise = 0.0;  // training noise; evaluation is always noise-free
    PolicyKind kind = PolicyKind::Giph;
    EmbedConfig embed{};

    void validate() const;
};

struct AdamState {
    ParamSet m;
    ParamSet v;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// gamma^t * (discounted return from t - mean of earlier rewards), per step.
std::vector<double> reinforce_coefficients(std::span<const double> rewards, double gamma);

/// Policy-gradient ascent direction for one episode recorded in train mode.
Gradients reinforce_gradient(const Episode& episode, double gamma, const PolicyParams& params);

/// Adam with bias correction, applied as ascent: params += lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state, double lr);

void save_adam(const std::filesystem::path& path, const AdamState& state);
AdamState load_adam(const std::filesystem::path& path);

struct TrainLogRow {
    std::size_t episode = 0;
    std::size_t instance_id = 0;
    double ret = 0.0;         // discounted return
    double final_score = 0.0; // normalized best-so-far of the episode
    double eval_score = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHooks {
    std::function<void(std::size_t episodes_done, const PolicyParams&, const AdamState&)> checkpoint;
    std::function<void(const TrainLogRow&)> on_row;
};

struct TrainResult {
    PolicyParams params;
    AdamState adam;
    std::vector<TrainLogRow> log;
};

/// Builds the search policy for `kind` around borrowed parameters.
std::unique_ptr<SearchPolicy> make_policy(PolicyKind kind, const PolicyParams& params, const EmbedConfig& embed,
                                          bool greedy);

/// Episode length for a graph: ceil(T_factor * |V|).
std::size_t episode_length(const ProblemInstance& instance, double T_factor);

/// Mean normalized best-so-far score over the evaluation set, noise-free,
/// from initial placements fixed by `seed`.
double evaluate_policy(PolicyKind kind, const PolicyParams& params, const EmbedConfig& embed,
                       std::span<const ProblemInstance> eval_set, Objective objective, double T_factor,
                       std::uint64_t seed);

/// Runs episodes [start_episode, config.episodes). Episode e draws all its
/// randomness from a stream derived from (seed, e), so resuming from a
/// checkpoint reproduces an uninterrupted run.
TrainResult train(const TrainConfig& config, std::span<const ProblemInstance> train_set,
                  std::span<const ProblemInstance> eval_set, PolicyParams params, AdamState adam = {},
                  std::size_t start_episode = 0, const TrainHooks& hooks = {});

/// Initializes parameters from the config seed and trains from scratch.
TrainResult train(const TrainConfig& config, std::span<const ProblemInstance> train_set,
                  std::span<const ProblemInstance> eval_set, const TrainHooks& hooks = {});

} // namespace giph
