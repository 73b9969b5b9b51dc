#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "giph/domain.hpp"
#include "giph/gpnet.hpp"
#include "giph/neuralnet.hpp"
#include "giph/simulator.hpp"

namespace giph {

struct Action {
    TaskId task = 0;
    DeviceId device = 0;
    friend bool operator==(const Action&, const Action&) = default;
};

struct EnvConfig {
    Objective objective = Objective::Makespan;
    LatencyModel noise{};
    /// Stop early once the objective moved less than 1e-3 (relative) over
    /// the last 5 steps.
    bool plateau_stop = false;
};

struct SearchState {
    const ProblemInstance* instance = nullptr;
    Placement placement;
    double objective = 0.0;
    SimTrace trace;  // noise-free trace of `placement`
    std::optional<TaskId> last_moved;
    std::size_t t = 0;
    Placement best_placement;
    double best_objective = 0.0;
};

SearchState initial_state(const ProblemInstance& instance, Placement placement, const EnvConfig& config, Rng& rng);

/// Every feasible (task, device) pair, ordered by task then device; index i
/// is gpNet node i.
std::vector<Action> action_space(const SearchState& state);
std::size_t action_index(const ProblemInstance& instance, const Action& action);

/// true = masked. Masks no-op moves and any move of the last moved task.
std::vector<bool> action_mask(const SearchState& state);

struct StepResult {
    SearchState next;
    double reward = 0.0;  // objective(s_t) - objective(s_{t+1})
};

enum class MaskCheck { Enforce, Skip };

StepResult step(const SearchState& state, const Action& action, const EnvConfig& config, Rng& rng,
                MaskCheck check = MaskCheck::Enforce);

// Gradient context kept for training: the scored graph, its forward pass and
// the sampling distribution over its nodes.
struct PolicyContext {
    std::shared_ptr<const GpNet> net;
    std::shared_ptr<const ForwardPass> pass;
    std::vector<double> probs;
    std::size_t choice = 0;
};

struct StepRecord {
    std::size_t t = 0;
    Action action;
    double reward = 0.0;
    double objective = 0.0;  // after the step
    double best = 0.0;       // best-so-far after the step
    std::optional<PolicyContext> context;
};

class SearchPolicy {
public:
    virtual ~SearchPolicy() = default;
    /// Picks the next move. When `context` is non-null a learned policy fills
    /// it for gradient computation.
    virtual Action choose(const SearchState& state, Rng& rng, PolicyContext* context) = 0;
    /// Whether chosen actions are subject to the action mask.
    virtual bool respects_mask() const { return true; }
};

/// Equal logits over the unmasked actions.
class UniformPolicy final : public SearchPolicy {
public:
    Action choose(const SearchState& state, Rng& rng, PolicyContext* context) override;
};

/// Scores every gpNet node with the embedding network and samples from the
/// masked softmax (or takes the arg-max when greedy).
class GiphPolicy final : public SearchPolicy {
public:
    GiphPolicy(const PolicyParams& params, EmbedConfig config = {}, bool greedy = false)
        : params_(&params), config_(config), greedy_(greedy) {}
    Action choose(const SearchState& state, Rng& rng, PolicyContext* context) override;

private:
    const PolicyParams* params_;
    EmbedConfig config_;
    bool greedy_;
};

/// Softmax sample (or arg-max) over the entries with mask == false. Returns
/// the probabilities through `probs`.
std::size_t sample_masked(const std::vector<double>& scores, const std::vector<bool>& mask, bool greedy, Rng& rng,
                          std::vector<double>& probs);

enum class EpisodeMode { Train, Eval };

struct Episode {
    std::vector<StepRecord> steps;
    Placement initial;
    double initial_objective = 0.0;
    Placement best;
    double best_objective = 0.0;
    /// Best-so-far objective after 0..steps.size() steps.
    std::vector<double> best_curve;
};

Episode run_episode(const ProblemInstance& instance, const Placement& initial, SearchPolicy& policy, std::size_t T,
                    const EnvConfig& config, Rng& rng, EpisodeMode mode = EpisodeMode::Eval);

/// One JSON object per step: {t, action, reward, objective, best}.
void write_trajectory_jsonl(std::ostream& out, const Episode& episode);

} // namespace giph
