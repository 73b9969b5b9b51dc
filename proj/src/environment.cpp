#include "giph/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace giph {

namespace {

void refresh(SearchState& s, const EnvConfig& config, Rng& rng) {
    s.trace = simulate(*s.instance, s.placement);
    if (config.objective == Objective::Makespan && config.noise.noise == 0.0) {
        s.objective = s.trace.makespan;
    } else {
        s.objective = evaluate_objective(*s.instance, s.placement, config.objective, config.noise, rng);
    }
    if (s.objective < s.best_objective) {
        s.best_objective = s.objective;
        s.best_placement = s.placement;
    }
}

} // namespace

SearchState initial_state(const ProblemInstance& instance, Placement placement, const EnvConfig& config, Rng& rng) {
    require_feasible(instance, placement);
    SearchState s;
    s.instance = &instance;
    s.placement = std::move(placement);
    s.best_placement = s.placement;
    s.best_objective = std::numeric_limits<double>::infinity();
    refresh(s, config, rng);
    return s;
}

std::vector<Action> action_space(const SearchState& state) {
    std::vector<Action> actions;
    actions.reserve(state.instance->action_count());
    for (TaskId i = 0; i < state.instance->graph().size(); ++i) {
        for (DeviceId d : state.instance->feasible(i)) actions.push_back(Action{i, d});
    }
    return actions;
}

std::size_t action_index(const ProblemInstance& instance, const Action& action) {
    std::size_t index = 0;
    for (TaskId i = 0; i < action.task; ++i) index += instance.feasible(i).size();
    const auto& set = instance.feasible(action.task);
    const auto it = std::lower_bound(set.begin(), set.end(), action.device);
    if (it == set.end() || *it != action.device) throw Error("action targets an infeasible device");
    return index + static_cast<std::size_t>(it - set.begin());
}

std::vector<bool> action_mask(const SearchState& state) {
    std::vector<bool> mask;
    mask.reserve(state.instance->action_count());
    bool any_open = false;
    for (TaskId i = 0; i < state.instance->graph().size(); ++i) {
        const bool frozen = state.last_moved && *state.last_moved == i;
        for (DeviceId d : state.instance->feasible(i)) {
            const bool masked = frozen || state.placement[i] == d;
            mask.push_back(masked);
            any_open = any_open || !masked;
        }
    }
    if (!any_open) throw Error("every action is masked; terminate the episode");
    return mask;
}

StepResult step(const SearchState& state, const Action& action, const EnvConfig& config, Rng& rng, MaskCheck check) {
    if (action.task >= state.instance->graph().size() || !state.instance->is_feasible(action.task, action.device)) {
        throw Error("infeasible action (v" + std::to_string(action.task) + ", d" + std::to_string(action.device) + ")");
    }
    if (check == MaskCheck::Enforce) {
        if (state.placement[action.task] == action.device) throw Error("masked action: no-op move");
        if (state.last_moved && *state.last_moved == action.task) {
            throw Error("masked action: v" + std::to_string(action.task) + " was moved in the previous step");
        }
    }
    StepResult result{state, 0.0};
    SearchState& next = result.next;
    next.placement[action.task] = action.device;
    next.last_moved = action.task;
    next.t = state.t + 1;
    if (next.placement == state.placement && config.noise.noise == 0.0) {
        return result;
    }
    refresh(next, config, rng);
    result.reward = state.objective - next.objective;
    return result;
}

std::size_t sample_masked(const std::vector<double>& scores, const std::vector<bool>& mask, bool greedy, Rng& rng,
                          std::vector<double>& probs) {
    if (scores.size() != mask.size()) throw Error("score and mask lengths differ");
    double top = -std::numeric_limits<double>::infinity();
    std::size_t arg = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!mask[i] && scores[i] > top) {
            top = scores[i];
            arg = i;
        }
    }
    if (arg == scores.size()) throw Error("every action is masked; terminate the episode");
    probs.assign(scores.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!mask[i]) total += probs[i] = std::exp(scores[i] - top);
    }
    for (auto& p : probs) p /= total;
    if (greedy) return arg;
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t last = arg;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (mask[i]) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

Action UniformPolicy::choose(const SearchState& state, Rng& rng, PolicyContext* context) {
    const auto mask = action_mask(state);
    std::vector<double> probs;
    const std::size_t choice = sample_masked(std::vector<double>(mask.size(), 0.0), mask, false, rng, probs);
    if (context) {
        context->probs = std::move(probs);
        context->choice = choice;
    }
    return action_space(state)[choice];
}

Action GiphPolicy::choose(const SearchState& state, Rng& rng, PolicyContext* context) {
    auto net = std::make_shared<GpNet>(build_gpnet(*state.instance, state.placement, state.trace));
    auto pass = std::make_shared<ForwardPass>(forward(*net, *params_, config_));
    const auto mask = action_mask(state);
    std::vector<double> probs;
    const std::size_t choice = sample_masked(pass->scores, mask, greedy_, rng, probs);
    const Action action{net->nodes[choice].task, net->nodes[choice].device};
    if (context) {
        context->net = std::move(net);
        context->pass = std::move(pass);
        context->probs = std::move(probs);
        context->choice = choice;
    }
    return action;
}

Episode run_episode(const ProblemInstance& instance, const Placement& initial, SearchPolicy& policy, std::size_t T,
                    const EnvConfig& config, Rng& rng, EpisodeMode mode) {
    if (T == 0) throw Error("episode length must be at least 1");
    Episode ep;
    ep.initial = initial;
    SearchState state = initial_state(instance, initial, config, rng);
    ep.initial_objective = state.objective;
    ep.best_curve.push_back(state.best_objective);
    std::vector<double> history{state.objective};
    for (std::size_t t = 0; t < T; ++t) {
        StepRecord rec;
        rec.t = t;
        PolicyContext ctx;
        rec.action = policy.choose(state, rng, mode == EpisodeMode::Train ? &ctx : nullptr);
        if (mode == EpisodeMode::Train && ctx.net) rec.context = std::move(ctx);
        StepResult r = step(state, rec.action, config, rng, policy.respects_mask() ? MaskCheck::Enforce : MaskCheck::Skip);
        state = std::move(r.next);
        rec.reward = r.reward;
        rec.objective = state.objective;
        rec.best = state.best_objective;
        ep.steps.push_back(std::move(rec));
        ep.best_curve.push_back(state.best_objective);
        history.push_back(state.objective);
        if (config.plateau_stop && history.size() > 5) {
            const double before = history[history.size() - 6];
            const double change = std::abs(state.objective - before) / std::max(std::abs(before), 1e-12);
            if (change < 1e-3) break;
        }
    }
    ep.best = state.best_placement;
    ep.best_objective = state.best_objective;
    return ep;
}

void write_trajectory_jsonl(std::ostream& out, const Episode& episode) {
    for (const auto& s : episode.steps) {
        const nlohmann::json rec{{"t", s.t},
                                 {"action", {{"task", s.action.task}, {"device", s.action.device}}},
                                 {"reward", s.reward},
                                 {"objective", s.objective},
                                 {"best", s.best}};
        out << rec.dump() << '\n';
    }
}

} // namespace giph
