#include "giph/evaluation.hpp"

#include <chrono>

#include "giph/baselines.hpp"
#include "giph/training.hpp"

namespace giph {

MethodKind parse_method(const std::string& name) {
    if (name == "giph") return MethodKind::Giph;
    if (name == "giph-task-eft") return MethodKind::GiphTaskEft;
    if (name == "random-task-eft") return MethodKind::RandomTaskEft;
    if (name == "random-sampling" || name == "random") return MethodKind::RandomSampling;
    if (name == "heft") return MethodKind::Heft;
    throw Error("unknown policy '" + name +
                "' (expected giph, giph-task-eft, random-task-eft, random-sampling or heft)");
}

const char* method_name(MethodKind kind) {
    switch (kind) {
    case MethodKind::Giph: return "giph";
    case MethodKind::GiphTaskEft: return "giph-task-eft";
    case MethodKind::RandomTaskEft: return "random-task-eft";
    case MethodKind::RandomSampling: return "random-sampling";
    case MethodKind::Heft: return "heft";
    }
    return "?";
}

Placement case_initial_placement(const ProblemInstance& instance, std::uint64_t seed, std::size_t case_id) {
    Rng rng(Rng::derive(seed, 0x5eed0000ULL + case_id));
    return random_placement(instance, rng);
}

namespace {

Episode run_method(const ProblemInstance& instance, const Placement& initial, const Method& method, std::size_t T,
                   const EnvConfig& env, Rng& rng) {
    switch (method.kind) {
    case MethodKind::Giph:
    case MethodKind::GiphTaskEft: {
        if (!method.params) throw Error(std::string(method_name(method.kind)) + " needs policy parameters");
        const auto kind = method.kind == MethodKind::Giph ? PolicyKind::Giph : PolicyKind::TaskEft;
        auto policy = make_policy(kind, *method.params, method.embed, method.greedy);
        return run_episode(instance, initial, *policy, T, env, rng);
    }
    case MethodKind::RandomTaskEft: return random_task_eft_search(instance, initial, T, env, rng);
    case MethodKind::RandomSampling: return random_sampling_search(instance, initial, T, env, rng);
    case MethodKind::Heft: {
        Episode ep;
        ep.initial = initial;
        ep.initial_objective = evaluate_objective(instance, initial, env.objective, env.noise, rng);
        ep.best = heft(instance).placement;
        ep.best_objective = evaluate_objective(instance, ep.best, env.objective, env.noise, rng);
        ep.best_curve = {ep.best_objective};
        return ep;
    }
    }
    throw Error("unknown method");
}

} // namespace

std::vector<CaseResult> evaluate_cases(std::span<const ProblemInstance> instances, std::span<const Method> methods,
                                       const EvalOptions& options, Execution mode, std::size_t stage) {
    const EnvConfig env{options.objective, LatencyModel{options.noise}, options.plateau_stop};
    if (options.initial) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            try {
                require_feasible(instances[i], *options.initial);
            } catch (const Error& e) {
                throw Error("initial placement for instance " + std::to_string(i) + ": " + e.what());
            }
        }
    }
    std::vector<CaseResult> results(instances.size() * methods.size());
    parallel_for(results.size(), mode, [&](std::size_t slot) {
        const std::size_t i = slot / methods.size();
        const Method& method = methods[slot % methods.size()];
        const ProblemInstance& instance = instances[i];
        const Placement initial = options.initial ? *options.initial : case_initial_placement(instance, options.seed, i);
        Rng rng(Rng::derive(options.seed, 0xe7a10000ULL + i));

        const auto started = std::chrono::steady_clock::now();
        const Episode ep = run_method(instance, initial, method, episode_length(instance, options.T_factor), env, rng);
        const auto elapsed = std::chrono::steady_clock::now() - started;

        CaseResult& r = results[slot];
        r.instance_id = i;
        r.policy = method_name(method.kind);
        r.stage = stage;
        r.depth = instance.graph().depth();
        r.steps = method.kind == MethodKind::Heft ? 0 : ep.best_curve.size() - 1;
        r.initial_score = normalized_score(instance, ep.initial_objective, options.objective);
        r.best_score = normalized_score(instance, ep.best_objective, options.objective);
        r.initial = initial;
        r.best = ep.best;
        r.curve.reserve(ep.best_curve.size());
        for (double v : ep.best_curve) r.curve.push_back(normalized_score(instance, v, options.objective));
        r.wall_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    });
    return results;
}

std::vector<DeviceNetwork> churn_stages(const DeviceNetwork& network, const NetworkGenParams& params,
                                        const ChurnConfig& churn, const std::vector<HwTag>& required,
                                        std::uint64_t seed) {
    std::vector<DeviceNetwork> stages{network};
    for (std::size_t s = 1; s <= churn.steps; ++s) {
        Rng rng(Rng::derive(seed, 0xc4a70000ULL + s));
        stages.push_back(churn_network(stages.back(), params, churn.remove, churn.capacity_factor, rng, required));
    }
    return stages;
}

std::uint64_t stage_seed(std::uint64_t seed, std::size_t stage) {
    return stage == 0 ? seed : Rng::derive(seed, 0x57a90000ULL + stage);
}

} // namespace giph
