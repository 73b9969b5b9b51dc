#include "giph/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "giph/baselines.hpp"

namespace giph {

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "giph") return PolicyKind::Giph;
    if (name == "giph-task-eft") return PolicyKind::TaskEft;
    throw Error("unknown policy kind '" + name + "' (expected giph or giph-task-eft)");
}

const char* policy_kind_name(PolicyKind kind) { return kind == PolicyKind::Giph ? "giph" : "giph-task-eft"; }

void TrainConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1]");
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
    if (!(T_factor > 0.0)) throw Error("T_factor must be positive");
    if (!(noise >= 0.0 && noise < 1.0)) throw Error("noise must lie in [0, 1)");
}

std::vector<double> reinforce_coefficients(std::span<const double> rewards, double gamma) {
    const std::size_t T = rewards.size();
    std::vector<double> returns(T, 0.0);
    double acc = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    std::vector<double> coef(T);
    double prefix = 0.0;
    double discount = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
        const double baseline = t == 0 ? 0.0 : prefix / static_cast<double>(t);
        coef[t] = discount * (returns[t] - baseline);
        prefix += rewards[t];
        discount *= gamma;
    }
    return coef;
}

Gradients reinforce_gradient(const Episode& episode, double gamma, const PolicyParams& params) {
    std::vector<double> rewards;
    rewards.reserve(episode.steps.size());
    for (const auto& s : episode.steps) rewards.push_back(s.reward);
    const auto coef = reinforce_coefficients(rewards, gamma);

    Gradients grads;
    std::vector<double> upstream;
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
        const auto& s = episode.steps[t];
        if (!s.context || !s.context->net || !s.context->pass) {
            throw Error("step " + std::to_string(t) + " has no backprop context; run the episode in train mode");
        }
        if (coef[t] == 0.0) continue;
        const auto& ctx = *s.context;
        // d log softmax(q)[choice] / dq = onehot(choice) - probs
        upstream.assign(ctx.probs.size(), 0.0);
        for (std::size_t a = 0; a < ctx.probs.size(); ++a) upstream[a] = -coef[t] * ctx.probs[a];
        upstream[ctx.choice] += coef[t];
        backprop_into(*ctx.net, params, *ctx.pass, upstream, grads);
    }
    require_finite(grads, "gradient");
    return grads;
}

void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state, double lr) {
    require_finite(grads, "gradient");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error("optimizer state does not match the parameters");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto p = params.values();
    auto m = state.m.values();
    auto v = state.v.values();
    const auto g = grads.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
        p[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
    }
}

void save_adam(const std::filesystem::path& path, const AdamState& state) {
    const nlohmann::json header{{"format", "giph-adam-v1"}, {"count", state.m.size()}, {"step", state.step},
                                {"beta1", state.beta1},     {"beta2", state.beta2},    {"eps", state.eps}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write optimizer state " + path.string());
    out << header.dump() << '\n';
    static_assert(std::endian::native == std::endian::little, "optimizer state is stored little-endian");
    for (const ParamSet* set : {&state.m, &state.v}) {
        out.write(reinterpret_cast<const char*>(set->values().data()),
                  static_cast<std::streamsize>(set->size() * sizeof(double)));
    }
}

AdamState load_adam(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open optimizer state " + path.string());
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw Error("corrupt optimizer state " + path.string());
    }
    AdamState state;
    if (header.value("format", "") != "giph-adam-v1" || header.value("count", std::size_t{0}) != state.m.size()) {
        throw Error("corrupt optimizer state " + path.string());
    }
    state.step = header.at("step").get<std::uint64_t>();
    state.beta1 = header.at("beta1").get<double>();
    state.beta2 = header.at("beta2").get<double>();
    state.eps = header.at("eps").get<double>();
    const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (payload.size() != 2 * state.m.size() * sizeof(double)) throw Error("corrupt optimizer state " + path.string());
    std::memcpy(state.m.values().data(), payload.data(), state.m.size() * sizeof(double));
    std::memcpy(state.v.values().data(), payload.data() + state.m.size() * sizeof(double),
                state.v.size() * sizeof(double));
    return state;
}

std::unique_ptr<SearchPolicy> make_policy(PolicyKind kind, const PolicyParams& params, const EmbedConfig& embed,
                                          bool greedy) {
    if (kind == PolicyKind::TaskEft) return std::make_unique<TaskSelectEftPolicy>(params, embed, greedy);
    return std::make_unique<GiphPolicy>(params, embed, greedy);
}

std::size_t episode_length(const ProblemInstance& instance, double T_factor) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(T_factor * static_cast<double>(instance.graph().size()) - 1e-9)));
}

double evaluate_policy(PolicyKind kind, const PolicyParams& params, const EmbedConfig& embed,
                       std::span<const ProblemInstance> eval_set, Objective objective, double T_factor,
                       std::uint64_t seed) {
    if (eval_set.empty()) return std::numeric_limits<double>::quiet_NaN();
    const EnvConfig env{objective, LatencyModel{0.0}, false};
    auto policy = make_policy(kind, params, embed, false);
    double total = 0.0;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
        Rng init_rng(Rng::derive(seed, 0x5eed0000ULL + i));
        const Placement initial = random_placement(eval_set[i], init_rng);
        Rng rng(Rng::derive(seed, 0xe7a10000ULL + i));
        const Episode ep =
            run_episode(eval_set[i], initial, *policy, episode_length(eval_set[i], T_factor), env, rng);
        total += normalized_score(eval_set[i], ep.best_objective, objective);
    }
    return total / static_cast<double>(eval_set.size());
}

TrainResult train(const TrainConfig& config, std::span<const ProblemInstance> train_set,
                  std::span<const ProblemInstance> eval_set, PolicyParams params, AdamState adam,
                  std::size_t start_episode, const TrainHooks& hooks) {
    config.validate();
    if (train_set.empty()) throw Error("training set is empty");
    const EnvConfig env{config.objective, LatencyModel{config.noise}, false};
    TrainResult result;
    for (std::size_t e = start_episode; e < config.episodes; ++e) {
        Rng rng(Rng::derive(config.seed, e));
        const std::size_t id = rng.below(train_set.size());
        const ProblemInstance& instance = train_set[id];
        const Placement initial = random_placement(instance, rng);
        auto policy = make_policy(config.kind, params, config.embed, false);
        const Episode ep = run_episode(instance, initial, *policy, episode_length(instance, config.T_factor), env, rng,
                                       EpisodeMode::Train);
        const Gradients grads = reinforce_gradient(ep, config.gamma, params);
        adam_step(params, grads, adam, config.lr);

        TrainLogRow row;
        row.episode = e;
        row.instance_id = id;
        double discount = 1.0;
        for (const auto& s : ep.steps) {
            row.ret += discount * s.reward;
            discount *= config.gamma;
        }
        row.final_score = normalized_score(instance, ep.best_objective, config.objective);
        const bool checkpoint_now = config.eval_every > 0 && (e + 1) % config.eval_every == 0;
        if (checkpoint_now && !eval_set.empty()) {
            row.eval_score = evaluate_policy(config.kind, params, config.embed, eval_set, config.objective,
                                             config.T_factor, config.seed);
        }
        if (hooks.on_row) hooks.on_row(row);
        result.log.push_back(row);
        if ((checkpoint_now || e + 1 == config.episodes) && hooks.checkpoint) hooks.checkpoint(e + 1, params, adam);
    }
    result.params = std::move(params);
    result.adam = std::move(adam);
    return result;
}

TrainResult train(const TrainConfig& config, std::span<const ProblemInstance> train_set,
                  std::span<const ProblemInstance> eval_set, const TrainHooks& hooks) {
    Rng init(Rng::derive(config.seed, 0x1417ULL));
    return train(config, train_set, eval_set, init_params(init), AdamState{}, 0, hooks);
}

} // namespace giph
