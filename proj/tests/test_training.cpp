#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "giph/training.hpp"
#include "support.hpp"

using namespace giph;
using giph::testing::random_instance;
using giph::testing::random_params;
using giph::testing::uniform_network;

namespace fs = std::filesystem;

namespace {

std::vector<double> oracle_coefficients(const std::vector<double>& r, double gamma) {
    std::vector<double> out;
    for (std::size_t t = 0; t < r.size(); ++t) {
        double g = 0.0;
        for (std::size_t k = t; k < r.size(); ++k) g += std::pow(gamma, static_cast<double>(k - t)) * r[k];
        double b = 0.0;
        for (std::size_t k = 0; k < t; ++k) b += r[k];
        if (t > 0) b /= static_cast<double>(t);
        out.push_back(std::pow(gamma, static_cast<double>(t)) * (g - b));
    }
    return out;
}

// sum_t coef_t * log pi(a_t | s_t) with the recorded graphs and masks held
// fixed; masked actions are the ones that had zero probability.
double weighted_log_prob(const Episode& ep, const std::vector<double>& coef, const PolicyParams& params) {
    double total = 0.0;
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const auto& ctx = *ep.steps[t].context;
        const auto q = forward(*ctx.net, params).scores;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < q.size(); ++a) {
            if (ctx.probs[a] > 0) top = std::max(top, q[a]);
        }
        double z = 0.0;
        for (std::size_t a = 0; a < q.size(); ++a) {
            if (ctx.probs[a] > 0) z += std::exp(q[a] - top);
        }
        total += coef[t] * (q[ctx.choice] - top - std::log(z));
    }
    return total;
}

// v0 -> v1 with free links; moving v0 to the fast device saves exactly 1 ms
// while moving v1 (zero compute) changes nothing.
ProblemInstance bandit_instance() {
    TaskGraph g({Task{0, 2.0, 0}, Task{1, 0.0, 0}}, {DataLink{0, 1, 0.0}});
    std::vector<Device> devices{{0, 1.0, {}}, {1, 2.0, {}}};
    std::vector<Link> links(4);
    links[1] = links[2] = Link{1.0, 0.0, false};
    return ProblemInstance(std::move(g), DeviceNetwork(devices, links));
}

double prob_of(const ProblemInstance& inst, const Placement& p, const PolicyParams& params, std::size_t action) {
    const auto net = build_gpnet(inst, p);
    const auto q = forward(net, params).scores;
    Rng rng(0);
    const auto state = initial_state(inst, p, EnvConfig{}, rng);
    std::vector<double> probs;
    sample_masked(q, action_mask(state), true, rng, probs);
    return probs[action];
}

std::vector<ProblemInstance> small_set(std::uint64_t seed, std::size_t count) {
    Rng rng(seed);
    std::vector<ProblemInstance> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_instance(rng, 3, 6, 2, 3, true));
    return out;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("giph_training_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(Reinforce, ZeroRewardsGiveZeroCoefficients) {
    for (double c : reinforce_coefficients(std::vector<double>(5, 0.0), 0.97)) EXPECT_EQ(c, 0.0);
}

TEST(Reinforce, TwoStepExample) {
    const auto c = reinforce_coefficients(std::vector<double>{4.0, 2.0}, 0.5);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_DOUBLE_EQ(c[0], 5.0);
    EXPECT_DOUBLE_EQ(c[1], -1.0);
}

TEST(Reinforce, MatchesDirectSummation) {
    Rng rng(1);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> r(1 + rng.below(20));
        for (auto& x : r) x = rng.uniform(-5, 5);
        const double gamma = rng.uniform(0.1, 1.0);
        const auto got = reinforce_coefficients(r, gamma);
        const auto want = oracle_coefficients(r, gamma);
        for (std::size_t t = 0; t < r.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-10 * (1 + std::abs(want[t])));
    }
}

TEST(Reinforce, LinearInRewards) {
    std::vector<double> r{1.5, -2.0, 0.25, 3.0};
    auto scaled = r;
    for (auto& x : scaled) x *= 3.0;
    const auto a = reinforce_coefficients(r, 0.9);
    const auto b = reinforce_coefficients(scaled, 0.9);
    for (std::size_t t = 0; t < r.size(); ++t) EXPECT_NEAR(b[t], 3.0 * a[t], 1e-12);
}

TEST(Reinforce, BaselineUsesOnlyEarlierRewards) {
    Rng rng(2);
    std::vector<double> r(8);
    for (auto& x : r) x = rng.uniform(-1, 1);
    const double gamma = 0.8;
    const auto base = reinforce_coefficients(r, gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
        auto changed = r;
        for (std::size_t k = t; k < r.size(); ++k) changed[k] += rng.uniform(-3, 3);
        const auto c = reinforce_coefficients(changed, gamma);
        const auto g_old = oracle_coefficients(std::vector<double>(r.begin() + t, r.end()), gamma)[0];
        const auto g_new = oracle_coefficients(std::vector<double>(changed.begin() + t, changed.end()), gamma)[0];
        // coefficient minus discounted return is -gamma^t * b_t
        const double dt = std::pow(gamma, static_cast<double>(t));
        EXPECT_NEAR(c[t] - dt * g_new, base[t] - dt * g_old, 1e-12);
    }
}

TEST(Reinforce, GradientMatchesFiniteDifferenceOfLogProb) {
    Rng rng(3);
    for (int k = 0; k < 5; ++k) {
        const auto inst = random_instance(rng, 4, 3, true);
        const auto params = random_params(rng);
        GiphPolicy policy(params);
        Rng ep_rng(k);
        const auto ep = run_episode(inst, random_placement(inst, rng), policy, 6, EnvConfig{}, ep_rng, EpisodeMode::Train);
        std::vector<double> rewards;
        for (const auto& s : ep.steps) rewards.push_back(s.reward);
        const auto coef = oracle_coefficients(rewards, 0.97);
        const auto g = reinforce_gradient(ep, 0.97, params);
        for (int c = 0; c < 20; ++c) {
            const std::size_t i = rng.below(params.size());
            auto plus = params, minus = params;
            plus.values()[i] += 1e-5;
            minus.values()[i] -= 1e-5;
            const double fd = (weighted_log_prob(ep, coef, plus) - weighted_log_prob(ep, coef, minus)) / 2e-5;
            EXPECT_NEAR(g.values()[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << ParamSet::describe(i);
        }
    }
}

TEST(Reinforce, ZeroRewardEpisodeGivesZeroGradient) {
    // free links and zero compute make every placement cost the same
    TaskGraph g({Task{0, 0, 0}, Task{1, 0, 0}, Task{2, 0, 0}}, {DataLink{0, 1, 0}, DataLink{1, 2, 0}});
    ProblemInstance inst(std::move(g), uniform_network(3, 1.0, 1.0, 0.0));
    Rng rng(4);
    const auto params = random_params(rng);
    GiphPolicy policy(params);
    const auto ep = run_episode(inst, Placement{{0, 0, 0}}, policy, 6, EnvConfig{}, rng, EpisodeMode::Train);
    const auto grads = reinforce_gradient(ep, 0.97, params);
    for (double v : grads.values()) EXPECT_EQ(v, 0.0);
}

TEST(Reinforce, EvalEpisodeHasNoContext) {
    const auto inst = bandit_instance();
    Rng rng(5);
    const auto params = random_params(rng);
    GiphPolicy policy(params);
    const auto ep = run_episode(inst, Placement{{0, 0}}, policy, 2, EnvConfig{}, rng, EpisodeMode::Eval);
    EXPECT_THROW(reinforce_gradient(ep, 0.97, params), Error);
}

TEST(Reinforce, BanditProbabilityRisesMonotonically) {
    const auto inst = bandit_instance();
    const Placement start{{0, 0}};
    const std::size_t good = action_index(inst, Action{0, 1});
    const int updates = 40;
    std::vector<double> mean(updates + 1, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng init(seed);
        auto params = init_params(init);
        AdamState adam;
        Rng rng(100 + seed);
        mean[0] += prob_of(inst, start, params, good) / 10.0;
        for (int u = 1; u <= updates; ++u) {
            GiphPolicy policy(params);
            const auto ep = run_episode(inst, start, policy, 1, EnvConfig{}, rng, EpisodeMode::Train);
            const double reward = ep.steps[0].reward;
            EXPECT_TRUE(reward == 0.0 || reward == 1.0);
            adam_step(params, reinforce_gradient(ep, 0.97, params), adam, 0.01);
            mean[u] += prob_of(inst, start, params, good) / 10.0;
        }
    }
    for (int u = 1; u <= updates; ++u) EXPECT_GE(mean[u], mean[u - 1]) << "update " << u;
    EXPECT_GT(mean[updates], mean[0] + 0.05);
}

TEST(Adam, ZeroGradientLeavesParams) {
    Rng rng(6);
    auto params = random_params(rng);
    const auto before = params;
    AdamState state;
    adam_step(params, Gradients{}, state, 0.01);
    EXPECT_EQ(params, before);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, MatchesRecurrence) {
    Rng rng(7);
    auto params = random_params(rng);
    auto oracle = std::vector<double>(params.values().begin(), params.values().end());
    std::vector<double> m(oracle.size(), 0.0), v(oracle.size(), 0.0);
    AdamState state;
    for (int t = 1; t <= 5; ++t) {
        Gradients g;
        for (double& x : g.values()) x = rng.uniform(-1, 1);
        adam_step(params, g, state, 0.02);
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g.values()[i];
            v[i] = 0.999 * v[i] + 0.001 * g.values()[i] * g.values()[i];
            const double mh = m[i] / (1 - std::pow(0.9, t));
            const double vh = v[i] / (1 - std::pow(0.999, t));
            oracle[i] += 0.02 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(params.values()[i], oracle[i], 1e-12);
}

TEST(Adam, ConstantGradientStepTendsToLearningRate) {
    PolicyParams params;
    AdamState state;
    Gradients g;
    g.fill(0.3);
    double last = 0.0;
    for (int t = 0; t < 2000; ++t) {
        const double before = params.values()[0];
        adam_step(params, g, state, 0.01);
        last = params.values()[0] - before;
    }
    EXPECT_NEAR(last, 0.01, 1e-6);
    // the bias correction makes the very first step exactly lr as well
    PolicyParams fresh;
    AdamState s2;
    adam_step(fresh, g, s2, 0.01);
    EXPECT_NEAR(fresh.values()[0], 0.01, 1e-9);
}

TEST(Adam, RejectsNonFiniteGradient) {
    PolicyParams params;
    AdamState state;
    Gradients g;
    g.values()[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(adam_step(params, g, state, 0.01), Error);
}

TEST(Adam, SaveLoadRoundTrip) {
    const auto dir = scratch("adam");
    Rng rng(8);
    AdamState state;
    for (double& x : state.m.values()) x = rng.uniform(-1, 1);
    for (double& x : state.v.values()) x = rng.uniform(0, 1);
    state.step = 17;
    save_adam(dir / "a", state);
    const auto back = load_adam(dir / "a");
    EXPECT_EQ(back.m, state.m);
    EXPECT_EQ(back.v, state.v);
    EXPECT_EQ(back.step, 17u);
    std::ofstream(dir / "bad") << "{\"format\":\"nope\"}\n";
    EXPECT_THROW(load_adam(dir / "bad"), Error);
    EXPECT_THROW(load_adam(dir / "missing"), Error);
}

TEST(Train, OneInstanceOneEpisode) {
    auto data = small_set(9, 1);
    TrainConfig config;
    config.episodes = 1;
    config.seed = 3;
    const auto result = train(config, data, {});
    ASSERT_EQ(result.log.size(), 1u);
    EXPECT_EQ(result.log[0].episode, 0u);
    EXPECT_EQ(result.log[0].instance_id, 0u);
    EXPECT_EQ(result.adam.step, 1u);
    EXPECT_TRUE(std::isnan(result.log[0].eval_score));
}

TEST(Train, Deterministic) {
    auto data = small_set(10, 4);
    TrainConfig config;
    config.episodes = 5;
    config.seed = 4;
    const auto a = train(config, data, {});
    const auto b = train(config, data, {});
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.adam.m, b.adam.m);
}

TEST(Train, ResumeIsBitIdentical) {
    const auto dir = scratch("resume");
    auto data = small_set(11, 4);
    auto eval = small_set(12, 2);
    TrainConfig config;
    config.episodes = 6;
    config.eval_every = 3;
    config.seed = 5;
    const auto full = train(config, data, eval);

    TrainConfig first = config;
    first.episodes = 3;
    const auto half = train(first, data, eval);
    save_params(dir / "p", half.params);
    save_adam(dir / "a", half.adam);
    const auto resumed = train(config, data, eval, load_params(dir / "p"), load_adam(dir / "a"), 3);
    EXPECT_EQ(resumed.params, full.params);
    EXPECT_EQ(resumed.adam.v, full.adam.v);
    ASSERT_EQ(resumed.log.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(resumed.log[i].episode, full.log[3 + i].episode);
        EXPECT_EQ(resumed.log[i].ret, full.log[3 + i].ret);
    }
    EXPECT_EQ(resumed.log[2].eval_score, full.log[5].eval_score);
}

TEST(Train, HooksSeeEveryCheckpoint) {
    auto data = small_set(13, 2);
    TrainConfig config;
    config.episodes = 5;
    config.eval_every = 2;
    std::vector<std::size_t> seen;
    std::size_t rows = 0;
    TrainHooks hooks;
    hooks.checkpoint = [&](std::size_t done, const PolicyParams&, const AdamState&) { seen.push_back(done); };
    hooks.on_row = [&](const TrainLogRow&) { ++rows; };
    train(config, data, small_set(14, 1), hooks);
    EXPECT_EQ(seen, (std::vector<std::size_t>{2, 4, 5}));
    EXPECT_EQ(rows, 5u);
}

TEST(Train, TaskSelectionVariantTrains) {
    auto data = small_set(15, 2);
    TrainConfig config;
    config.episodes = 3;
    config.kind = PolicyKind::TaskEft;
    const auto r = train(config, data, {});
    EXPECT_EQ(r.adam.step, 3u);
}

TEST(Train, EvaluatePolicyIsDeterministic) {
    auto eval = small_set(16, 3);
    Rng rng(17);
    const auto params = random_params(rng);
    const double a = evaluate_policy(PolicyKind::Giph, params, {}, eval, Objective::Makespan, 2.0, 1);
    const double b = evaluate_policy(PolicyKind::Giph, params, {}, eval, Objective::Makespan, 2.0, 1);
    EXPECT_EQ(a, b);
    EXPECT_GE(a, 1.0);
}

TEST(Train, EpisodeLength) {
    const auto inst = bandit_instance();
    EXPECT_EQ(episode_length(inst, 2.0), 4u);
    EXPECT_EQ(episode_length(inst, 0.1), 1u);
    EXPECT_EQ(episode_length(inst, 1.5), 3u);
}

TEST(Train, ConfigValidation) {
    TrainConfig c;
    c.gamma = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = TrainConfig{};
    c.lr = -1;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_EQ(parse_policy_kind("giph-task-eft"), PolicyKind::TaskEft);
    EXPECT_THROW(parse_policy_kind("placeto"), Error);
}
