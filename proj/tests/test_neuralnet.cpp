#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "giph/gpnet.hpp"
#include "giph/neuralnet.hpp"
#include "giph/simulator.hpp"
#include "support.hpp"

namespace giph {
namespace {

using testing::random_instance;
using testing::random_params;

GpNet random_gpnet(Rng& rng) {
    const ProblemInstance inst = random_instance(rng, 2, 5, 2, 3, true);
    return build_gpnet(inst, random_placement(inst, rng));
}

template <class Rows>
bool same_signs(const Rows& a, const Rows& b) {
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < a[r].size(); ++c) {
            if ((a[r][c] > 0.0) != (b[r][c] > 0.0)) return false;
        }
    }
    return true;
}

// True when no ReLU changes side between the two passes, i.e. the central
// difference does not straddle a kink.
bool same_activation_pattern(const ForwardPass& a, const ForwardPass& b) {
    if (!same_signs(a.pre_hidden, b.pre_hidden) || !same_signs(a.score_pre, b.score_pre)) return false;
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t t = 0; t < a.rounds[d].size(); ++t) {
            if (!same_signs(a.rounds[d][t].msg_pre, b.rounds[d][t].msg_pre) ||
                !same_signs(a.rounds[d][t].agg_pre, b.rounds[d][t].agg_pre)) {
                return false;
            }
        }
    }
    return true;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Central differences over coordinates cycling through every layer.
// Coordinates whose perturbation crosses a ReLU kink are redrawn.
void check_gradients(const EmbedConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const double h = 1e-5;
    std::size_t checked = 0;
    std::size_t redrawn = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const GpNet net = random_gpnet(rng);
        PolicyParams params = random_params(rng);
        std::vector<double> upstream(net.size());
        for (double& u : upstream) u = rng.uniform(-1.0, 1.0);
        const Gradients g = backprop(net, params, upstream, config);
        for (int c = 0; c < 5;) {
            const auto layer = static_cast<LayerId>((trial * 5 + c) % kLayerCount);
            const std::size_t i =
                ParamSet::offset(layer) + rng.below(layer_shapes()[static_cast<std::size_t>(layer)].size());
            const double saved = params.values()[i];
            params.values()[i] = saved + h;
            const auto up = forward(net, params, config);
            params.values()[i] = saved - h;
            const auto down = forward(net, params, config);
            params.values()[i] = saved;
            if (!same_activation_pattern(up, down)) {
                ++redrawn;
                continue;
            }
            double numeric = 0.0;
            for (std::size_t a = 0; a < upstream.size(); ++a) numeric += upstream[a] * (up.scores[a] - down.scores[a]);
            numeric /= 2 * h;
            EXPECT_LT(rel_error(g.values()[i], numeric), 1e-4)
                << ParamSet::describe(i) << " analytic " << g.values()[i] << " numeric " << numeric;
            ++checked;
            ++c;
        }
    }
    EXPECT_EQ(checked, 100u);
    EXPECT_LT(redrawn, 10u);
}

TEST(Backprop, MatchesFiniteDifferencesFullSweep) { check_gradients(EmbedConfig{}, 11); }

TEST(Backprop, MatchesFiniteDifferencesKSteps) { check_gradients(EmbedConfig{Aggregation::Mean, 2}, 12); }

TEST(Backprop, MatchesFiniteDifferencesSumAggregation) { check_gradients(EmbedConfig{Aggregation::Sum, 0}, 13); }

TEST(Backprop, ZeroUpstreamGivesZeroGradient) {
    Rng rng(3);
    const GpNet net = random_gpnet(rng);
    const PolicyParams params = random_params(rng);
    const Gradients g = backprop(net, params, std::vector<double>(net.size(), 0.0));
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Backprop, LinearInUpstream) {
    Rng rng(4);
    const GpNet net = random_gpnet(rng);
    const PolicyParams params = random_params(rng);
    std::vector<double> up(net.size());
    for (double& u : up) u = rng.uniform(-1.0, 1.0);
    std::vector<double> twice = up;
    for (double& u : twice) u *= 2.0;
    const Gradients a = backprop(net, params, up);
    const Gradients b = backprop(net, params, twice);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b.values()[i], 2.0 * a.values()[i], 1e-12);
}

TEST(Backprop, RejectsWrongUpstreamLength) {
    Rng rng(5);
    const GpNet net = random_gpnet(rng);
    EXPECT_THROW(backprop(net, random_params(rng), std::vector<double>(net.size() + 1, 0.0)), Error);
}

TEST(Backprop, NonFiniteGradientNamesParameter) {
    Gradients g;
    g.values()[ParamSet::offset(LayerId::Score1) + 3] = std::nan("");
    try {
        require_finite(g, "gradient");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("score.0.weight[0,3]"), std::string::npos) << e.what();
    }
}

TEST(ScoreBackward, EmbeddingGradientMatchesFiniteDifferences) {
    Rng rng(6);
    const PolicyParams params = random_params(rng);
    std::vector<Embedding> emb(3);
    for (auto& e : emb) {
        for (double& v : e) v = rng.uniform(-1.0, 1.0);
    }
    const std::vector<double> up{0.3, -1.2, 0.7};
    const auto g = score_backward(emb, params, up);
    const double h = 1e-5;
    for (std::size_t u = 0; u < emb.size(); ++u) {
        for (std::size_t c = 0; c < kSummaryDim; ++c) {
            auto plus = emb, minus = emb;
            plus[u][c] += h;
            minus[u][c] -= h;
            const double numeric = (score(plus, params)[u] - score(minus, params)[u]) / (2 * h) * up[u];
            EXPECT_LT(rel_error(g.embeddings[u][c], numeric), 1e-4);
        }
    }
}

TEST(Score, OnePerNodeAndPure) {
    Rng rng(7);
    const GpNet net = random_gpnet(rng);
    const PolicyParams params = random_params(rng);
    const auto emb = embed(net, params);
    EXPECT_EQ(score(emb, params).size(), net.size());
    const std::vector<Embedding> twins{emb[0], emb[0]};
    const auto q = score(twins, params);
    EXPECT_EQ(q[0], q[1]);
}

TEST(Embed, SingleNodeUsesEmptyAggregate) {
    const ProblemInstance inst(TaskGraph({Task{0, 3.0, 0}}, {}), testing::uniform_network(1, 2.0, 1.0, 0.0));
    const GpNet net = build_gpnet(inst, Placement{{0}});
    Rng rng(8);
    const PolicyParams params = random_params(rng);
    const auto pass = forward(net, params);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto agg_layer = d == 0 ? LayerId::ForwardAgg : LayerId::BackwardAgg;
        for (std::size_t c = 0; c < kEmbedDim; ++c) {
            const double h2_zero = std::max(0.0, params.bias(agg_layer)[c]);
            EXPECT_DOUBLE_EQ(pass.embeddings[0][d * kEmbedDim + c], pass.x_tilde[0][c] + h2_zero);
        }
    }
}

TEST(Embed, ZeroMessageWeightsLeaveOnlyPreEmbedding) {
    Rng rng(9);
    const GpNet net = random_gpnet(rng);
    PolicyParams params = random_params(rng);
    for (LayerId l : {LayerId::ForwardMsg, LayerId::ForwardAgg, LayerId::BackwardMsg, LayerId::BackwardAgg}) {
        std::fill(params.weights(l).begin(), params.weights(l).end(), 0.0);
        std::fill(params.bias(l).begin(), params.bias(l).end(), 0.0);
    }
    const auto pass = forward(net, params);
    for (std::size_t u = 0; u < net.size(); ++u) {
        for (std::size_t c = 0; c < kEmbedDim; ++c) {
            EXPECT_EQ(pass.embeddings[u][c], pass.x_tilde[u][c]);
            EXPECT_EQ(pass.embeddings[u][kEmbedDim + c], pass.x_tilde[u][c]);
        }
    }
}

// Reverses node storage and recomputes; each node keeps its embedding.
TEST(Embed, InvariantUnderNodePermutation) {
    Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const GpNet net = random_gpnet(rng);
        const PolicyParams params = random_params(rng);
        const std::size_t n = net.size();
        std::vector<std::size_t> perm(n);  // old index -> new index
        for (std::size_t u = 0; u < n; ++u) perm[u] = n - 1 - u;
        GpNet shuffled = net;
        for (std::size_t u = 0; u < n; ++u) shuffled.nodes[perm[u]] = net.nodes[u];
        for (auto& e : shuffled.edges) {
            e.src = perm[e.src];
            e.dst = perm[e.dst];
        }
        for (std::size_t u = 0; u < n; ++u) {
            shuffled.in_edges[perm[u]] = net.in_edges[u];
            shuffled.out_edges[perm[u]] = net.out_edges[u];
        }
        for (auto& t : shuffled.topo) t = perm[t];
        const auto a = embed(net, params);
        const auto b = embed(shuffled, params);
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t c = 0; c < kSummaryDim; ++c) EXPECT_NEAR(a[u][c], b[perm[u]][c], 1e-12);
        }
    }
}

TEST(Embed, MessageOutputsAreNonNegative) {
    Rng rng(14);
    const GpNet net = random_gpnet(rng);
    const auto pass = forward(net, random_params(rng));
    for (std::size_t u = 0; u < net.size(); ++u) {
        for (std::size_t d = 0; d < 2; ++d) {
            for (std::size_t c = 0; c < kEmbedDim; ++c) {
                EXPECT_GE(pass.embeddings[u][d * kEmbedDim + c] - pass.x_tilde[u][c], -1e-12);
            }
        }
    }
}

// Chain of three tasks on one device: a 3-level gpNet.
GpNet chain_gpnet() {
    const ProblemInstance inst(TaskGraph({Task{0, 2.0, 0}, Task{1, 3.0, 0}, Task{2, 4.0, 0}},
                                         {DataLink{0, 1, 1.0}, DataLink{1, 2, 2.0}}),
                               testing::uniform_network(1, 1.5, 2.0, 0.5));
    return build_gpnet(inst, Placement{{0, 0, 0}});
}

TEST(EmbedK, OneStepDoesNotReachTwoLevelsAway) {
    GpNet net = chain_gpnet();
    Rng rng(15);
    const PolicyParams params = random_params(rng);
    const auto base = embed_k(net, params, 1);
    net.nodes[0].features[0] *= 3.0;  // level-0 compute; the scale of the channel changes too
    net.node_scale = {1.0, 1.0, 1.0, 1.0};
    GpNet ref = chain_gpnet();
    ref.node_scale = net.node_scale;
    const auto before = embed_k(ref, params, 1);
    const auto after = embed_k(net, params, 1);
    for (std::size_t c = 0; c < kEmbedDim; ++c) EXPECT_EQ(before[2][c], after[2][c]);
    bool level1_changed = false;
    for (std::size_t c = 0; c < kEmbedDim; ++c) level1_changed = level1_changed || before[1][c] != after[1][c];
    EXPECT_TRUE(level1_changed);
    (void)base;
}

TEST(EmbedK, DepthStepsReachTheFarEnd) {
    GpNet net = chain_gpnet();
    net.node_scale = {1.0, 1.0, 1.0, 1.0};
    Rng rng(16);
    const PolicyParams params = random_params(rng);
    const auto before = embed_k(net, params, net.depth());
    net.nodes[0].features[0] *= 3.0;
    const auto after = embed_k(net, params, net.depth());
    bool changed = false;
    for (std::size_t c = 0; c < kEmbedDim; ++c) changed = changed || before[2][c] != after[2][c];
    EXPECT_TRUE(changed);
}

TEST(EmbedK, RejectsZeroSteps) {
    const GpNet net = chain_gpnet();
    EXPECT_THROW(embed_k(net, PolicyParams{}, 0), Error);
}

TEST(Params, LayoutMatchesArchitecture) {
    const auto& s = layer_shapes();
    EXPECT_EQ(s[0].in, 4u);
    EXPECT_EQ(s[0].out, 4u);
    EXPECT_EQ(s[1].out, 5u);
    EXPECT_EQ(s[2].in, 9u);
    EXPECT_EQ(s[2].out, 9u);
    EXPECT_EQ(s[3].out, 5u);
    EXPECT_EQ(s[6].in, 10u);
    EXPECT_EQ(s[6].out, 16u);
    EXPECT_EQ(s[7].out, 1u);
    std::size_t total = 0;
    for (const auto& l : s) total += l.size();
    EXPECT_EQ(PolicyParams{}.size(), total);
}

TEST(Params, InitIsSeededXavierWithZeroBias) {
    Rng a(21), b(21);
    const PolicyParams p = init_params(a);
    EXPECT_EQ(p, init_params(b));
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        const auto id = static_cast<LayerId>(l);
        const auto& s = layer_shapes()[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
        for (double w : p.weights(id)) EXPECT_LE(std::abs(w), limit);
        for (double v : p.bias(id)) EXPECT_EQ(v, 0.0);
    }
}

class CheckpointTest : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "giph_nn_ckpt";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
    static std::string bytes(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
};

TEST_F(CheckpointTest, SaveLoadSaveIsByteIdentical) {
    Rng rng(22);
    const PolicyParams p = random_params(rng);
    save_params(dir / "a", p);
    const PolicyParams q = load_params(dir / "a");
    EXPECT_EQ(p, q);
    save_params(dir / "b", q);
    EXPECT_EQ(bytes(dir / "a"), bytes(dir / "b"));
}

TEST_F(CheckpointTest, PartsCombineIntoFullParameters) {
    Rng rng(23);
    const PolicyParams p = random_params(rng);
    save_params(dir / "policy", p, CheckpointPart::Policy);
    save_params(dir / "embedding", p, CheckpointPart::Embedding);
    PolicyParams q;
    load_params(dir / "embedding", q);
    EXPECT_NE(p, q);
    load_params(dir / "policy", q);
    EXPECT_EQ(p, q);
}

TEST_F(CheckpointTest, LoadedParamsReproduceForwardOutput) {
    Rng rng(24);
    const PolicyParams p = random_params(rng);
    const GpNet net = random_gpnet(rng);
    save_params(dir / "p", p);
    EXPECT_EQ(forward(net, load_params(dir / "p")).scores, forward(net, p).scores);
}

TEST_F(CheckpointTest, CorruptFilesAreRejected) {
    Rng rng(25);
    save_params(dir / "p", random_params(rng));
    std::string data = bytes(dir / "p");
    {
        std::ofstream out(dir / "truncated", std::ios::binary);
        out << data.substr(0, data.size() - 5);
    }
    EXPECT_THROW(load_params(dir / "truncated"), Error);
    {
        std::ofstream out(dir / "garbage", std::ios::binary);
        out << "not a header\n";
    }
    EXPECT_THROW(load_params(dir / "garbage"), Error);
    EXPECT_THROW(load_params(dir / "missing"), Error);
}

} // namespace
} // namespace giph
