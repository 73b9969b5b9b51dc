#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "giph/gpnet.hpp"
#include "giph/rng.hpp"

namespace giph {

inline constexpr std::size_t kEmbedDim = 5;                          // per direction
inline constexpr std::size_t kMessageDim = kEmbedDim + kEdgeFeatureDim;  // 9
inline constexpr std::size_t kSummaryDim = 2 * kEmbedDim;            // 10
inline constexpr std::size_t kScoreHidden = 16;

enum class LayerId : std::size_t {
    PreEmbed1,    // 4 -> 4, relu
    PreEmbed2,    // 4 -> 5
    ForwardMsg,   // h1: 9 -> 9, relu
    ForwardAgg,   // h2: 9 -> 5, relu
    BackwardMsg,
    BackwardAgg,
    Score1,       // 10 -> 16, relu
    Score2,       // 16 -> 1
};
inline constexpr std::size_t kLayerCount = 8;

struct LayerShape {
    const char* name;
    std::size_t out;
    std::size_t in;
    constexpr std::size_t size() const { return out * in + out; }
};

const std::array<LayerShape, kLayerCount>& layer_shapes();

// Flat storage for every trainable weight, laid out layer by layer as a
// row-major (out x in) weight matrix followed by the bias. The same type
// holds gradients and optimizer moments.
class ParamSet {
public:
    ParamSet();

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> weights(LayerId layer);
    std::span<const double> weights(LayerId layer) const;
    std::span<double> bias(LayerId layer);
    std::span<const double> bias(LayerId layer) const;

    static std::size_t offset(LayerId layer);
    /// "layer.weight[r,c]" or "layer.bias[r]" for a flat index.
    static std::string describe(std::size_t flat_index);

    void fill(double value);
    ParamSet& operator+=(const ParamSet& other);
    ParamSet& operator*=(double factor);
    friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
    std::vector<double> values_;
};

using PolicyParams = ParamSet;
using Gradients = ParamSet;

/// Xavier-uniform weights, zero biases.
PolicyParams init_params(Rng& rng);

enum class Aggregation { Mean, Sum };

struct EmbedConfig {
    Aggregation aggregation = Aggregation::Mean;
    /// 0 runs one full topological sweep per direction; k > 0 runs k
    /// synchronous message-passing rounds with shared weights.
    std::size_t steps = 0;
};

using Embedding = std::array<double, kSummaryDim>;

// Every intermediate needed to differentiate scores with respect to the
// parameters.
struct ForwardPass {
    struct Round {
        std::vector<std::array<double, kMessageDim>> msg_in;   // per edge
        std::vector<std::array<double, kMessageDim>> msg_pre;  // per edge
        std::vector<std::array<double, kMessageDim>> agg;      // per node
        std::vector<std::array<double, kEmbedDim>> agg_pre;    // per node
    };

    EmbedConfig config;
    std::vector<NodeFeatures> x;                           // scaled node features
    std::vector<std::array<double, kNodeFeatureDim>> pre_hidden;
    std::vector<std::array<double, kEmbedDim>> x_tilde;
    std::array<std::vector<Round>, 2> rounds;              // [direction][round]
    std::vector<Embedding> embeddings;
    std::vector<std::array<double, kScoreHidden>> score_pre;
    std::vector<double> scores;
};

ForwardPass forward(const GpNet& net, const PolicyParams& params, const EmbedConfig& config = {});

/// Per-node concat(forward summary, backward summary).
std::vector<Embedding> embed(const GpNet& net, const PolicyParams& params, const EmbedConfig& config = {});
std::vector<Embedding> embed_k(const GpNet& net, const PolicyParams& params, std::size_t k,
                               Aggregation aggregation = Aggregation::Mean);

std::vector<double> score(std::span<const Embedding> embeddings, const PolicyParams& params);

struct ScoreGradients {
    Gradients params;
    std::vector<Embedding> embeddings;
};
/// Gradients of sum_a upstream_a * q_a through the score MLP alone.
ScoreGradients score_backward(std::span<const Embedding> embeddings, const PolicyParams& params,
                              std::span<const double> upstream);

/// Gradients of sum_a upstream_a * q_a with respect to every parameter.
Gradients backprop(const GpNet& net, const PolicyParams& params, const ForwardPass& pass,
                   std::span<const double> upstream);
Gradients backprop(const GpNet& net, const PolicyParams& params, std::span<const double> upstream,
                   const EmbedConfig& config = {});
/// Accumulating variant used by the trainer.
void backprop_into(const GpNet& net, const PolicyParams& params, const ForwardPass& pass,
                   std::span<const double> upstream, Gradients& out);

/// Throws naming the first non-finite entry.
void require_finite(const ParamSet& set, const char* what);

enum class CheckpointPart { All, Embedding, Policy };

// Checkpoint: one JSON header line followed by little-endian float64 values
// of the selected layers in declaration order.
void save_params(const std::filesystem::path& path, const PolicyParams& params,
                 CheckpointPart part = CheckpointPart::All);
/// Overwrites the layers stored in the file; others are left untouched.
void load_params(const std::filesystem::path& path, PolicyParams& params);
PolicyParams load_params(const std::filesystem::path& path);

} // namespace giph
