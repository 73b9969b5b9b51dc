#include "giph/neuralnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace giph {

namespace {

constexpr std::array<LayerShape, kLayerCount> kShapes{{
    {"pre_embed.0", kNodeFeatureDim, kNodeFeatureDim},
    {"pre_embed.1", kEmbedDim, kNodeFeatureDim},
    {"forward.h1", kMessageDim, kMessageDim},
    {"forward.h2", kEmbedDim, kMessageDim},
    {"backward.h1", kMessageDim, kMessageDim},
    {"backward.h2", kEmbedDim, kMessageDim},
    {"score.0", kScoreHidden, kSummaryDim},
    {"score.1", 1, kScoreHidden},
}};

constexpr std::array<std::size_t, kLayerCount + 1> make_offsets() {
    std::array<std::size_t, kLayerCount + 1> off{};
    for (std::size_t i = 0; i < kLayerCount; ++i) off[i + 1] = off[i] + kShapes[i].size();
    return off;
}
constexpr auto kOffsets = make_offsets();

constexpr std::size_t idx(LayerId l) { return static_cast<std::size_t>(l); }

// out = W in + b
void dense(std::span<const double> w, std::span<const double> b, const double* in, std::size_t n_in, double* out) {
    const std::size_t n_out = b.size();
    for (std::size_t r = 0; r < n_out; ++r) {
        double acc = b[r];
        const double* row = w.data() + r * n_in;
        for (std::size_t c = 0; c < n_in; ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

// Accumulates dW += dout (x) in, db += dout and, when din is given,
// din += W^T dout.
void dense_backward(std::span<const double> w, const double* in, std::size_t n_in, const double* dout,
                    std::size_t n_out, std::span<double> dw, std::span<double> db, double* din) {
    for (std::size_t r = 0; r < n_out; ++r) {
        const double g = dout[r];
        if (g == 0.0) continue;
        db[r] += g;
        double* drow = dw.data() + r * n_in;
        const double* row = w.data() + r * n_in;
        for (std::size_t c = 0; c < n_in; ++c) {
            drow[c] += g * in[c];
            if (din) din[c] += g * row[c];
        }
    }
}

template <std::size_t N>
std::array<double, N> relu(const std::array<double, N>& pre) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    return out;
}

template <std::size_t N>
void relu_mask(std::array<double, N>& grad, const std::array<double, N>& pre) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!(pre[i] > 0.0)) grad[i] = 0.0;
    }
}

struct DirectionView {
    LayerId msg;
    LayerId agg;
    bool reversed;
};

constexpr std::array<DirectionView, 2> kDirections{{
    {LayerId::ForwardMsg, LayerId::ForwardAgg, false},
    {LayerId::BackwardMsg, LayerId::BackwardAgg, true},
}};

const std::vector<std::size_t>& incoming(const GpNet& net, std::size_t u, bool reversed) {
    return reversed ? net.out_edges[u] : net.in_edges[u];
}

std::size_t neighbour(const GpNet& net, std::size_t k, bool reversed) {
    return reversed ? net.edges[k].dst : net.edges[k].src;
}

void check_config(const GpNet& net, const PolicyParams& params) {
    if (params.size() != kOffsets.back()) throw Error("parameter vector has the wrong size");
    if (net.in_edges.size() != net.nodes.size() || net.out_edges.size() != net.nodes.size() ||
        net.topo.size() != net.nodes.size()) {
        throw Error("gpNet adjacency does not match its node list");
    }
}

// Computes the embedding of node u in one direction from the neighbour
// embeddings `e_prev`, recording intermediates in `round`.
void node_update(const GpNet& net, const PolicyParams& params, const DirectionView& dir, Aggregation aggregation,
                 std::size_t u, const std::vector<std::array<double, kEmbedDim>>& e_prev,
                 const std::vector<std::array<double, kEmbedDim>>& x_tilde, ForwardPass::Round& round,
                 std::array<double, kEmbedDim>& e_out) {
    std::array<double, kMessageDim> agg{};
    const auto& in = incoming(net, u, dir.reversed);
    for (std::size_t k : in) {
        auto& msg_in = round.msg_in[k];
        const auto& e_nb = e_prev[neighbour(net, k, dir.reversed)];
        std::copy(e_nb.begin(), e_nb.end(), msg_in.begin());
        const EdgeFeatures xe = net.scaled_edge(k);
        std::copy(xe.begin(), xe.end(), msg_in.begin() + kEmbedDim);
        dense(params.weights(dir.msg), params.bias(dir.msg), msg_in.data(), kMessageDim, round.msg_pre[k].data());
        const auto m = relu(round.msg_pre[k]);
        for (std::size_t c = 0; c < kMessageDim; ++c) agg[c] += m[c];
    }
    if (aggregation == Aggregation::Mean && !in.empty()) {
        for (auto& a : agg) a /= static_cast<double>(in.size());
    }
    round.agg[u] = agg;
    dense(params.weights(dir.agg), params.bias(dir.agg), agg.data(), kMessageDim, round.agg_pre[u].data());
    const auto h = relu(round.agg_pre[u]);
    for (std::size_t c = 0; c < kEmbedDim; ++c) e_out[c] = h[c] + x_tilde[u][c];
}

void node_update_backward(const GpNet& net, const PolicyParams& params, const DirectionView& dir,
                          Aggregation aggregation, std::size_t u, const std::array<double, kEmbedDim>& grad,
                          const ForwardPass::Round& round, Gradients& out,
                          std::vector<std::array<double, kEmbedDim>>& grad_prev) {
    std::array<double, kEmbedDim> dpre = grad;
    relu_mask(dpre, round.agg_pre[u]);
    std::array<double, kMessageDim> dagg{};
    dense_backward(params.weights(dir.agg), round.agg[u].data(), kMessageDim, dpre.data(), kEmbedDim,
                   out.weights(dir.agg), out.bias(dir.agg), dagg.data());
    const auto& in = incoming(net, u, dir.reversed);
    if (in.empty()) return;
    if (aggregation == Aggregation::Mean) {
        for (auto& d : dagg) d /= static_cast<double>(in.size());
    }
    for (std::size_t k : in) {
        std::array<double, kMessageDim> dm = dagg;
        relu_mask(dm, round.msg_pre[k]);
        std::array<double, kMessageDim> din{};
        dense_backward(params.weights(dir.msg), round.msg_in[k].data(), kMessageDim, dm.data(), kMessageDim,
                       out.weights(dir.msg), out.bias(dir.msg), din.data());
        auto& target = grad_prev[neighbour(net, k, dir.reversed)];
        for (std::size_t c = 0; c < kEmbedDim; ++c) target[c] += din[c];
    }
}

ForwardPass::Round make_round(const GpNet& net) {
    ForwardPass::Round r;
    r.msg_in.assign(net.edges.size(), {});
    r.msg_pre.assign(net.edges.size(), {});
    r.agg.assign(net.nodes.size(), {});
    r.agg_pre.assign(net.nodes.size(), {});
    return r;
}

} // namespace

const std::array<LayerShape, kLayerCount>& layer_shapes() { return kShapes; }

ParamSet::ParamSet() : values_(kOffsets.back(), 0.0) {}

std::size_t ParamSet::offset(LayerId layer) { return kOffsets[idx(layer)]; }

std::span<double> ParamSet::weights(LayerId layer) {
    const auto& s = kShapes[idx(layer)];
    return std::span<double>(values_).subspan(offset(layer), s.out * s.in);
}
std::span<const double> ParamSet::weights(LayerId layer) const {
    const auto& s = kShapes[idx(layer)];
    return std::span<const double>(values_).subspan(offset(layer), s.out * s.in);
}
std::span<double> ParamSet::bias(LayerId layer) {
    const auto& s = kShapes[idx(layer)];
    return std::span<double>(values_).subspan(offset(layer) + s.out * s.in, s.out);
}
std::span<const double> ParamSet::bias(LayerId layer) const {
    const auto& s = kShapes[idx(layer)];
    return std::span<const double>(values_).subspan(offset(layer) + s.out * s.in, s.out);
}

std::string ParamSet::describe(std::size_t flat_index) {
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        if (flat_index >= kOffsets[l + 1]) continue;
        const auto& s = kShapes[l];
        const std::size_t local = flat_index - kOffsets[l];
        if (local < s.out * s.in) {
            return std::string(s.name) + ".weight[" + std::to_string(local / s.in) + "," +
                   std::to_string(local % s.in) + "]";
        }
        return std::string(s.name) + ".bias[" + std::to_string(local - s.out * s.in) + "]";
    }
    return "out-of-range[" + std::to_string(flat_index) + "]";
}

void ParamSet::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

ParamSet& ParamSet::operator+=(const ParamSet& other) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ParamSet& ParamSet::operator*=(double factor) {
    for (auto& v : values_) v *= factor;
    return *this;
}

PolicyParams init_params(Rng& rng) {
    PolicyParams p;
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        const auto& s = kShapes[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
        for (double& w : p.weights(static_cast<LayerId>(l))) w = rng.uniform(-limit, limit);
    }
    return p;
}

ForwardPass forward(const GpNet& net, const PolicyParams& params, const EmbedConfig& config) {
    check_config(net, params);
    const std::size_t n = net.nodes.size();
    ForwardPass pass;
    pass.config = config;
    pass.x.resize(n);
    pass.pre_hidden.resize(n);
    pass.x_tilde.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
        pass.x[u] = net.scaled_node(u);
        dense(params.weights(LayerId::PreEmbed1), params.bias(LayerId::PreEmbed1), pass.x[u].data(), kNodeFeatureDim,
              pass.pre_hidden[u].data());
        const auto h = relu(pass.pre_hidden[u]);
        dense(params.weights(LayerId::PreEmbed2), params.bias(LayerId::PreEmbed2), h.data(), kNodeFeatureDim,
              pass.x_tilde[u].data());
    }

    pass.embeddings.assign(n, {});
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& dir = kDirections[d];
        std::vector<std::array<double, kEmbedDim>> e(n);
        if (config.steps == 0) {
            auto& round = pass.rounds[d].emplace_back(make_round(net));
            auto visit = [&](std::size_t u) {
                node_update(net, params, dir, config.aggregation, u, e, pass.x_tilde, round, e[u]);
            };
            if (dir.reversed) {
                std::for_each(net.topo.rbegin(), net.topo.rend(), visit);
            } else {
                std::for_each(net.topo.begin(), net.topo.end(), visit);
            }
        } else {
            e = pass.x_tilde;
            for (std::size_t t = 0; t < config.steps; ++t) {
                auto& round = pass.rounds[d].emplace_back(make_round(net));
                std::vector<std::array<double, kEmbedDim>> next(n);
                for (std::size_t u = 0; u < n; ++u) {
                    node_update(net, params, dir, config.aggregation, u, e, pass.x_tilde, round, next[u]);
                }
                e = std::move(next);
            }
        }
        for (std::size_t u = 0; u < n; ++u) std::copy(e[u].begin(), e[u].end(), pass.embeddings[u].begin() + d * kEmbedDim);
    }

    pass.score_pre.resize(n);
    pass.scores.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
        dense(params.weights(LayerId::Score1), params.bias(LayerId::Score1), pass.embeddings[u].data(), kSummaryDim,
              pass.score_pre[u].data());
        const auto h = relu(pass.score_pre[u]);
        dense(params.weights(LayerId::Score2), params.bias(LayerId::Score2), h.data(), kScoreHidden, &pass.scores[u]);
    }
    return pass;
}

std::vector<Embedding> embed(const GpNet& net, const PolicyParams& params, const EmbedConfig& config) {
    return forward(net, params, config).embeddings;
}

std::vector<Embedding> embed_k(const GpNet& net, const PolicyParams& params, std::size_t k, Aggregation aggregation) {
    if (k == 0) throw Error("k-step message passing needs k >= 1");
    return embed(net, params, EmbedConfig{aggregation, k});
}

std::vector<double> score(std::span<const Embedding> embeddings, const PolicyParams& params) {
    if (params.size() != kOffsets.back()) throw Error("parameter vector has the wrong size");
    std::vector<double> q(embeddings.size());
    for (std::size_t u = 0; u < embeddings.size(); ++u) {
        std::array<double, kScoreHidden> pre;
        dense(params.weights(LayerId::Score1), params.bias(LayerId::Score1), embeddings[u].data(), kSummaryDim,
              pre.data());
        const auto h = relu(pre);
        dense(params.weights(LayerId::Score2), params.bias(LayerId::Score2), h.data(), kScoreHidden, &q[u]);
    }
    return q;
}

namespace {

void score_backward_node(const PolicyParams& params, const Embedding& e, const std::array<double, kScoreHidden>& pre,
                         double dq, Gradients& out, Embedding& de) {
    const auto h = relu(pre);
    std::array<double, kScoreHidden> dh{};
    dense_backward(params.weights(LayerId::Score2), h.data(), kScoreHidden, &dq, 1, out.weights(LayerId::Score2),
                   out.bias(LayerId::Score2), dh.data());
    relu_mask(dh, pre);
    dense_backward(params.weights(LayerId::Score1), e.data(), kSummaryDim, dh.data(), kScoreHidden,
                   out.weights(LayerId::Score1), out.bias(LayerId::Score1), de.data());
}

} // namespace

ScoreGradients score_backward(std::span<const Embedding> embeddings, const PolicyParams& params,
                              std::span<const double> upstream) {
    if (upstream.size() != embeddings.size()) throw Error("upstream gradient length must equal the node count");
    ScoreGradients g;
    g.embeddings.assign(embeddings.size(), {});
    for (std::size_t u = 0; u < embeddings.size(); ++u) {
        std::array<double, kScoreHidden> pre;
        dense(params.weights(LayerId::Score1), params.bias(LayerId::Score1), embeddings[u].data(), kSummaryDim,
              pre.data());
        score_backward_node(params, embeddings[u], pre, upstream[u], g.params, g.embeddings[u]);
    }
    return g;
}

void backprop_into(const GpNet& net, const PolicyParams& params, const ForwardPass& pass,
                   std::span<const double> upstream, Gradients& out) {
    const std::size_t n = net.nodes.size();
    if (upstream.size() != n) throw Error("upstream gradient length must equal the node count");
    if (pass.scores.size() != n) throw Error("forward pass does not belong to this gpNet");
    if (std::all_of(upstream.begin(), upstream.end(), [](double g) { return g == 0.0; })) return;

    std::vector<Embedding> de(n);
    for (std::size_t u = 0; u < n; ++u) {
        if (upstream[u] != 0.0) score_backward_node(params, pass.embeddings[u], pass.score_pre[u], upstream[u], out, de[u]);
    }

    std::vector<std::array<double, kEmbedDim>> dx_tilde(n);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& dir = kDirections[d];
        std::vector<std::array<double, kEmbedDim>> grad(n);
        for (std::size_t u = 0; u < n; ++u) std::copy_n(de[u].begin() + d * kEmbedDim, kEmbedDim, grad[u].begin());
        if (pass.config.steps == 0) {
            const auto& round = pass.rounds[d].front();
            auto visit = [&](std::size_t u) {
                for (std::size_t c = 0; c < kEmbedDim; ++c) dx_tilde[u][c] += grad[u][c];
                node_update_backward(net, params, dir, pass.config.aggregation, u, grad[u], round, out, grad);
            };
            // Reverse of the order used in the forward sweep.
            if (dir.reversed) {
                std::for_each(net.topo.begin(), net.topo.end(), visit);
            } else {
                std::for_each(net.topo.rbegin(), net.topo.rend(), visit);
            }
        } else {
            for (std::size_t t = pass.rounds[d].size(); t-- > 0;) {
                std::vector<std::array<double, kEmbedDim>> prev(n);
                for (std::size_t u = 0; u < n; ++u) {
                    for (std::size_t c = 0; c < kEmbedDim; ++c) dx_tilde[u][c] += grad[u][c];
                    node_update_backward(net, params, dir, pass.config.aggregation, u, grad[u], pass.rounds[d][t], out,
                                         prev);
                }
                grad = std::move(prev);
            }
            for (std::size_t u = 0; u < n; ++u) {
                for (std::size_t c = 0; c < kEmbedDim; ++c) dx_tilde[u][c] += grad[u][c];
            }
        }
    }

    for (std::size_t u = 0; u < n; ++u) {
        const auto h = relu(pass.pre_hidden[u]);
        std::array<double, kNodeFeatureDim> dh{};
        dense_backward(params.weights(LayerId::PreEmbed2), h.data(), kNodeFeatureDim, dx_tilde[u].data(), kEmbedDim,
                       out.weights(LayerId::PreEmbed2), out.bias(LayerId::PreEmbed2), dh.data());
        relu_mask(dh, pass.pre_hidden[u]);
        dense_backward(params.weights(LayerId::PreEmbed1), pass.x[u].data(), kNodeFeatureDim, dh.data(),
                       kNodeFeatureDim, out.weights(LayerId::PreEmbed1), out.bias(LayerId::PreEmbed1), nullptr);
    }
}

Gradients backprop(const GpNet& net, const PolicyParams& params, const ForwardPass& pass,
                   std::span<const double> upstream) {
    Gradients g;
    backprop_into(net, params, pass, upstream, g);
    require_finite(g, "gradient");
    return g;
}

Gradients backprop(const GpNet& net, const PolicyParams& params, std::span<const double> upstream,
                   const EmbedConfig& config) {
    return backprop(net, params, forward(net, params, config), upstream);
}

void require_finite(const ParamSet& set, const char* what) {
    const auto v = set.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw Error(std::string("non-finite ") + what + " at " + ParamSet::describe(i));
    }
}

namespace {

bool in_part(std::size_t layer, CheckpointPart part) {
    const bool policy = layer >= idx(LayerId::Score1);
    switch (part) {
    case CheckpointPart::All: return true;
    case CheckpointPart::Embedding: return !policy;
    case CheckpointPart::Policy: return policy;
    }
    return false;
}

std::uint64_t to_little_endian(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t out = 0;
        for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return out;
    }
    return bits;
}

} // namespace

void save_params(const std::filesystem::path& path, const PolicyParams& params, CheckpointPart part) {
    nlohmann::json layers = nlohmann::json::array();
    std::size_t count = 0;
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        if (!in_part(l, part)) continue;
        layers.push_back({{"name", kShapes[l].name}, {"out", kShapes[l].out}, {"in", kShapes[l].in}});
        count += kShapes[l].size();
    }
    const nlohmann::json header{{"format", "giph-params-v1"}, {"dtype", "f64le"}, {"layers", layers}, {"count", count}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << header.dump() << '\n';
    const auto values = params.values();
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        if (!in_part(l, part)) continue;
        for (std::size_t i = kOffsets[l]; i < kOffsets[l + 1]; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], sizeof bits);
            bits = to_little_endian(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

void load_params(const std::filesystem::path& path, PolicyParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("corrupt checkpoint " + path.string() + ": missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw Error("corrupt checkpoint " + path.string() + ": unreadable header");
    }
    if (!header.is_object() || header.value("format", "") != "giph-params-v1" || header.value("dtype", "") != "f64le") {
        throw Error("corrupt checkpoint " + path.string() + ": unsupported format");
    }
    const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::size_t> layers;
    std::size_t count = 0;
    for (const auto& jl : header.at("layers")) {
        const auto name = jl.at("name").get<std::string>();
        const auto it = std::find_if(kShapes.begin(), kShapes.end(), [&](const LayerShape& s) { return name == s.name; });
        if (it == kShapes.end()) throw Error("corrupt checkpoint " + path.string() + ": unknown layer " + name);
        if (jl.at("out").get<std::size_t>() != it->out || jl.at("in").get<std::size_t>() != it->in) {
            throw Error("corrupt checkpoint " + path.string() + ": shape mismatch for " + name);
        }
        layers.push_back(static_cast<std::size_t>(it - kShapes.begin()));
        count += it->size();
    }
    if (header.value("count", std::size_t{0}) != count || payload.size() != count * sizeof(double)) {
        throw Error("corrupt checkpoint " + path.string() + ": payload size mismatch");
    }
    PolicyParams loaded = params;
    auto values = loaded.values();
    std::size_t pos = 0;
    for (std::size_t l : layers) {
        for (std::size_t i = kOffsets[l]; i < kOffsets[l + 1]; ++i, pos += sizeof(double)) {
            std::uint64_t bits;
            std::memcpy(&bits, payload.data() + pos, sizeof bits);
            bits = to_little_endian(bits);
            std::memcpy(&values[i], &bits, sizeof bits);
        }
    }
    require_finite(loaded, "checkpoint value");
    params = std::move(loaded);
}

PolicyParams load_params(const std::filesystem::path& path) {
    PolicyParams p;
    load_params(path, p);
    return p;
}

} // namespace giph
