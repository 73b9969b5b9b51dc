#include "giph/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace giph {

namespace {

void check_eps(double eps, const char* name) {
    if (!(eps >= 0.0 && eps < 1.0)) throw Error(std::string(name) + " must lie in [0, 1)");
}

void check_tags(const TagDistribution& tags, const char* where, bool sum_limited) {
    double total = 0.0;
    for (const auto& [tag, p] : tags) {
        if (tag == kUniversalTag) throw Error(std::string(where) + ": tag 0 is reserved for the universal tag");
        if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string(where) + ": probabilities must lie in [0, 1]");
        total += p;
    }
    if (sum_limited && total > 1.0 + 1e-12) throw Error(std::string(where) + ": probabilities sum above 1");
}

double around(Rng& rng, double mean, double eps) { return rng.uniform(mean * (1.0 - eps), mean * (1.0 + eps)); }

// Integer uniform with the given mean, support [1, 2*round(mean) - 1].
std::size_t uniform_count(Rng& rng, double mean) {
    const auto centre = std::max<std::int64_t>(1, std::llround(mean));
    return static_cast<std::size_t>(rng.range(1, 2 * centre - 1));
}

HwTag sample_requirement(const TagDistribution& tags, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& [tag, p] : tags) {
        acc += p;
        if (u < acc) return tag;
    }
    return kUniversalTag;
}

std::vector<HwTag> sample_support(const TagDistribution& tags, Rng& rng) {
    std::vector<HwTag> support{kUniversalTag};
    for (const auto& [tag, p] : tags) {
        if (rng.bernoulli(p)) support.push_back(tag);
    }
    return support;
}

} // namespace

void GraphGenParams::validate() const {
    if (M < 2) throw Error("graph.M must be at least 2");
    if (!(alpha > 0.0)) throw Error("graph.alpha must be positive");
    if (!(p_c >= 0.0 && p_c <= 1.0)) throw Error("graph.p_c must lie in [0, 1]");
    if (!(C_bar >= 0.0)) throw Error("graph.C_bar must be non-negative");
    if (!(B_bar >= 0.0)) throw Error("graph.B_bar must be non-negative");
    check_eps(eps_C, "graph.eps_C");
    check_eps(eps_B, "graph.eps_B");
    check_tags(hw_tags, "graph.hw_tags", true);
}

void NetworkGenParams::validate() const {
    if (m < 1) throw Error("network.m must be at least 1");
    if (!(SP_bar > 0.0)) throw Error("network.SP_bar must be positive");
    if (!(BW_bar > 0.0)) throw Error("network.BW_bar must be positive");
    if (!(DL_bar >= 0.0)) throw Error("network.DL_bar must be non-negative");
    check_eps(eps_SP, "network.eps_SP");
    check_eps(eps_BW, "network.eps_BW");
    check_tags(hw_tags, "network.hw_tags", false);
}

LayeredDag generate_layered_dag(const GraphGenParams& params, Rng& rng) {
    params.validate();
    const double root = std::sqrt(static_cast<double>(params.M));
    const std::size_t depth = std::min(uniform_count(rng, root / params.alpha), params.M);
    std::vector<std::size_t> widths(depth);
    for (auto& w : widths) w = uniform_count(rng, params.alpha * root);

    // Rescale the sampled widths so the level sizes add up to exactly M.
    const double total = static_cast<double>(std::accumulate(widths.begin(), widths.end(), std::size_t{0}));
    for (auto& w : widths) {
        w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(w) * params.M / total)));
    }
    std::size_t sum = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
    if (sum < params.M) widths.back() += params.M - sum;
    for (std::size_t k = depth; sum > params.M && k-- > 0;) {
        const std::size_t cut = std::min(widths[k] - 1, sum - params.M);
        widths[k] -= cut;
        sum -= cut;
    }

    std::vector<std::size_t> level_start(depth + 1, 0);
    for (std::size_t k = 0; k < depth; ++k) level_start[k + 1] = level_start[k] + widths[k];
    std::vector<std::size_t> level_of(params.M);
    for (std::size_t k = 0; k < depth; ++k) {
        for (std::size_t i = level_start[k]; i < level_start[k + 1]; ++i) level_of[i] = k;
    }

    std::vector<Task> tasks(params.M);
    for (TaskId i = 0; i < params.M; ++i) {
        tasks[i].id = i;
        tasks[i].compute = around(rng, params.C_bar, params.eps_C);
        tasks[i].hw_req = sample_requirement(params.hw_tags, rng);
    }

    std::vector<DataLink> edges;
    std::vector<bool> has_parent(params.M, false);
    for (TaskId u = 0; u < params.M; ++u) {
        for (TaskId v = level_start[level_of[u] + 1]; v < params.M; ++v) {
            if (rng.bernoulli(params.p_c)) {
                edges.push_back(DataLink{u, v, 0.0});
                has_parent[v] = true;
            }
        }
    }
    for (TaskId v = level_start[std::min<std::size_t>(1, depth)]; v < params.M; ++v) {
        if (has_parent[v]) continue;
        const std::size_t above = level_of[v] - 1;
        const TaskId u = level_start[above] + rng.below(widths[above]);
        edges.push_back(DataLink{u, v, 0.0});
    }
    std::sort(edges.begin(), edges.end(),
              [](const DataLink& a, const DataLink& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
    for (auto& e : edges) e.bytes = around(rng, params.B_bar, params.eps_B);

    return LayeredDag{TaskGraph(std::move(tasks), std::move(edges)), std::move(widths)};
}

TaskGraph generate_task_graph(const GraphGenParams& params, Rng& rng) {
    return generate_layered_dag(params, rng).graph;
}

namespace {

// Guarantees every listed tag has at least one supporting device.
void cover_tags(std::vector<Device>& devices, const TagDistribution& tags, Rng& rng) {
    for (const auto& [tag, p] : tags) {
        (void)p;
        const bool covered = std::any_of(devices.begin(), devices.end(), [tag = tag](const Device& d) {
            return std::find(d.hw_support.begin(), d.hw_support.end(), tag) != d.hw_support.end();
        });
        if (!covered) devices[rng.below(devices.size())].hw_support.push_back(tag);
    }
}

} // namespace

DeviceNetwork generate_network(const NetworkGenParams& params, Rng& rng) {
    params.validate();
    const std::size_t m = params.m;
    std::vector<Device> devices(m);
    for (DeviceId k = 0; k < m; ++k) {
        devices[k].id = k;
        devices[k].speed = around(rng, params.SP_bar, params.eps_SP);
        devices[k].hw_support = sample_support(params.hw_tags, rng);
    }
    cover_tags(devices, params.hw_tags, rng);

    std::vector<Link> links(m * m);
    for (DeviceId k = 0; k < m; ++k) {
        for (DeviceId l = k + 1; l < m; ++l) {
            const Link link{around(rng, params.BW_bar, params.eps_BW), rng.uniform(0.0, 2.0 * params.DL_bar), false};
            links[k * m + l] = link;
            links[l * m + k] = link;
        }
    }
    return DeviceNetwork(std::move(devices), std::move(links));
}

DeviceNetwork remove_devices(const DeviceNetwork& network, std::size_t count, Rng& rng,
                             const std::vector<HwTag>& required_tags) {
    const std::size_t m = network.size();
    if (count >= m) throw Error("cannot remove " + std::to_string(count) + " of " + std::to_string(m) + " devices");

    std::vector<DeviceId> ids(m);
    std::iota(ids.begin(), ids.end(), DeviceId{0});
    for (std::size_t i = 0; i < count; ++i) std::swap(ids[i], ids[i + rng.below(m - i)]);
    std::vector<DeviceId> kept(ids.begin() + static_cast<std::ptrdiff_t>(count), ids.end());
    std::sort(kept.begin(), kept.end());

    std::string orphaned;
    for (HwTag tag : required_tags) {
        const bool supported =
            std::any_of(kept.begin(), kept.end(), [&](DeviceId d) { return network.supports(d, tag); });
        if (!supported) orphaned += (orphaned.empty() ? "" : ",") + std::to_string(tag);
    }
    if (!orphaned.empty()) throw Error("device removal leaves hardware tags unsupported: " + orphaned);

    const std::size_t n = kept.size();
    std::vector<Device> devices(n);
    std::vector<Link> links(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        devices[a] = network.device(kept[a]);
        devices[a].id = a;
        for (std::size_t b = 0; b < n; ++b) links[a * n + b] = network.link(kept[a], kept[b]);
    }
    return DeviceNetwork(std::move(devices), std::move(links));
}

DeviceNetwork add_devices(const DeviceNetwork& network, const NetworkGenParams& params, std::size_t count,
                          double capacity_factor, Rng& rng) {
    params.validate();
    if (!(capacity_factor > 0.0 && capacity_factor <= 1.0)) throw Error("capacity factor must lie in (0, 1]");
    const std::size_t old_m = network.size();
    const std::size_t m = old_m + count;
    std::vector<Device> devices = network.devices();
    std::vector<Link> links(m * m);
    for (std::size_t a = 0; a < old_m; ++a) {
        for (std::size_t b = 0; b < old_m; ++b) links[a * m + b] = network.link(a, b);
    }
    for (std::size_t k = old_m; k < m; ++k) {
        Device d;
        d.id = k;
        d.speed = capacity_factor * around(rng, params.SP_bar, params.eps_SP);
        d.hw_support = sample_support(params.hw_tags, rng);
        devices.push_back(std::move(d));
        for (std::size_t l = 0; l < k; ++l) {
            const Link link{capacity_factor * around(rng, params.BW_bar, params.eps_BW),
                            rng.uniform(0.0, 2.0 * params.DL_bar), false};
            links[k * m + l] = link;
            links[l * m + k] = link;
        }
    }
    return DeviceNetwork(std::move(devices), std::move(links));
}

DeviceNetwork churn_network(const DeviceNetwork& network, const NetworkGenParams& params, std::size_t n_remove,
                            double capacity_factor, Rng& rng, const std::vector<HwTag>& required_tags) {
    const DeviceNetwork reduced = remove_devices(network, n_remove, rng, required_tags);
    return add_devices(reduced, params, n_remove, capacity_factor, rng);
}

std::vector<HwTag> required_tags(const std::vector<const TaskGraph*>& graphs) {
    std::set<HwTag> tags;
    for (const TaskGraph* g : graphs) {
        for (const auto& t : g->tasks()) {
            if (t.hw_req != kUniversalTag) tags.insert(t.hw_req);
        }
    }
    return {tags.begin(), tags.end()};
}

} // namespace giph
