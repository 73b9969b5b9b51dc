#pragma once

#include <algorithm>
#include <vector>

#include "giph/domain.hpp"
#include "giph/generator.hpp"
#include "giph/neuralnet.hpp"
#include "giph/rng.hpp"

namespace giph::testing {

// Small random DAG over `n` tasks (edges only from lower to higher id) and a
// fully connected network of `m` devices. With `constrained`, some tasks
// require tag 1 which a random non-empty subset of devices supports.
inline ProblemInstance random_instance(Rng& rng, std::size_t n, std::size_t m, bool constrained = false) {
    std::vector<Task> tasks;
    for (TaskId i = 0; i < n; ++i) {
        const HwTag tag = constrained && rng.bernoulli(0.4) ? 1 : kUniversalTag;
        tasks.push_back(Task{i, rng.uniform(1.0, 10.0), tag});
    }
    std::vector<DataLink> edges;
    for (TaskId j = 1; j < n; ++j) {
        for (TaskId i = 0; i < j; ++i) {
            if (rng.bernoulli(0.5)) edges.push_back(DataLink{i, j, rng.uniform(0.0, 10.0)});
        }
    }
    std::vector<Device> devices;
    const std::size_t tagged = 1 + rng.below(m);
    for (DeviceId k = 0; k < m; ++k) {
        Device d{k, rng.uniform(1.0, 3.0), {}};
        if (k < tagged) d.hw_support.push_back(1);
        devices.push_back(d);
    }
    std::vector<Link> links(m * m);
    for (DeviceId k = 0; k < m; ++k) {
        for (DeviceId l = 0; l < m; ++l) {
            if (k != l) links[k * m + l] = Link{rng.uniform(1.0, 8.0), rng.uniform(0.0, 2.0), false};
        }
    }
    return ProblemInstance(TaskGraph(std::move(tasks), std::move(edges)),
                           DeviceNetwork(std::move(devices), std::move(links)));
}

inline ProblemInstance random_instance(Rng& rng, std::size_t n_lo, std::size_t n_hi, std::size_t m_lo,
                                       std::size_t m_hi, bool constrained) {
    const auto n = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(n_lo), static_cast<std::int64_t>(n_hi)));
    const auto m = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(m_lo), static_cast<std::int64_t>(m_hi)));
    return random_instance(rng, n, m, constrained);
}

// Two tasks v0 -> v1 on three devices; each task fits exactly two devices,
// giving four feasible placements.
inline ProblemInstance two_by_two_instance() {
    TaskGraph g({Task{0, 4.0, 1}, Task{1, 6.0, 2}}, {DataLink{0, 1, 3.0}});
    std::vector<Device> devices{{0, 1.0, {1}}, {1, 2.0, {1, 2}}, {2, 1.5, {2}}};
    std::vector<Link> links(9);
    for (DeviceId k = 0; k < 3; ++k) {
        for (DeviceId l = 0; l < 3; ++l) {
            if (k != l) links[k * 3 + l] = Link{2.0, 0.5, false};
        }
    }
    return ProblemInstance(std::move(g), DeviceNetwork(std::move(devices), std::move(links)));
}

// Homogeneous unconstrained network with identical links.
inline DeviceNetwork uniform_network(std::size_t m, double speed, double bandwidth, double delay) {
    std::vector<Device> devices;
    for (DeviceId k = 0; k < m; ++k) devices.push_back(Device{k, speed, {}});
    std::vector<Link> links(m * m);
    for (DeviceId k = 0; k < m; ++k) {
        for (DeviceId l = 0; l < m; ++l) {
            if (k != l) links[k * m + l] = Link{bandwidth, delay, false};
        }
    }
    return DeviceNetwork(std::move(devices), std::move(links));
}

/// Parameters uniform on [-scale, scale], biases included, so no ReLU sits
/// exactly at its kink for all-zero inputs.
inline PolicyParams random_params(Rng& rng, double scale = 0.5) {
    PolicyParams p;
    for (double& v : p.values()) v = rng.uniform(-scale, scale);
    return p;
}

} // namespace giph::testing
