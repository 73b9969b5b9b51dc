#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "giph/domain.hpp"

namespace giph {

/// (tag, probability) pairs. For task graphs the probability is the chance a
/// task requires the tag; for networks it is the chance a device supports it.
using TagDistribution = std::vector<std::pair<HwTag, double>>;

struct GraphGenParams {
    std::size_t M = 20;         // tasks before pseudo entry/exit
    double alpha = 1.0;         // shape: depth mean sqrt(M)/alpha, width mean alpha*sqrt(M)
    double p_c = 0.3;           // higher-to-lower level link probability
    double C_bar = 10.0;
    double B_bar = 10.0;
    double eps_C = 0.5;
    double eps_B = 0.5;
    TagDistribution hw_tags{{1, 0.15}, {2, 0.15}};

    void validate() const;
};

struct NetworkGenParams {
    std::size_t m = 8;
    double SP_bar = 2.0;
    double BW_bar = 5.0;
    double DL_bar = 1.0;
    double eps_SP = 0.5;
    double eps_BW = 0.5;
    TagDistribution hw_tags{{1, 0.5}, {2, 0.5}};

    void validate() const;
};

struct LayeredDag {
    TaskGraph graph;
    std::vector<std::size_t> level_widths;  // sums to M
};

LayeredDag generate_layered_dag(const GraphGenParams& params, Rng& rng);
TaskGraph generate_task_graph(const GraphGenParams& params, Rng& rng);
DeviceNetwork generate_network(const NetworkGenParams& params, Rng& rng);

/// Removes `count` uniformly chosen devices, renumbering the survivors
/// densely. Throws listing every tag in `required_tags` left unsupported.
DeviceNetwork remove_devices(const DeviceNetwork& network, std::size_t count, Rng& rng,
                             const std::vector<HwTag>& required_tags = {});

/// Appends `count` devices sampled from `params` with speed and link
/// bandwidths multiplied by `capacity_factor`.
DeviceNetwork add_devices(const DeviceNetwork& network, const NetworkGenParams& params, std::size_t count,
                          double capacity_factor, Rng& rng);

/// One adaptivity step: remove `n_remove` devices, then replace them with
/// lower-capacity ones.
DeviceNetwork churn_network(const DeviceNetwork& network, const NetworkGenParams& params, std::size_t n_remove,
                            double capacity_factor, Rng& rng, const std::vector<HwTag>& required_tags = {});

/// Distinct non-universal tags required by any task of the graphs.
std::vector<HwTag> required_tags(const std::vector<const TaskGraph*>& graphs);

} // namespace giph
