#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "giph/generator.hpp"

namespace giph {

// Parameter file: "graph" and "network" objects use the generator field
// names; any field may hold a list, and every combination of the listed
// values is generated.
struct DatasetParams {
    std::vector<GraphGenParams> graph_settings;
    std::vector<NetworkGenParams> network_settings;
    std::size_t graphs_per_setting = 10;
    std::size_t networks_per_setting = 1;
    double train_fraction = 0.5;
    /// Write the same networks to both splits.
    bool shared_networks = true;
};

/// Throws naming the offending field path.
DatasetParams parse_dataset_params(const nlohmann::json& j);

struct DatasetSplit {
    std::vector<std::shared_ptr<const TaskGraph>> graphs;
    std::vector<std::shared_ptr<const DeviceNetwork>> networks;
};

struct Dataset {
    DatasetSplit train;
    DatasetSplit test;
};

/// Train and test items come from disjoint seed streams.
Dataset generate_dataset(const DatasetParams& params, std::uint64_t seed);

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// split is "train" or "test".
DatasetSplit load_split(const std::filesystem::path& dir, const std::string& split);

/// Every (graph, network) pair, graph-major: instance id = g * |networks| + n.
std::vector<ProblemInstance> make_instances(const DatasetSplit& split);

} // namespace giph
