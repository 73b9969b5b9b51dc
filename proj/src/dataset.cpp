#include "giph/dataset.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "giph/json_io.hpp"

namespace giph {

using nlohmann::json;

namespace {

bool is_tag_list(const json& v) { return v.is_array() && (v.empty() || v[0].is_array()); }

// Expands list-valued fields into one object per combination. hw_tags is a
// list of [tag, probability] pairs, so only a list of such lists counts as
// alternatives.
std::vector<json> cross_product(const json& section, const std::string& where) {
    if (!section.is_object()) throw Error(where + ": expected an object");
    std::vector<json> combos{json::object()};
    for (const auto& [key, value] : section.items()) {
        std::vector<json> choices;
        if (key == "hw_tags") {
            if (!value.is_array()) throw Error(where + ".hw_tags: expected a list of [tag, probability] pairs");
            if (!value.empty() && value[0].is_array() && is_tag_list(value[0])) {
                for (const auto& v : value) choices.push_back(v);
            } else {
                choices.push_back(value);
            }
        } else if (value.is_array()) {
            if (value.empty()) throw Error(where + "." + key + ": empty list");
            for (const auto& v : value) choices.push_back(v);
        } else {
            choices.push_back(value);
        }
        std::vector<json> next;
        for (const auto& c : combos) {
            for (const auto& v : choices) {
                json o = c;
                o[key] = v;
                next.push_back(std::move(o));
            }
        }
        combos = std::move(next);
    }
    return combos;
}

template <class T>
void read_field(const json& o, const char* key, T& out, const std::string& where) {
    if (!o.contains(key)) return;
    try {
        out = o.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(where + "." + key + ": expected a " + (std::is_integral_v<T> ? "count" : "number") + ", got " +
                    o.at(key).dump());
    }
}

TagDistribution read_tags(const json& o, const std::string& where) {
    TagDistribution tags;
    const auto& v = o.at("hw_tags");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = where + ".hw_tags[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number_integer() || !v[i][1].is_number()) {
            throw Error(at + ": expected [tag, probability]");
        }
        tags.emplace_back(v[i][0].get<HwTag>(), v[i][1].get<double>());
    }
    return tags;
}

void reject_unknown(const json& o, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : o.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw Error(where + "." + key + ": unknown field");
    }
}

GraphGenParams graph_params(const json& o, const std::string& where) {
    reject_unknown(o, {"M", "alpha", "p_c", "C_bar", "B_bar", "eps_C", "eps_B", "hw_tags"}, where);
    GraphGenParams p;
    read_field(o, "M", p.M, where);
    read_field(o, "alpha", p.alpha, where);
    read_field(o, "p_c", p.p_c, where);
    read_field(o, "C_bar", p.C_bar, where);
    read_field(o, "B_bar", p.B_bar, where);
    read_field(o, "eps_C", p.eps_C, where);
    read_field(o, "eps_B", p.eps_B, where);
    if (o.contains("hw_tags")) p.hw_tags = read_tags(o, where);
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(where + ": " + e.what());
    }
    return p;
}

NetworkGenParams network_params(const json& o, const std::string& where) {
    reject_unknown(o, {"m", "SP_bar", "BW_bar", "DL_bar", "eps_SP", "eps_BW", "hw_tags"}, where);
    NetworkGenParams p;
    read_field(o, "m", p.m, where);
    read_field(o, "SP_bar", p.SP_bar, where);
    read_field(o, "BW_bar", p.BW_bar, where);
    read_field(o, "DL_bar", p.DL_bar, where);
    read_field(o, "eps_SP", p.eps_SP, where);
    read_field(o, "eps_BW", p.eps_BW, where);
    if (o.contains("hw_tags")) p.hw_tags = read_tags(o, where);
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(where + ": " + e.what());
    }
    return p;
}

// Stream ids: split in the top bits, then setting, then item.
std::uint64_t item_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t split, std::size_t setting,
                        std::size_t item) {
    return Rng::derive(seed, (kind << 60) | (split << 56) | (static_cast<std::uint64_t>(setting) << 28) | item);
}

json split_file(const std::string& split, const char* key, json items) {
    return {{"format", kFormatTag}, {"split", split}, {key, std::move(items)}};
}

} // namespace

DatasetParams parse_dataset_params(const json& j) {
    if (!j.is_object()) throw Error("params: expected a JSON object");
    reject_unknown(j,
                   {"graph", "network", "graphs_per_setting", "networks_per_setting", "train_fraction",
                    "shared_networks"},
                   "params");
    DatasetParams p;
    const json graph = j.contains("graph") ? j.at("graph") : json::object();
    const json network = j.contains("network") ? j.at("network") : json::object();
    const auto gcombos = cross_product(graph, "graph");
    for (std::size_t i = 0; i < gcombos.size(); ++i) p.graph_settings.push_back(graph_params(gcombos[i], "graph"));
    const auto ncombos = cross_product(network, "network");
    for (std::size_t i = 0; i < ncombos.size(); ++i) {
        p.network_settings.push_back(network_params(ncombos[i], "network"));
    }
    read_field(j, "graphs_per_setting", p.graphs_per_setting, "params");
    read_field(j, "networks_per_setting", p.networks_per_setting, "params");
    read_field(j, "train_fraction", p.train_fraction, "params");
    if (j.contains("shared_networks")) {
        if (!j.at("shared_networks").is_boolean()) throw Error("params.shared_networks: expected true or false");
        p.shared_networks = j.at("shared_networks").get<bool>();
    }
    if (p.graphs_per_setting == 0) throw Error("params.graphs_per_setting: must be positive");
    if (p.networks_per_setting == 0) throw Error("params.networks_per_setting: must be positive");
    if (!(p.train_fraction >= 0.0 && p.train_fraction <= 1.0)) {
        throw Error("params.train_fraction: must lie in [0, 1]");
    }
    return p;
}

Dataset generate_dataset(const DatasetParams& params, std::uint64_t seed) {
    Dataset d;
    const auto n_train = static_cast<std::size_t>(
        std::llround(params.train_fraction * static_cast<double>(params.graphs_per_setting)));
    for (std::size_t s = 0; s < params.graph_settings.size(); ++s) {
        for (std::size_t k = 0; k < params.graphs_per_setting; ++k) {
            const bool train = k < n_train;
            const std::size_t item = train ? k : k - n_train;
            Rng rng(item_seed(seed, 1, train ? 0 : 1, s, item));
            auto g = std::make_shared<const TaskGraph>(generate_task_graph(params.graph_settings[s], rng));
            (train ? d.train : d.test).graphs.push_back(std::move(g));
        }
    }
    for (std::size_t s = 0; s < params.network_settings.size(); ++s) {
        for (std::size_t k = 0; k < params.networks_per_setting; ++k) {
            Rng rng(item_seed(seed, 2, 0, s, k));
            auto n = std::make_shared<const DeviceNetwork>(generate_network(params.network_settings[s], rng));
            d.train.networks.push_back(n);
            if (params.shared_networks) {
                d.test.networks.push_back(std::move(n));
            } else {
                Rng test_rng(item_seed(seed, 2, 1, s, k));
                d.test.networks.push_back(
                    std::make_shared<const DeviceNetwork>(generate_network(params.network_settings[s], test_rng)));
            }
        }
    }
    return d;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, split] : {std::pair{"train", &dataset.train}, std::pair{"test", &dataset.test}}) {
        json graphs = json::array();
        for (const auto& g : split->graphs) graphs.push_back(to_json(*g));
        json networks = json::array();
        for (const auto& n : split->networks) networks.push_back(to_json(*n));
        write_json_file(dir / (std::string(name) + "_graphs.json"), split_file(name, "graphs", std::move(graphs)));
        write_json_file(dir / (std::string(name) + "_networks.json"),
                        split_file(name, "networks", std::move(networks)));
    }
}

DatasetSplit load_split(const std::filesystem::path& dir, const std::string& split) {
    DatasetSplit out;
    const auto gpath = dir / (split + "_graphs.json");
    const auto npath = dir / (split + "_networks.json");
    const json gj = read_json_file(gpath);
    const json nj = read_json_file(npath);
    try {
        if (!gj.is_object() || !gj.contains("graphs")) throw Error("missing 'graphs' list");
        const auto& graphs = gj.at("graphs");
        for (std::size_t i = 0; i < graphs.size(); ++i) {
            try {
                out.graphs.push_back(std::make_shared<const TaskGraph>(graph_from_json(graphs[i])));
            } catch (const std::exception& e) {
                throw Error("graphs[" + std::to_string(i) + "]: " + e.what());
            }
        }
    } catch (const std::exception& e) {
        throw Error(gpath.string() + ": " + e.what());
    }
    try {
        if (!nj.is_object() || !nj.contains("networks")) throw Error("missing 'networks' list");
        const auto& networks = nj.at("networks");
        for (std::size_t i = 0; i < networks.size(); ++i) {
            try {
                out.networks.push_back(std::make_shared<const DeviceNetwork>(network_from_json(networks[i])));
            } catch (const std::exception& e) {
                throw Error("networks[" + std::to_string(i) + "]: " + e.what());
            }
        }
    } catch (const std::exception& e) {
        throw Error(npath.string() + ": " + e.what());
    }
    if (out.graphs.empty()) throw Error(gpath.string() + ": no graphs");
    if (out.networks.empty()) throw Error(npath.string() + ": no networks");
    return out;
}

std::vector<ProblemInstance> make_instances(const DatasetSplit& split) {
    std::vector<ProblemInstance> out;
    out.reserve(split.graphs.size() * split.networks.size());
    for (std::size_t g = 0; g < split.graphs.size(); ++g) {
        for (std::size_t n = 0; n < split.networks.size(); ++n) {
            try {
                out.emplace_back(split.graphs[g], split.networks[n]);
            } catch (const Error& e) {
                throw Error("graph " + std::to_string(g) + " on network " + std::to_string(n) + ": " + e.what());
            }
        }
    }
    return out;
}

} // namespace giph
