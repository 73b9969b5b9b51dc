#include "giph/json_io.hpp"

#include <fstream>
#include <sstream>

namespace giph {

using nlohmann::json;

namespace {

void check_format(const json& j, const char* what) {
    if (!j.is_object()) throw Error(std::string(what) + ": expected a JSON object");
    if (j.contains("format") && j.at("format") != kFormatTag) {
        throw Error(std::string(what) + ": unsupported format " + j.at("format").dump());
    }
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw Error(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(where + "." + key + ": " + e.what());
    }
}

const json& member(const json& j, const char* key, const char* where) {
    if (!j.contains(key)) throw Error(std::string(where) + ": missing field '" + key + "'");
    return j.at(key);
}

} // namespace

json to_json(const TaskGraph& graph) {
    json tasks = json::array();
    for (const auto& t : graph.tasks()) tasks.push_back({{"id", t.id}, {"compute", t.compute}, {"hw_req", t.hw_req}});
    json edges = json::array();
    for (const auto& e : graph.edges()) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
    return {{"format", kFormatTag}, {"tasks", std::move(tasks)}, {"edges", std::move(edges)},
            {"pseudo_from", graph.original_size()}};
}

json to_json(const DeviceNetwork& network) {
    json devices = json::array();
    for (const auto& d : network.devices()) {
        devices.push_back({{"id", d.id}, {"speed", d.speed}, {"hw_support", d.hw_support}});
    }
    json links = json::array();
    for (DeviceId k = 0; k < network.size(); ++k) {
        for (DeviceId l = 0; l < network.size(); ++l) {
            if (k == l) continue;
            const auto& link = network.link(k, l);
            links.push_back({{"src", k}, {"dst", l}, {"bandwidth", link.bandwidth}, {"delay", link.delay}});
        }
    }
    return {{"format", kFormatTag}, {"devices", std::move(devices)}, {"links", std::move(links)}};
}

json to_json(const ProblemInstance& instance) {
    return {{"format", kFormatTag}, {"graph", to_json(instance.graph())}, {"network", to_json(instance.network())}};
}

json to_json(const Placement& placement) { return placement.assignment; }

TaskGraph graph_from_json(const json& j) {
    check_format(j, "task graph");
    std::vector<Task> tasks;
    std::vector<DataLink> edges;
    const auto& jt = member(j, "tasks", "task graph");
    for (std::size_t i = 0; i < jt.size(); ++i) {
        const std::string where = "tasks[" + std::to_string(i) + "]";
        tasks.push_back(Task{field<TaskId>(jt[i], "id", where), field<double>(jt[i], "compute", where),
                             field<HwTag>(jt[i], "hw_req", where)});
    }
    if (j.contains("edges")) {
        const auto& je = j.at("edges");
        for (std::size_t i = 0; i < je.size(); ++i) {
            const std::string where = "edges[" + std::to_string(i) + "]";
            edges.push_back(DataLink{field<TaskId>(je[i], "src", where), field<TaskId>(je[i], "dst", where),
                                     field<double>(je[i], "bytes", where)});
        }
    }
    if (j.contains("pseudo_from")) {
        // Drop the stored pseudo entry/exit; the constructor re-adds them.
        const auto first = field<std::size_t>(j, "pseudo_from", "task graph");
        if (first < tasks.size()) {
            tasks.resize(first);
            std::erase_if(edges, [first](const DataLink& e) { return e.src >= first || e.dst >= first; });
        }
    }
    return TaskGraph(std::move(tasks), std::move(edges));
}

DeviceNetwork network_from_json(const json& j) {
    check_format(j, "device network");
    std::vector<Device> devices;
    const auto& jd = member(j, "devices", "device network");
    for (std::size_t i = 0; i < jd.size(); ++i) {
        const std::string where = "devices[" + std::to_string(i) + "]";
        Device d;
        d.id = field<DeviceId>(jd[i], "id", where);
        d.speed = field<double>(jd[i], "speed", where);
        if (jd[i].contains("hw_support")) d.hw_support = field<std::vector<HwTag>>(jd[i], "hw_support", where);
        devices.push_back(std::move(d));
    }
    const std::size_t m = devices.size();
    std::vector<Link> links(m * m);
    std::vector<bool> given(m * m, false);
    if (j.contains("links")) {
        const auto& jl = j.at("links");
        for (std::size_t i = 0; i < jl.size(); ++i) {
            const std::string where = "links[" + std::to_string(i) + "]";
            const auto src = field<DeviceId>(jl[i], "src", where);
            const auto dst = field<DeviceId>(jl[i], "dst", where);
            if (src >= m || dst >= m) throw Error(where + ": unknown device");
            if (src == dst) continue;  // diagonal is implied local
            links[src * m + dst] =
                Link{field<double>(jl[i], "bandwidth", where), field<double>(jl[i], "delay", where), false};
            given[src * m + dst] = true;
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < m; ++l) {
            if (k != l && !given[k * m + l]) {
                throw Error("links: missing d" + std::to_string(k) + "->d" + std::to_string(l));
            }
        }
    }
    return DeviceNetwork(std::move(devices), std::move(links));
}

ProblemInstance instance_from_json(const json& j) {
    check_format(j, "problem instance");
    return ProblemInstance(graph_from_json(member(j, "graph", "problem instance")),
                           network_from_json(member(j, "network", "problem instance")));
}

Placement placement_from_json(const json& j) {
    try {
        return Placement{j.get<std::vector<DeviceId>>()};
    } catch (const json::exception& e) {
        throw Error(std::string("placement: ") + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace giph
