#include "giph/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace giph {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::size_t to_count(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') throw Error(where + ": expected a count, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw Error(where + ": expected a number, got '" + s + "'");
    return v;
}

SummaryRow finish(const std::string& policy, std::size_t key, const std::vector<double>& values) {
    SummaryRow row{policy, key, values.size(), 0.0, 0.0};
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / static_cast<double>(values.size()));
    return row;
}

// Groups keep the first-seen policy order so tables follow the result file.
template <class KeyFn>
std::vector<SummaryRow> group(std::span<const CaseResult> results, KeyFn key) {
    std::vector<std::string> order;
    std::map<std::string, std::map<std::size_t, std::vector<double>>> buckets;
    for (const auto& r : results) {
        if (!buckets.count(r.policy)) order.push_back(r.policy);
        buckets[r.policy][key(r)].push_back(r.best_score);
    }
    std::vector<SummaryRow> rows;
    for (const auto& p : order) {
        for (const auto& [k, values] : buckets[p]) rows.push_back(finish(p, k, values));
    }
    return rows;
}

void write_rows_csv(const std::filesystem::path& path, const char* key, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "policy";
    if (key) out << ',' << key;
    out << ",count,mean,std\n";
    for (const auto& r : rows) {
        out << r.policy;
        if (key) out << ',' << r.key;
        out << ',' << r.count << ',' << num(r.mean) << ',' << num(r.std) << '\n';
    }
}

nlohmann::json rows_json(const std::vector<SummaryRow>& rows, const char* key) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json o{{"policy", r.policy}, {"count", r.count}, {"mean", r.mean}, {"std", r.std}};
        if (key) o[key] = r.key;
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<SummaryRow> rows_from_json(const nlohmann::json& j, const char* name, const char* key) {
    std::vector<SummaryRow> rows;
    if (!j.contains(name) || !j.at(name).is_array()) throw Error(std::string("summary: missing '") + name + "'");
    for (const auto& o : j.at(name)) {
        try {
            SummaryRow r;
            r.policy = o.at("policy").get<std::string>();
            r.key = key ? o.at(key).get<std::size_t>() : 0;
            r.count = o.at("count").get<std::size_t>();
            r.mean = o.at("mean").get<double>();
            r.std = o.at("std").get<double>();
            rows.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("summary.") + name + ": " + e.what());
        }
    }
    return rows;
}

void table(std::ostream& out, const char* title, const char* key, const std::vector<SummaryRow>& rows) {
    out << title << '\n';
    char buf[160];
    if (key) {
        std::snprintf(buf, sizeof buf, "  %-18s %6s %6s %10s %10s\n", "policy", key, "n", "mean", "std");
    } else {
        std::snprintf(buf, sizeof buf, "  %-18s %6s %10s %10s\n", "policy", "n", "mean", "std");
    }
    out << buf;
    for (const auto& r : rows) {
        if (key) {
            std::snprintf(buf, sizeof buf, "  %-18s %6zu %6zu %10.4f %10.4f\n", r.policy.c_str(), r.key, r.count,
                          r.mean, r.std);
        } else {
            std::snprintf(buf, sizeof buf, "  %-18s %6zu %10.4f %10.4f\n", r.policy.c_str(), r.count, r.mean, r.std);
        }
        out << buf;
    }
}

} // namespace

std::string format_placement(const Placement& placement) {
    std::string s;
    for (std::size_t i = 0; i < placement.size(); ++i) {
        if (i) s += '-';
        s += std::to_string(placement[i]);
    }
    return s;
}

Placement parse_placement(const std::string& text) {
    Placement p;
    if (text.empty()) return p;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, '-')) p.assignment.push_back(to_count(cell, "placement"));
    return p;
}

void write_results_csv(std::ostream& out, std::span<const CaseResult> results) {
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
        out << r.instance_id << ',' << r.policy << ',' << r.stage << ',' << r.depth << ',' << r.steps << ','
            << num(r.initial_score) << ',' << num(r.best_score) << ',' << format_placement(r.initial) << ','
            << format_placement(r.best) << '\n';
    }
}

std::vector<CaseResult> read_results_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw Error(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultsHeader) throw Error(source + ":1: unexpected header, expected '" + kResultsHeader + "'");
    std::vector<CaseResult> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto cells = split_line(line);
        if (cells.size() != 9) {
            throw Error(where + ": expected 9 columns, got " + std::to_string(cells.size()));
        }
        CaseResult r;
        r.instance_id = to_count(cells[0], where + " instance_id");
        r.policy = cells[1];
        if (r.policy.empty()) throw Error(where + ": empty policy");
        r.stage = to_count(cells[2], where + " stage");
        r.depth = to_count(cells[3], where + " depth");
        r.steps = to_count(cells[4], where + " steps");
        r.initial_score = to_double(cells[5], where + " initial_score");
        r.best_score = to_double(cells[6], where + " best_score");
        r.initial = parse_placement(cells[7]);
        r.best = parse_placement(cells[8]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<CaseResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_results_csv(in, path.string());
}

void write_curves_csv(std::ostream& out, std::span<const CaseResult> results) {
    out << "policy,stage,instance_id,step,best_score\n";
    for (const auto& r : results) {
        for (std::size_t s = 0; s < r.curve.size(); ++s) {
            out << r.policy << ',' << r.stage << ',' << r.instance_id << ',' << s << ',' << num(r.curve[s]) << '\n';
        }
    }
}

void write_timings_csv(std::ostream& out, std::span<const CaseResult> results) {
    out << "instance_id,policy,stage,wall_ms\n";
    for (const auto& r : results) {
        out << r.instance_id << ',' << r.policy << ',' << r.stage << ',' << short_num(r.wall_ms) << '\n';
    }
}

Report summarize(std::span<const CaseResult> results) {
    Report rep;
    rep.by_policy = group(results, [](const CaseResult&) { return std::size_t{0}; });
    rep.by_depth = group(results, [](const CaseResult& r) { return r.depth; });
    rep.by_stage = group(results, [](const CaseResult& r) { return r.stage; });
    return rep;
}

nlohmann::json to_json(const Report& report) {
    return {{"by_policy", rows_json(report.by_policy, nullptr)},
            {"by_depth", rows_json(report.by_depth, "depth")},
            {"by_stage", rows_json(report.by_stage, "stage")}};
}

Report report_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("summary: expected a JSON object");
    return Report{rows_from_json(j, "by_policy", nullptr), rows_from_json(j, "by_depth", "depth"),
                  rows_from_json(j, "by_stage", "stage")};
}

std::string format_tables(const Report& report) {
    std::ostringstream out;
    table(out, "best score by policy", nullptr, report.by_policy);
    out << '\n';
    table(out, "best score by graph depth", "depth", report.by_depth);
    out << '\n';
    table(out, "best score by churn stage", "stage", report.by_stage);
    return out.str();
}

void write_report(const std::filesystem::path& dir, const Report& report) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "summary.json");
        if (!out) throw Error("cannot write " + (dir / "summary.json").string());
        out << to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "summary.txt");
        out << format_tables(report);
    }
    write_rows_csv(dir / "plot_policy.csv", nullptr, report.by_policy);
    write_rows_csv(dir / "plot_depth.csv", "depth", report.by_depth);
    write_rows_csv(dir / "plot_stage.csv", "stage", report.by_stage);
}

} // namespace giph
