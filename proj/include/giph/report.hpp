#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "giph/evaluation.hpp"

namespace giph {

// results.csv columns, in order.
inline constexpr const char* kResultsHeader =
    "instance_id,policy,stage,depth,steps,initial_score,best_score,initial_placement,best_placement";

void write_results_csv(std::ostream& out, std::span<const CaseResult> results);
/// Throws with the source name and line on schema mismatch.
std::vector<CaseResult> read_results_csv(std::istream& in, const std::string& source);
std::vector<CaseResult> read_results_csv(const std::filesystem::path& path);

/// Long format: policy,stage,instance_id,step,best_score.
void write_curves_csv(std::ostream& out, std::span<const CaseResult> results);
/// Wall-clock times kept apart from results so result files stay reproducible.
void write_timings_csv(std::ostream& out, std::span<const CaseResult> results);

std::string format_placement(const Placement& placement);
Placement parse_placement(const std::string& text);

struct SummaryRow {
    std::string policy;
    std::size_t key = 0;  // depth or stage; 0 for the overall table
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct Report {
    std::vector<SummaryRow> by_policy;
    std::vector<SummaryRow> by_depth;
    std::vector<SummaryRow> by_stage;
    friend bool operator==(const Report&, const Report&) = default;
};

/// Mean/std of best_score per policy, per (policy, depth) and per (policy, stage).
Report summarize(std::span<const CaseResult> results);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);
std::string format_tables(const Report& report);

/// summary.json, summary.txt and plot_{policy,depth,stage}.csv.
void write_report(const std::filesystem::path& dir, const Report& report);

} // namespace giph
