#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "giph/evaluation.hpp"
#include "giph/training.hpp"

namespace giph {

// Options shared by every evaluation-style command.
struct CommonOptions {
    std::uint64_t seed = 0;
    double noise = 0.0;
    Objective objective = Objective::Makespan;
    bool greedy = false;
    bool plateau_stop = false;
    double T_factor = 2.0;
    std::optional<Placement> initial;  // shared start for every case
};

struct GenerateOptions {
    std::filesystem::path params;
    std::filesystem::path out;
    std::uint64_t seed = 0;
};

/// Writes {train,test}_{graphs,networks}.json and params.json into `out`.
void cmd_generate(const GenerateOptions& options);

struct TrainOptions {
    CommonOptions common;
    std::filesystem::path dataset;
    std::filesystem::path logdir = "runs";
    std::string run_name;  // empty: timestamp
    std::size_t episodes = 200;
    std::size_t eval_every = 50;
    std::size_t eval_cases = 20;
    double lr = 0.01;
    double gamma = 0.97;
    PolicyKind policy = PolicyKind::Giph;
    std::size_t message_steps = 0;  // 0: full sweep
    std::optional<std::filesystem::path> resume;  // run folder to continue
};

/// Returns the run folder. Checkpoints go to <run>/checkpoints as
/// policy_<episode>, embedding_<episode> and optimizer_<episode>.
std::filesystem::path cmd_train(const TrainOptions& options);

struct TestOptions {
    CommonOptions common;
    std::filesystem::path run;
    std::filesystem::path dataset;
    std::optional<std::size_t> checkpoint;  // episode; default: latest
    std::size_t cases = 0;  // 0: every test instance
    std::vector<std::string> policies;  // default: the trained policy and all baselines
    std::string name = "test";
    /// Evaluate with the objective the run was trained on instead of common.objective.
    bool inherit_objective = false;
};

/// Writes <run>/<name>/{results,curves,timings}.csv and args.json; returns
/// that folder.
std::filesystem::path cmd_test(const TestOptions& options);

struct BaselineOptions {
    CommonOptions common;
    std::string name;
    std::filesystem::path dataset;
    std::filesystem::path logdir = "runs";
    std::string run_name;
    std::size_t cases = 0;
};

std::filesystem::path cmd_baseline(const BaselineOptions& options);

struct AdaptOptions {
    TestOptions test;
    ChurnConfig churn;
};

/// Churns the first test network and re-evaluates at every stage.
std::filesystem::path cmd_adapt(const AdaptOptions& options);

struct ReportOptions {
    std::vector<std::filesystem::path> results;
    std::filesystem::path out;
};

std::filesystem::path cmd_report(const ReportOptions& options);

/// Episodes with a complete checkpoint in <run>/checkpoints, ascending.
std::vector<std::size_t> list_checkpoints(const std::filesystem::path& run);

} // namespace giph
