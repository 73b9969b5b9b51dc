#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "giph/commands.hpp"
#include "giph/dataset.hpp"
#include "giph/json_io.hpp"
#include "giph/report.hpp"

using namespace giph;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path = fs::temp_directory_path() / (std::string("giph_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_params(const fs::path& dir, const nlohmann::json& j) {
    const auto p = dir / "params.in.json";
    write_json_file(p, j);
    return p;
}

nlohmann::json small_params() {
    return {{"graph", {{"M", {4, 6}}, {"alpha", 1.0}}},
            {"network", {{"m", 3}}},
            {"graphs_per_setting", 3},
            {"networks_per_setting", 1}};
}

// dataset + a 2-episode run shared by the command tests
struct Pipeline {
    fs::path dataset, run;
    explicit Pipeline(const fs::path& root) {
        dataset = root / "data";
        cmd_generate(GenerateOptions{write_params(root, small_params()), dataset, 5});
        TrainOptions t;
        t.dataset = dataset;
        t.logdir = root / "runs";
        t.run_name = "r";
        t.episodes = 2;
        t.eval_every = 1;
        t.eval_cases = 1;
        t.common.seed = 9;
        run = cmd_train(t);
    }
};

std::size_t oracle_depth(const TaskGraph& g, TaskId u, std::map<TaskId, std::size_t>& memo) {
    if (auto it = memo.find(u); it != memo.end()) return it->second;
    std::size_t best = 0;
    for (const auto& e : g.edges()) {
        if (e.src == u) best = std::max(best, oracle_depth(g, e.dst, memo));
    }
    return memo[u] = best + 1;
}

CaseResult row(const std::string& policy, std::size_t depth, double score) {
    CaseResult r;
    r.policy = policy;
    r.depth = depth;
    r.best_score = score;
    r.initial_score = score;
    r.initial = r.best = Placement{{0, 1}};
    return r;
}

} // namespace

TEST(Generate, SameSeedGivesIdenticalFiles) {
    TempDir tmp;
    const auto params = write_params(tmp.path, small_params());
    cmd_generate({params, tmp.path / "a", 7});
    cmd_generate({params, tmp.path / "b", 7});
    cmd_generate({params, tmp.path / "c", 8});
    for (const char* f : {"train_graphs.json", "test_graphs.json", "train_networks.json", "test_networks.json"}) {
        EXPECT_EQ(slurp(tmp.path / "a" / f), slurp(tmp.path / "b" / f)) << f;
    }
    EXPECT_NE(slurp(tmp.path / "a" / "train_graphs.json"), slurp(tmp.path / "c" / "train_graphs.json"));
}

TEST(Generate, EqualSplitAndSingleNetwork) {
    TempDir tmp;
    nlohmann::json j{{"graph", {{"M", 5}}}, {"network", {{"m", 3}}}, {"graphs_per_setting", 300}};
    cmd_generate({write_params(tmp.path, j), tmp.path / "d", 1});
    const auto train = load_split(tmp.path / "d", "train");
    const auto test = load_split(tmp.path / "d", "test");
    EXPECT_EQ(train.graphs.size(), 150u);
    EXPECT_EQ(test.graphs.size(), 150u);
    EXPECT_EQ(train.networks.size(), 1u);
    EXPECT_EQ(test.networks.size(), 1u);
    // disjoint seed streams: no test graph repeats a training graph
    std::set<std::string> seen;
    for (const auto& g : train.graphs) seen.insert(to_json(*g).dump());
    for (const auto& g : test.graphs) EXPECT_FALSE(seen.count(to_json(*g).dump()));
}

TEST(Generate, CrossProductCountsSettings) {
    const auto p = parse_dataset_params(small_params());
    EXPECT_EQ(p.graph_settings.size(), 2u);
    EXPECT_EQ(p.network_settings.size(), 1u);
    const auto d = generate_dataset(p, 3);
    EXPECT_EQ(d.train.graphs.size() + d.test.graphs.size(), 6u);
}

TEST(Generate, MalformedParamsNameTheField) {
    TempDir tmp;
    nlohmann::json j{{"graph", {{"alpha", "wide"}}}};
    try {
        cmd_generate({write_params(tmp.path, j), tmp.path / "d", 1});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("graph.alpha"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_dataset_params({{"network", {{"bogus", 1}}}}), Error);
}

TEST(Commands, TestWritesOneRowPerPolicyWithSharedStart) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    const auto before = slurp(pl.run / "checkpoints" / "policy_2");
    TestOptions t;
    t.run = pl.run;
    t.cases = 1;
    const auto out = cmd_test(t);
    const auto rows = read_results_csv(out / "results.csv");
    ASSERT_EQ(rows.size(), 4u);
    std::set<std::string> policies;
    for (const auto& r : rows) {
        policies.insert(r.policy);
        EXPECT_EQ(r.instance_id, 0u);
        EXPECT_EQ(format_placement(r.initial), format_placement(rows[0].initial));
        EXPECT_LE(r.best_score, r.initial_score + 1e-12);
    }
    EXPECT_EQ(policies.size(), 4u);
    EXPECT_TRUE(fs::exists(out / "curves.csv"));
    EXPECT_TRUE(fs::exists(out / "args.json"));
    // testing leaves the training artifacts alone
    EXPECT_EQ(slurp(pl.run / "checkpoints" / "policy_2"), before);
    EXPECT_EQ(list_checkpoints(pl.run), (std::vector<std::size_t>{1, 2}));
}

TEST(Commands, AdaptWithoutChurnMatchesTest) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    TestOptions t;
    t.run = pl.run;
    t.cases = 2;
    const auto plain = read_results_csv(cmd_test(t) / "results.csv");
    AdaptOptions a;
    a.test = t;
    a.test.name = "adapt";
    a.churn.steps = 0;
    const auto adapted = read_results_csv(cmd_adapt(a) / "results.csv");
    ASSERT_EQ(plain.size(), adapted.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        EXPECT_EQ(plain[i].policy, adapted[i].policy);
        EXPECT_EQ(plain[i].best_score, adapted[i].best_score);
        EXPECT_EQ(adapted[i].stage, 0u);
    }
}

TEST(Commands, AdaptReportsEveryStage) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    AdaptOptions a;
    a.test.run = pl.run;
    a.test.cases = 1;
    a.test.policies = {"random-sampling"};
    a.churn = ChurnConfig{2, 1, 0.5};
    const auto out = cmd_adapt(a);
    const auto rows = read_results_csv(out / "results.csv");
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_EQ(rows[s].stage, s);
        EXPECT_TRUE(fs::exists(out / ("network_stage_" + std::to_string(s) + ".json")));
    }
}

TEST(Commands, BaselineNeedsNoRun) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    BaselineOptions b;
    b.name = "heft";
    b.dataset = pl.dataset;
    b.logdir = tmp.path / "runs";
    b.run_name = "heft";
    const auto rows = read_results_csv(cmd_baseline(b) / "results.csv");
    EXPECT_EQ(rows.size(), load_split(pl.dataset, "test").graphs.size());
    b.name = "giph";
    EXPECT_THROW(cmd_baseline(b), Error);
}

TEST(Commands, ExplicitInitialPlacementIsShared) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    const auto inst = make_instances(load_split(pl.dataset, "test")).front();
    Placement start;
    for (TaskId i = 0; i < inst.graph().size(); ++i) start.assignment.push_back(inst.feasible(i).back());
    TestOptions t;
    t.run = pl.run;
    t.cases = 1;
    t.common.initial = start;
    const auto rows = read_results_csv(cmd_test(t) / "results.csv");
    ASSERT_EQ(rows.size(), 4u);
    const double start_score = slr(simulate(inst, start).makespan, inst);
    for (const auto& r : rows) {
        EXPECT_EQ(r.initial, start);
        EXPECT_NEAR(r.initial_score, start_score, 1e-12);
    }
    t.common.initial = Placement{{0}};
    EXPECT_THROW(cmd_test(t), Error);
}

TEST(Commands, MissingRunOrCheckpointIsAnError) {
    TempDir tmp;
    TestOptions t;
    t.run = tmp.path / "nope";
    EXPECT_THROW(cmd_test(t), Error);
    const Pipeline pl(tmp.path);
    t.run = pl.run;
    t.checkpoint = 7;
    EXPECT_THROW(cmd_test(t), Error);
    fs::remove_all(pl.run / "checkpoints");
    t.checkpoint.reset();
    EXPECT_THROW(cmd_test(t), Error);
}

TEST(Report, SingleRowHasZeroSpread) {
    const std::vector<CaseResult> rows{row("heft", 3, 1.75)};
    const auto rep = summarize(rows);
    ASSERT_EQ(rep.by_policy.size(), 1u);
    EXPECT_EQ(rep.by_policy[0].mean, 1.75);
    EXPECT_EQ(rep.by_policy[0].std, 0.0);
    EXPECT_EQ(rep.by_policy[0].count, 1u);
}

TEST(Report, MeanAndPopulationStd) {
    const std::vector<CaseResult> rows{row("a", 2, 1.0), row("a", 2, 2.0), row("a", 3, 4.0)};
    const auto rep = summarize(rows);
    const double mean = 7.0 / 3.0;
    const double var = ((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) + (4 - mean) * (4 - mean)) / 3.0;
    EXPECT_NEAR(rep.by_policy[0].mean, mean, 1e-12);
    EXPECT_NEAR(rep.by_policy[0].std, std::sqrt(var), 1e-12);
    ASSERT_EQ(rep.by_depth.size(), 2u);
    EXPECT_NEAR(rep.by_depth[0].mean, 1.5, 1e-12);
    EXPECT_NEAR(rep.by_depth[0].std, 0.5, 1e-12);
}

TEST(Report, DepthBucketsMatchIndependentGrouping) {
    TempDir tmp;
    const Pipeline pl(tmp.path);
    BaselineOptions b;
    b.dataset = pl.dataset;
    b.logdir = tmp.path / "runs";
    std::vector<CaseResult> rows;
    for (const char* name : {"heft", "random-task-eft"}) {
        b.name = name;
        b.run_name = name;
        auto r = read_results_csv(cmd_baseline(b) / "results.csv");
        rows.insert(rows.end(), r.begin(), r.end());
    }
    const auto instances = make_instances(load_split(pl.dataset, "test"));
    std::set<std::pair<std::string, std::size_t>> want;
    for (const auto& r : rows) {
        std::map<TaskId, std::size_t> memo;
        const auto& g = instances[r.instance_id].graph();
        std::size_t d = 0;
        for (TaskId u = 0; u < g.size(); ++u) d = std::max(d, oracle_depth(g, u, memo));
        EXPECT_EQ(r.depth, d);
        want.emplace(r.policy, d);
    }
    const auto rep = summarize(rows);
    std::set<std::pair<std::string, std::size_t>> got;
    for (const auto& s : rep.by_depth) got.emplace(s.policy, s.key);
    EXPECT_EQ(got, want);
    EXPECT_EQ(rep.by_depth.size(), want.size());
    EXPECT_EQ(rep.by_policy.size(), 2u);
}

TEST(Report, RoundTripsItsOwnOutputs) {
    TempDir tmp;
    std::vector<CaseResult> rows{row("a", 2, 1.25), row("b", 4, 3.5)};
    rows[1].instance_id = 1;
    rows[1].stage = 2;
    rows[1].steps = 9;
    rows[1].best = Placement{{1, 0}};
    {
        std::ofstream out(tmp.path / "results.csv");
        write_results_csv(out, rows);
    }
    const auto back = read_results_csv(tmp.path / "results.csv");
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].policy, rows[i].policy);
        EXPECT_EQ(back[i].instance_id, rows[i].instance_id);
        EXPECT_EQ(back[i].stage, rows[i].stage);
        EXPECT_EQ(back[i].steps, rows[i].steps);
        EXPECT_EQ(back[i].best_score, rows[i].best_score);
        EXPECT_EQ(back[i].best, rows[i].best);
    }
    const auto out = cmd_report({{tmp.path / "results.csv"}, tmp.path / "rep"});
    const auto rep = report_from_json(read_json_file(out / "summary.json"));
    EXPECT_EQ(rep, summarize(rows));
    for (const char* f : {"summary.txt", "plot_policy.csv", "plot_depth.csv", "plot_stage.csv"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
}

TEST(Report, SchemaMismatchIsAnError) {
    std::istringstream bad_header("instance_id,policy\n0,heft\n");
    EXPECT_THROW(read_results_csv(bad_header, "x.csv"), Error);
    std::istringstream short_row(std::string(kResultsHeader) + "\n0,heft,0\n");
    try {
        read_results_csv(short_row, "y.csv");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("y.csv"), std::string::npos) << e.what();
    }
    EXPECT_THROW(cmd_report({{}, {}}), Error);
}
