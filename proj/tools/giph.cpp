// Command-line front end: generate, train, test, baseline, adapt, report.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "giph/commands.hpp"
#include "giph/report.hpp"

namespace {

struct CommonFlags {
    giph::CommonOptions options;
    std::string objective = "makespan";
    std::string initial;
    CLI::Option* objective_flag = nullptr;

    void add_to(CLI::App& app, bool search = true) {
        app.add_option("--seed", options.seed, "Base random seed")->capture_default_str();
        app.add_option("--noise", options.noise, "Latency noise sigma in [0, 1)")->capture_default_str();
        objective_flag = app.add_option("--objective", objective, "makespan or total_cost")
                             ->check(CLI::IsMember({"makespan", "total_cost"}))
                             ->capture_default_str();
        if (search) {
            app.add_flag("--greedy", options.greedy, "Take the highest-scoring action instead of sampling");
            app.add_flag("--plateau-stop", options.plateau_stop, "Stop an episode once the objective plateaus");
            app.add_option("--T-factor", options.T_factor, "Search budget per case as a multiple of |V|")
                ->capture_default_str();
            app.add_option("--initial", initial, "Start placement for every case, device ids joined by '-'");
        }
    }

    giph::CommonOptions resolve() const {
        giph::CommonOptions o = options;
        o.objective = giph::parse_objective(objective);
        if (!initial.empty()) o.initial = giph::parse_placement(initial);
        return o;
    }
};

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-based placement search: data generation, training and evaluation"};
    app.require_subcommand(1);

    giph::GenerateOptions gen;
    std::string gen_params, gen_out;
    auto* generate = app.add_subcommand("generate", "Generate a train/test dataset from a parameter file");
    generate->add_option("--params", gen_params, "Parameter JSON file")->required();
    generate->add_option("--out,--dataset", gen_out, "Output dataset directory")->required();
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();

    giph::TrainOptions tr;
    CommonFlags tr_common;
    std::string tr_dataset, tr_logdir = "runs", tr_policy = "giph", tr_resume;
    auto* train = app.add_subcommand("train", "Train a placement policy");
    tr_common.add_to(*train, false);
    train->add_option("--T-factor", tr_common.options.T_factor, "Episode length as a multiple of |V|")
        ->capture_default_str();
    train->add_option("--dataset", tr_dataset, "Dataset directory");
    train->add_option("--logdir", tr_logdir, "Directory receiving run folders")->capture_default_str();
    train->add_option("--run-name", tr.run_name, "Run folder name (default: timestamp)");
    train->add_option("--episodes", tr.episodes, "Training episodes")->capture_default_str();
    train->add_option("--eval-every", tr.eval_every, "Evaluate and checkpoint every N episodes (0: end only)")
        ->capture_default_str();
    train->add_option("--eval-cases", tr.eval_cases, "Held-out instances used for periodic evaluation")
        ->capture_default_str();
    train->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--gamma", tr.gamma, "Discount factor")->capture_default_str();
    train->add_option("--policy", tr_policy, "giph or giph-task-eft")
        ->check(CLI::IsMember({"giph", "giph-task-eft"}))
        ->capture_default_str();
    train->add_option("--message-steps", tr.message_steps, "Message-passing rounds (0: full sweep)")
        ->capture_default_str();
    train->add_option("--resume", tr_resume, "Continue the given run folder from its latest checkpoint");

    giph::TestOptions te;
    CommonFlags te_common;
    std::string te_run, te_dataset;
    std::size_t te_checkpoint = 0;
    auto* test = app.add_subcommand("test", "Evaluate a trained run against baselines");
    te_common.add_to(*test);
    test->add_option("--run,--logdir", te_run, "Run folder")->required();
    test->add_option("--dataset", te_dataset, "Dataset directory (default: the training dataset)");
    auto* te_ckpt = test->add_option("--checkpoint", te_checkpoint, "Checkpoint episode (default: latest)");
    test->add_option("--cases", te.cases, "Number of test instances (0: all)")->capture_default_str();
    test->add_option("--policies", te.policies, "Policies to compare")->delimiter(',');
    test->add_option("--name", te.name, "Output subfolder")->capture_default_str();

    giph::BaselineOptions bl;
    CommonFlags bl_common;
    std::string bl_dataset, bl_logdir = "runs";
    auto* baseline = app.add_subcommand("baseline", "Evaluate a non-learned baseline");
    bl_common.add_to(*baseline);
    baseline->add_option("name", bl.name, "heft, random-sampling or random-task-eft")->required();
    baseline->add_option("--dataset", bl_dataset, "Dataset directory")->required();
    baseline->add_option("--logdir", bl_logdir, "Directory receiving run folders")->capture_default_str();
    baseline->add_option("--run-name", bl.run_name, "Run folder name (default: timestamp)");
    baseline->add_option("--cases", bl.cases, "Number of test instances (0: all)")->capture_default_str();

    giph::AdaptOptions ad;
    ad.test.name = "adapt";
    CommonFlags ad_common;
    std::string ad_run, ad_dataset;
    std::size_t ad_checkpoint = 0;
    auto* adapt = app.add_subcommand("adapt", "Re-evaluate a trained run while the device network churns");
    ad_common.add_to(*adapt);
    adapt->add_option("--run,--logdir", ad_run, "Run folder")->required();
    adapt->add_option("--dataset", ad_dataset, "Dataset directory (default: the training dataset)");
    auto* ad_ckpt = adapt->add_option("--checkpoint", ad_checkpoint, "Checkpoint episode (default: latest)");
    adapt->add_option("--cases", ad.test.cases, "Number of test graphs (0: all)")->capture_default_str();
    adapt->add_option("--policies", ad.test.policies, "Policies to compare")->delimiter(',');
    adapt->add_option("--name", ad.test.name, "Output subfolder")->capture_default_str();
    adapt->add_option("--churn-steps", ad.churn.steps, "Churn steps after stage 0")->capture_default_str();
    adapt->add_option("--remove", ad.churn.remove, "Devices replaced per churn step")->capture_default_str();
    adapt->add_option("--capacity-factor", ad.churn.capacity_factor, "Capacity of replacement devices")
        ->capture_default_str();

    giph::ReportOptions rep;
    std::vector<std::string> rep_results;
    std::string rep_out;
    auto* report = app.add_subcommand("report", "Summarize results files");
    report->add_option("results", rep_results, "results.csv files")->required();
    report->add_option("--out", rep_out, "Output directory (default: <first results dir>/report)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            gen.params = gen_params;
            gen.out = gen_out;
            giph::cmd_generate(gen);
            std::cout << gen.out.string() << '\n';
        } else if (*train) {
            tr.common = tr_common.resolve();
            tr.dataset = tr_dataset;
            tr.logdir = tr_logdir;
            tr.policy = giph::parse_policy_kind(tr_policy);
            if (!tr_resume.empty()) tr.resume = tr_resume;
            std::cout << giph::cmd_train(tr).string() << '\n';
        } else if (*test) {
            te.common = te_common.resolve();
            te.inherit_objective = te_common.objective_flag->count() == 0;
            te.run = te_run;
            te.dataset = te_dataset;
            if (te_ckpt->count()) te.checkpoint = te_checkpoint;
            std::cout << giph::cmd_test(te).string() << '\n';
        } else if (*baseline) {
            bl.common = bl_common.resolve();
            bl.dataset = bl_dataset;
            bl.logdir = bl_logdir;
            std::cout << giph::cmd_baseline(bl).string() << '\n';
        } else if (*adapt) {
            ad.test.common = ad_common.resolve();
            ad.test.inherit_objective = ad_common.objective_flag->count() == 0;
            ad.test.run = ad_run;
            ad.test.dataset = ad_dataset;
            if (ad_ckpt->count()) ad.test.checkpoint = ad_checkpoint;
            std::cout << giph::cmd_adapt(ad).string() << '\n';
        } else if (*report) {
            for (const auto& r : rep_results) rep.results.emplace_back(r);
            rep.out = rep_out;
            const auto dir = giph::cmd_report(rep);
            std::ifstream txt(dir / "summary.txt");
            std::cout << txt.rdbuf();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
