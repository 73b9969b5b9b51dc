#include "giph/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>

#include "giph/baselines.hpp"
#include "giph/dataset.hpp"
#include "giph/json_io.hpp"
#include "giph/report.hpp"

namespace giph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_run_folder(const fs::path& logdir, const std::string& name) {
    if (!name.empty()) {
        fs::create_directories(logdir / name);
        return logdir / name;
    }
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "run_%Y%m%d_%H%M%S", &tm);
    fs::path dir = logdir / stamp;
    for (int k = 2; fs::exists(dir); ++k) dir = logdir / (std::string(stamp) + "_" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

json common_json(const CommonOptions& c) {
    return {{"seed", c.seed},         {"noise", c.noise},
            {"objective", objective_name(c.objective)},
            {"greedy", c.greedy},     {"plateau_stop", c.plateau_stop},
            {"T_factor", c.T_factor},
            {"initial", c.initial ? nlohmann::json(format_placement(*c.initial)) : nlohmann::json()}};
}

json train_json(const TrainOptions& o) {
    return {{"command", "train"},
            {"common", common_json(o.common)},
            {"dataset", o.dataset.string()},
            {"episodes", o.episodes},
            {"eval_every", o.eval_every},
            {"eval_cases", o.eval_cases},
            {"lr", o.lr},
            {"gamma", o.gamma},
            {"policy", policy_kind_name(o.policy)},
            {"message_steps", o.message_steps}};
}

TrainOptions train_from_json(const json& j, const fs::path& source) {
    try {
        TrainOptions o;
        const auto& c = j.at("common");
        o.common.seed = c.at("seed").get<std::uint64_t>();
        o.common.noise = c.at("noise").get<double>();
        o.common.objective = parse_objective(c.at("objective").get<std::string>());
        o.common.greedy = c.at("greedy").get<bool>();
        o.common.plateau_stop = c.at("plateau_stop").get<bool>();
        o.common.T_factor = c.at("T_factor").get<double>();
        o.dataset = j.at("dataset").get<std::string>();
        o.episodes = j.at("episodes").get<std::size_t>();
        o.eval_every = j.at("eval_every").get<std::size_t>();
        o.eval_cases = j.at("eval_cases").get<std::size_t>();
        o.lr = j.at("lr").get<double>();
        o.gamma = j.at("gamma").get<double>();
        o.policy = parse_policy_kind(j.at("policy").get<std::string>());
        o.message_steps = j.at("message_steps").get<std::size_t>();
        return o;
    } catch (const json::exception& e) {
        throw Error(source.string() + ": " + e.what());
    }
}

TrainConfig to_config(const TrainOptions& o) {
    TrainConfig c;
    c.episodes = o.episodes;
    c.lr = o.lr;
    c.gamma = o.gamma;
    c.T_factor = o.common.T_factor;
    c.eval_every = o.eval_every;
    c.seed = o.common.seed;
    c.objective = o.common.objective;
    c.noise = o.common.noise;
    c.kind = o.policy;
    c.embed.steps = o.message_steps;
    return c;
}

fs::path checkpoint_file(const fs::path& run, const char* part, std::size_t episode) {
    return run / "checkpoints" / (std::string(part) + "_" + std::to_string(episode));
}

std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_log_header(std::ostream& out) { out << "episode,instance_id,return,final_score,eval_score\n"; }

void write_log_row(std::ostream& out, const TrainLogRow& r) {
    out << r.episode << ',' << r.instance_id << ',' << csv_num(r.ret) << ',' << csv_num(r.final_score) << ','
        << csv_num(r.eval_score) << '\n';
}

// Keeps the header and the rows of episodes before `episode`.
void truncate_log(const fs::path& path, std::size_t episode) {
    std::vector<std::string> kept;
    {
        std::ifstream in(path);
        std::string line;
        if (std::getline(in, line)) kept.push_back(line);
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            if (std::stoull(line.substr(0, comma)) < episode) kept.push_back(line);
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (kept.empty()) write_log_header(out);
    for (const auto& l : kept) out << l << '\n';
}

std::vector<ProblemInstance> first_cases(std::vector<ProblemInstance> all, std::size_t cases) {
    if (cases > 0 && cases < all.size()) all.erase(all.begin() + static_cast<std::ptrdiff_t>(cases), all.end());
    return all;
}

struct LoadedPolicy {
    TrainOptions trained;
    PolicyParams params;
    std::size_t episode = 0;
};

LoadedPolicy load_run(const fs::path& run, std::optional<std::size_t> checkpoint) {
    if (!fs::is_directory(run)) throw Error("run folder not found: " + run.string());
    const fs::path args = run / "args.json";
    LoadedPolicy lp;
    lp.trained = train_from_json(read_json_file(args), args);
    const auto episodes = list_checkpoints(run);
    if (episodes.empty()) throw Error("no checkpoint in " + (run / "checkpoints").string());
    lp.episode = checkpoint ? *checkpoint : episodes.back();
    if (!std::binary_search(episodes.begin(), episodes.end(), lp.episode)) {
        throw Error("checkpoint " + std::to_string(lp.episode) + " not found in " + (run / "checkpoints").string());
    }
    lp.params.fill(0.0);
    load_params(checkpoint_file(run, "embedding", lp.episode), lp.params);
    load_params(checkpoint_file(run, "policy", lp.episode), lp.params);
    return lp;
}

void write_results(const fs::path& dir, const std::vector<CaseResult>& results, const json& args) {
    fs::create_directories(dir);
    write_json_file(dir / "args.json", args);
    std::ofstream r(dir / "results.csv", std::ios::binary);
    write_results_csv(r, results);
    std::ofstream c(dir / "curves.csv", std::ios::binary);
    write_curves_csv(c, results);
    std::ofstream t(dir / "timings.csv", std::ios::binary);
    write_timings_csv(t, results);
    if (!r || !c || !t) throw Error("cannot write results in " + dir.string());
}

std::vector<Method> methods_for(const std::vector<std::string>& names, const LoadedPolicy* lp,
                                const CommonOptions& common) {
    std::vector<std::string> chosen = names;
    if (chosen.empty()) {
        if (lp) chosen.push_back(lp->trained.policy == PolicyKind::Giph ? "giph" : "giph-task-eft");
        for (const char* b : {"random-sampling", "random-task-eft", "heft"}) chosen.emplace_back(b);
    }
    std::vector<Method> methods;
    for (const auto& name : chosen) {
        Method m;
        m.kind = parse_method(name);
        m.greedy = common.greedy;
        if (m.kind == MethodKind::Giph || m.kind == MethodKind::GiphTaskEft) {
            if (!lp) throw Error("policy '" + name + "' needs a trained run");
            m.params = &lp->params;
            m.embed.steps = lp->trained.message_steps;
        }
        methods.push_back(m);
    }
    return methods;
}

json test_json(const TestOptions& o, const LoadedPolicy& lp) {
    return {{"command", "test"},
            {"common", common_json(o.common)},
            {"run", o.run.string()},
            {"dataset", o.dataset.string()},
            {"checkpoint", lp.episode},
            {"cases", o.cases},
            {"policies", o.policies}};
}

} // namespace

void cmd_generate(const GenerateOptions& options) {
    const json raw = read_json_file(options.params);
    DatasetParams params;
    try {
        params = parse_dataset_params(raw);
    } catch (const Error& e) {
        throw Error(options.params.string() + ": " + e.what());
    }
    write_dataset(options.out, generate_dataset(params, options.seed));
    write_json_file(options.out / "params.json", {{"seed", options.seed}, {"params", raw}});
}

std::vector<std::size_t> list_checkpoints(const fs::path& run) {
    std::vector<std::size_t> out;
    const fs::path dir = run / "checkpoints";
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("policy_", 0) != 0) continue;
        const std::string digits = name.substr(7);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
        const std::size_t ep = std::stoull(digits);
        if (fs::exists(checkpoint_file(run, "embedding", ep)) && fs::exists(checkpoint_file(run, "optimizer", ep))) {
            out.push_back(ep);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

fs::path cmd_train(const TrainOptions& options) {
    TrainOptions o = options;
    fs::path run;
    std::size_t start = 0;
    PolicyParams params;
    AdamState adam;
    if (options.resume) {
        run = *options.resume;
        if (!fs::is_directory(run)) throw Error("run folder not found: " + run.string());
        o = train_from_json(read_json_file(run / "args.json"), run / "args.json");
        o.episodes = std::max(o.episodes, options.episodes);
        const auto done = list_checkpoints(run);
        if (done.empty()) throw Error("no checkpoint to resume in " + (run / "checkpoints").string());
        start = done.back();
        load_params(checkpoint_file(run, "embedding", start), params);
        load_params(checkpoint_file(run, "policy", start), params);
        adam = load_adam(checkpoint_file(run, "optimizer", start));
        truncate_log(run / "train_log.csv", start);
    } else {
        if (options.dataset.empty()) throw Error("--dataset is required");
        run = fresh_run_folder(options.logdir, options.run_name);
        fs::create_directories(run / "checkpoints");
        Rng init(Rng::derive(o.common.seed, 0x1417ULL));
        params = init_params(init);
        std::ofstream log(run / "train_log.csv", std::ios::binary);
        write_log_header(log);
    }
    write_json_file(run / "args.json", train_json(o));

    const auto train_set = make_instances(load_split(o.dataset, "train"));
    const auto eval_set = first_cases(make_instances(load_split(o.dataset, "test")), o.eval_cases);

    std::ofstream log(run / "train_log.csv", std::ios::binary | std::ios::app);
    TrainHooks hooks;
    hooks.on_row = [&](const TrainLogRow& row) {
        write_log_row(log, row);
        log.flush();
    };
    hooks.checkpoint = [&](std::size_t episode, const PolicyParams& p, const AdamState& a) {
        save_params(checkpoint_file(run, "policy", episode), p, CheckpointPart::Policy);
        save_params(checkpoint_file(run, "embedding", episode), p, CheckpointPart::Embedding);
        save_adam(checkpoint_file(run, "optimizer", episode), a);
    };
    train(to_config(o), train_set, eval_set, std::move(params), std::move(adam), start, hooks);
    return run;
}

fs::path cmd_test(const TestOptions& test_options) {
    const LoadedPolicy lp = load_run(test_options.run, test_options.checkpoint);
    TestOptions options = test_options;
    if (options.inherit_objective) options.common.objective = lp.trained.common.objective;
    const fs::path dataset = options.dataset.empty() ? lp.trained.dataset : options.dataset;
    const auto instances = first_cases(make_instances(load_split(dataset, "test")), options.cases);
    const auto methods = methods_for(options.policies, &lp, options.common);
    const EvalOptions eval{options.common.objective, options.common.noise, options.common.T_factor,
                           options.common.plateau_stop, options.common.seed,
                           options.common.initial};
    const auto results = evaluate_cases(instances, methods, eval);
    const fs::path out = options.run / options.name;
    write_results(out, results, test_json(options, lp));
    return out;
}

fs::path cmd_baseline(const BaselineOptions& options) {
    if (options.dataset.empty()) throw Error("--dataset is required");
    const MethodKind kind = parse_method(options.name);
    if (kind == MethodKind::Giph || kind == MethodKind::GiphTaskEft) {
        throw Error("'" + options.name + "' is a learned policy; use the test command");
    }
    const auto instances = first_cases(make_instances(load_split(options.dataset, "test")), options.cases);
    const auto methods = methods_for({options.name}, nullptr, options.common);
    const EvalOptions eval{options.common.objective, options.common.noise, options.common.T_factor,
                           options.common.plateau_stop, options.common.seed,
                           options.common.initial};
    const auto results = evaluate_cases(instances, methods, eval);
    const fs::path run = fresh_run_folder(options.logdir, options.run_name);
    write_results(run, results,
                  {{"command", "baseline"},
                   {"name", options.name},
                   {"common", common_json(options.common)},
                   {"dataset", options.dataset.string()},
                   {"cases", options.cases}});
    return run;
}

fs::path cmd_adapt(const AdaptOptions& options) {
    const LoadedPolicy lp = load_run(options.test.run, options.test.checkpoint);
    TestOptions t = options.test;
    if (t.inherit_objective) t.common.objective = lp.trained.common.objective;
    const fs::path dataset = t.dataset.empty() ? lp.trained.dataset : t.dataset;
    DatasetSplit split = load_split(dataset, "test");
    if (t.cases > 0 && t.cases < split.graphs.size()) split.graphs.resize(t.cases);

    NetworkGenParams net_params;
    net_params.m = split.networks.front()->size();
    if (fs::exists(dataset / "params.json")) {
        const json saved = read_json_file(dataset / "params.json");
        if (saved.contains("params")) {
            const auto parsed = parse_dataset_params(saved.at("params"));
            net_params = parsed.network_settings.front();
        }
    }
    std::vector<const TaskGraph*> graphs;
    for (const auto& g : split.graphs) graphs.push_back(g.get());
    const auto stages =
        churn_stages(*split.networks.front(), net_params, options.churn, required_tags(graphs), t.common.seed);

    const auto methods = methods_for(t.policies, &lp, t.common);
    const fs::path out = t.run / t.name;
    fs::create_directories(out);
    std::vector<CaseResult> all;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        DatasetSplit stage_split{split.graphs, {std::make_shared<const DeviceNetwork>(stages[s])}};
        const auto instances = make_instances(stage_split);
        const EvalOptions eval{t.common.objective, t.common.noise, t.common.T_factor, t.common.plateau_stop,
                               stage_seed(t.common.seed, s), t.common.initial};
        auto results = evaluate_cases(instances, methods, eval, Execution::Parallel, s);
        all.insert(all.end(), std::make_move_iterator(results.begin()), std::make_move_iterator(results.end()));
        write_json_file(out / ("network_stage_" + std::to_string(s) + ".json"), to_json(stages[s]));
    }
    json args = test_json(t, lp);
    args["command"] = "adapt";
    args["churn"] = {{"steps", options.churn.steps},
                     {"remove", options.churn.remove},
                     {"capacity_factor", options.churn.capacity_factor}};
    write_results(out, all, args);
    return out;
}

fs::path cmd_report(const ReportOptions& options) {
    if (options.results.empty()) throw Error("no results file given");
    std::vector<CaseResult> all;
    for (const auto& path : options.results) {
        auto rows = read_results_csv(path);
        all.insert(all.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
    }
    if (all.empty()) throw Error("results contain no rows");
    const fs::path out = options.out.empty() ? options.results.front().parent_path() / "report" : options.out;
    write_report(out, summarize(all));
    return out;
}

} // namespace giph
