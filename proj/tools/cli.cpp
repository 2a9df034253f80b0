// metanco command line: dataset generation, training, and evaluation plumbing.

#include "metanco/evalbench.hpp"
#include "metanco/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace metanco;
using io::json;

namespace {

struct Common {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out_dir = ".";
    json config = json::object();

    void add_to(CLI::App* app) {
        app->add_option("--seed", seed, "master RNG seed");
        app->add_option("--config", config_path, "JSON config file");
        app->add_option("--out", out_dir, "output directory");
    }

    void load() {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config: " + config_path);
            config = json::parse(in);
        }
        fs::create_directories(out_dir);
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        if (config.contains(key)) return config.at(key).get<T>();
        return fallback;
    }

    std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
};

struct TaskFlags {
    std::string problem = "tsp";
    int n = 10, m = 0, capacity = 0;
    double scale = 1.0;

    void add_to(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "problem", problem, "tsp or cvrp")
            ->check(CLI::IsMember({"tsp", "cvrp"}));
        app->add_option("--" + prefix + "n", n, "node count N");
        app->add_option("--" + prefix + "m", m, "mode count M (0 = uniform)");
        app->add_option("--" + prefix + "capacity", capacity, "vehicle capacity C (cvrp)");
        app->add_option("--" + prefix + "l", scale, "coordinate scale L");
    }

    TaskSpec spec(std::uint64_t seed) const {
        TaskSpec s;
        s.problem = problem == "cvrp" ? Problem::CVRP : Problem::TSP;
        s.n_nodes = n;
        s.n_modes = m;
        s.capacity = s.problem == Problem::CVRP ? capacity : 0;
        s.scale = scale;
        s.seed = seed;
        s.validate();
        return s;
    }
};

rltrain::TrainConfig train_config(const Common& common) {
    rltrain::TrainConfig cfg;
    cfg.alpha = common.get("alpha", cfg.alpha);
    cfg.batch_size = common.get("batch_size", cfg.batch_size);
    cfg.ttest_threshold = common.get("ttest_threshold", cfg.ttest_threshold);
    cfg.baseline_eval_size = common.get("baseline_eval_size", cfg.baseline_eval_size);
    cfg.baseline_refresh_every = common.get("baseline_refresh_every", cfg.baseline_refresh_every);
    cfg.seed = common.seed;
    return cfg;
}

metatrain::MetaConfig meta_config(const Common& common) {
    metatrain::MetaConfig cfg;
    cfg.inner = train_config(common);
    cfg.inner_steps = common.get("inner_steps", cfg.inner_steps);
    cfg.eps0 = common.get("eps0", cfg.eps0);
    cfg.eps_decay = common.get("eps_decay", cfg.eps_decay);
    cfg.fixed_eps = common.get("fixed_eps", cfg.fixed_eps);
    cfg.outer_iters = common.get("outer_iters", cfg.outer_iters);
    cfg.wall_clock_limit_sec = common.get("wall_clock_limit_sec", cfg.wall_clock_limit_sec);
    cfg.seed = common.seed;
    return cfg;
}

json common_header(const Common& common, const std::string& command) {
    return json{{"command", command}, {"seed", common.seed},
                {"config", common.config}};
}

/// Reads a JSONL dataset, or a single raw TSPLIB (.tsp) / CVRPLIB (.vrp)
/// instance. External instances are normalized before inference unless
/// --normalize off is requested.
std::vector<Instance> load_instances(const std::string& path, bool normalize = true) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".tsp" || ext == ".vrp") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open: " + path);
        Instance inst = ext == ".tsp" ? io::parse_tsplib(in) : io::parse_cvrplib(in);
        if (normalize) inst = io::normalize_instance(inst);
        return {inst};
    }
    std::vector<Instance> out;
    for (const auto& rec : io::read_dataset(path).records) out.push_back(rec.instance);
    return out;
}

ParameterSet fresh_policy_for(Problem problem, std::uint64_t seed) {
    policy::PolicyArch arch;
    arch.problem = problem;
    return policy::init_params(arch, seed);
}

void write_log_csv(const Common& common, const std::string& name,
                   const std::vector<metatrain::LogRecord>& log, const json& header) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& rec : log) {
        rows.push_back({std::to_string(rec.outer), std::to_string(rec.inner), rec.task_id,
                        io::format_double(rec.mean_cost), io::format_double(rec.loss),
                        io::format_double(rec.eps)});
    }
    io::write_report(common.path(name), header,
                     {"outer", "inner", "task", "mean_cost", "loss", "eps"}, rows);
}

evalbench::NamedSolver make_solver(const std::string& name, const std::string& checkpoint,
                                   std::uint64_t seed) {
    if (name == "policy" || name == "edgenet") {
        if (checkpoint.empty())
            throw std::runtime_error("solver '" + name + "' needs --checkpoint");
        const ParameterSet theta = io::load_checkpoint(checkpoint);
        return name == "policy" ? evalbench::policy_solver(theta)
                                : evalbench::edgenet_solver(theta);
    }
    if (name == "farthest-insertion") return evalbench::farthest_insertion_solver();
    if (name == "nearest-neighbor") return evalbench::nearest_neighbor_solver();
    if (name == "random-tour") return evalbench::random_tour_solver(seed);
    if (name == "held-karp") return evalbench::oracle_solver(evalbench::OracleKind::HeldKarp);
    if (name == "brute-force")
        return evalbench::oracle_solver(evalbench::OracleKind::BruteForceTsp);
    if (name == "brute-force-cvrp")
        return evalbench::oracle_solver(evalbench::OracleKind::BruteForceCvrp);
    throw std::runtime_error("unknown solver: " + name);
}

int run(int argc, char** argv) {
    CLI::App app{"metanco: meta-learned construction heuristics for routing problems"};
    app.require_subcommand(1);
    Common common;

    // generate
    auto* gen = app.add_subcommand("generate", "sample instance datasets");
    common.add_to(gen);
    TaskFlags gen_task;
    gen_task.add_to(gen);
    std::string gen_preset, gen_scale = "desk";
    int gen_count = 100;
    gen->add_option("--preset", gen_preset, "preset task set name");
    gen->add_option("--scale-preset", gen_scale, "desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    gen->add_option("--count", gen_count, "instances per task");
    gen->callback([&] {
        common.load();
        std::vector<TaskSpec> specs;
        if (!gen_preset.empty()) {
            const auto set = taskgen::preset_taskset(
                gen_preset, gen_scale == "paper" ? taskgen::PresetScale::Paper
                                                 : taskgen::PresetScale::Desk);
            specs = set.tasks;
        } else {
            specs.push_back(gen_task.spec(common.seed));
        }
        for (TaskSpec spec : specs) {
            spec.seed = common.seed;
            std::vector<io::DatasetRecord> records;
            for (const Instance& inst : taskgen::generate_dataset(spec, gen_count))
                records.push_back({inst, std::nullopt, std::nullopt, std::nullopt});
            io::write_dataset(common.path(spec.id() + ".jsonl"), records, spec);
            std::cout << "wrote " << common.path(spec.id() + ".jsonl") << " (" << gen_count
                      << " instances)\n";
        }
    });

    // solve
    auto* solve = app.add_subcommand("solve", "run a solver over a dataset");
    common.add_to(solve);
    std::string solve_data, solve_solver = "held-karp", solve_checkpoint;
    solve->add_option("--data", solve_data, "dataset file")->required();
    solve->add_option("--oracle,--solver", solve_solver, "solver name");
    solve->add_option("--checkpoint", solve_checkpoint, "model checkpoint (policy/edgenet)");
    bool solve_normalize = true;
    solve->add_flag("--normalize,!--no-normalize", solve_normalize,
                    "normalize external .tsp/.vrp coordinates before inference");
    solve->callback([&] {
        common.load();
        const auto instances = load_instances(solve_data, solve_normalize);
        const auto solver = make_solver(solve_solver, solve_checkpoint, common.seed);
        // Enforce oracle size limits before any work.
        if (solve_solver == "held-karp" || solve_solver == "brute-force" ||
            solve_solver == "brute-force-cvrp") {
            const auto kind = solve_solver == "held-karp"
                                  ? evalbench::OracleKind::HeldKarp
                                  : solve_solver == "brute-force"
                                        ? evalbench::OracleKind::BruteForceTsp
                                        : evalbench::OracleKind::BruteForceCvrp;
            evalbench::OracleCache cache;
            (void)evalbench::evaluate(solver, instances, kind, &cache);
        }
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < instances.size(); ++i)
            rows.push_back({std::to_string(i), io::format_double(solver.cost(instances[i]))});
        json header = common_header(common, "solve");
        header["solver"] = solver.id;
        header["data"] = solve_data;
        io::write_report(common.path("solve-" + solver.id + ".csv"), header,
                         {"instance", "cost"}, rows);
        std::cout << "wrote " << common.path("solve-" + solver.id + ".csv") << "\n";
    });

    // label
    auto* label = app.add_subcommand("label", "attach exact solutions and edge labels");
    common.add_to(label);
    std::string label_data;
    label->add_option("--data", label_data, "dataset file")->required();
    label->callback([&] {
        common.load();
        const auto ds = io::read_dataset(label_data);
        std::vector<io::DatasetRecord> out;
        for (const auto& rec : ds.records) {
            io::DatasetRecord labeled = rec;
            if (rec.instance.is_cvrp) {
                const auto res = oracles::brute_force_cvrp(rec.instance);
                labeled.plan = res.plan;
                labeled.labels = edgenet::labels_from_plan(res.plan, rec.instance.n());
            } else {
                const auto res = oracles::held_karp(rec.instance);
                labeled.tour = res.tour;
                labeled.labels = edgenet::labels_from_tour(res.tour, rec.instance.n());
            }
            out.push_back(std::move(labeled));
        }
        const std::string name = fs::path(label_data).stem().string() + "-labeled.jsonl";
        io::write_dataset(common.path(name), out, ds.task);
        std::cout << "wrote " << common.path(name) << "\n";
    });

    // train
    auto* train = app.add_subcommand("train", "plain REINFORCE training on one task");
    common.add_to(train);
    TaskFlags train_task;
    train_task.add_to(train);
    int train_batches = 500;
    train->add_option("--batches", train_batches, "number of gradient batches");
    train->callback([&] {
        common.load();
        const TaskSpec spec = train_task.spec(common.seed);
        const ParameterSet theta0 = fresh_policy_for(spec.problem, common.seed);
        std::vector<metatrain::LogRecord> log;
        const auto result = metatrain::train_rl(spec, theta0, train_config(common), train_batches,
                                                50, false, common.seed, &log);
        io::save_checkpoint(common.path("train-" + spec.id() + ".ckpt.json"), result.theta);
        write_log_csv(common, "train-" + spec.id() + "-log.csv", log,
                      common_header(common, "train"));
        std::cout << "wrote " << common.path("train-" + spec.id() + ".ckpt.json") << "\n";
    });

    // meta-train
    auto* meta = app.add_subcommand("meta-train", "Reptile meta-training over a preset task set");
    common.add_to(meta);
    std::string meta_preset = "tsp-var-size";
    meta->add_option("--preset", meta_preset, "prior task set");
    meta->callback([&] {
        common.load();
        const auto prior = taskgen::preset_taskset(meta_preset, taskgen::PresetScale::Desk);
        const ParameterSet theta0 = fresh_policy_for(prior.tasks.front().problem, common.seed);
        const auto result = metatrain::meta_train_rl(prior, theta0, meta_config(common));
        io::save_checkpoint(common.path("meta-" + meta_preset + ".ckpt.json"), result.theta);
        write_log_csv(common, "meta-" + meta_preset + "-log.csv", result.log,
                      common_header(common, "meta-train"));
        std::cout << "wrote " << common.path("meta-" + meta_preset + ".ckpt.json") << "\n";
    });

    // multi-train
    auto* multi = app.add_subcommand("multi-train", "multi-task baseline training");
    common.add_to(multi);
    std::string multi_preset = "tsp-var-size";
    int multi_batches = 500;
    multi->add_option("--preset", multi_preset, "prior task set");
    multi->add_option("--batches", multi_batches, "number of gradient batches");
    multi->callback([&] {
        common.load();
        const auto prior = taskgen::preset_taskset(multi_preset, taskgen::PresetScale::Desk);
        const ParameterSet theta0 = fresh_policy_for(prior.tasks.front().problem, common.seed);
        std::vector<metatrain::LogRecord> log;
        const auto result = metatrain::multi_task_train(prior, theta0, train_config(common),
                                                        multi_batches, common.seed, &log);
        io::save_checkpoint(common.path("multi-" + multi_preset + ".ckpt.json"), result.theta);
        write_log_csv(common, "multi-" + multi_preset + "-log.csv", log,
                      common_header(common, "multi-train"));
        std::cout << "wrote " << common.path("multi-" + multi_preset + ".ckpt.json") << "\n";
    });

    // fine-tune
    auto* ft = app.add_subcommand("fine-tune", "K adaptation steps on a target task");
    common.add_to(ft);
    TaskFlags ft_task;
    ft_task.add_to(ft);
    std::string ft_checkpoint;
    int ft_k = 50, ft_pool = 64;
    ft->add_option("--checkpoint", ft_checkpoint, "starting checkpoint")->required();
    ft->add_option("--k", ft_k, "fine-tuning steps");
    ft->add_option("--pool", ft_pool, "target instances available for adaptation");
    ft->callback([&] {
        common.load();
        const TaskSpec spec = ft_task.spec(common.seed);
        const ParameterSet theta = io::load_checkpoint(ft_checkpoint);
        auto pool = rltrain::InstancePool::from_instances(
            taskgen::generate_dataset(spec, ft_pool), common.seed + 1);
        const auto trajectory =
            metatrain::fine_tune_rl(theta, pool, ft_k, train_config(common), common.seed);
        io::save_checkpoint(common.path("fine-tuned-" + spec.id() + ".ckpt.json"),
                            trajectory.back());
        std::cout << "wrote " << common.path("fine-tuned-" + spec.id() + ".ckpt.json") << "\n";
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "mean optimality gap of a solver on a dataset");
    common.add_to(ev);
    std::string ev_data, ev_solver = "policy", ev_checkpoint;
    ev->add_option("--data", ev_data, "dataset file")->required();
    ev->add_option("--solver", ev_solver, "solver name");
    ev->add_option("--checkpoint", ev_checkpoint, "model checkpoint (policy/edgenet)");
    bool ev_normalize = true;
    ev->add_flag("--normalize,!--no-normalize", ev_normalize,
                 "normalize external .tsp/.vrp coordinates before inference");
    ev->callback([&] {
        common.load();
        const auto instances = load_instances(ev_data, ev_normalize);
        const auto solver = make_solver(ev_solver, ev_checkpoint, common.seed);
        const GapReport report = evalbench::evaluate(solver, instances);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < report.per_instance_gap.size(); ++i)
            rows.push_back({std::to_string(i), io::format_double(report.per_instance_gap[i])});
        json header = common_header(common, "evaluate");
        header["solver"] = report.solver_id;
        header["reference"] = report.reference_id;
        header["data"] = ev_data;
        header["mean_gap"] = report.mean_gap;
        header["eval_size"] = instances.size();
        io::write_report(common.path("evaluate-" + solver.id + ".csv"), header,
                         {"instance", "gap_percent"}, rows);
        std::cout << "mean gap " << report.mean_gap << "% -> "
                  << common.path("evaluate-" + solver.id + ".csv") << "\n";
    });

    // gen-matrix
    auto* gm = app.add_subcommand("gen-matrix", "train-task x test-task generalization matrix");
    common.add_to(gm);
    std::string gm_preset = "tsp-var-size";
    int gm_batches = 200, gm_eval = 100;
    gm->add_option("--preset", gm_preset, "task set");
    gm->add_option("--train-batches", gm_batches, "per-row training budget");
    gm->add_option("--eval-size", gm_eval, "test instances per column");
    gm->callback([&] {
        common.load();
        const auto set = taskgen::preset_taskset(gm_preset, taskgen::PresetScale::Desk);
        evalbench::GenMatrixConfig cfg;
        cfg.arch.embed_dim = common.get("embed_dim", cfg.arch.embed_dim);
        cfg.arch.layers = common.get("layers", cfg.arch.layers);
        cfg.train = train_config(common);
        cfg.train_batches = gm_batches;
        cfg.eval_size = gm_eval;
        cfg.seed = common.seed;
        const auto matrix = evalbench::generalization_matrix(set.tasks, cfg);
        std::vector<std::string> columns{"train_task"};
        for (const auto& id : matrix.task_ids) columns.push_back(id);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t r = 0; r < matrix.task_ids.size(); ++r) {
            std::vector<std::string> row{matrix.task_ids[r]};
            for (double g : matrix.mean_gap[r]) row.push_back(io::format_double(g));
            rows.push_back(std::move(row));
        }
        json header = common_header(common, "gen-matrix");
        header["preset"] = gm_preset;
        header["train_batches"] = gm_batches;
        header["eval_size"] = gm_eval;
        io::write_report(common.path("gen-matrix-" + gm_preset + ".csv"), header, columns, rows);
        std::cout << "wrote " << common.path("gen-matrix-" + gm_preset + ".csv") << "\n";
    });

    // ablate-eps
    auto* ab = app.add_subcommand("ablate-eps", "fixed vs decaying meta step size");
    common.add_to(ab);
    std::string ab_preset = "tsp-var-mode";
    TaskFlags ab_target;
    ab_target.add_to(ab, "target-");
    std::vector<double> ab_eps{0.1, 0.5, 0.9};
    bool ab_decaying = true;
    ab->add_option("--eps", ab_eps, "fixed epsilon values")->delimiter(',');
    ab->add_flag("--decaying,!--no-decaying", ab_decaying, "include the decaying schedule");
    ab->add_option("--preset", ab_preset, "prior task set");
    ab->callback([&] {
        common.load();
        const auto prior = taskgen::preset_taskset(ab_preset, taskgen::PresetScale::Desk);
        evalbench::ComparisonConfig cfg;
        cfg.arch.embed_dim = common.get("embed_dim", cfg.arch.embed_dim);
        cfg.arch.layers = common.get("layers", cfg.arch.layers);
        cfg.meta = meta_config(common);
        cfg.fine_tune = train_config(common);
        cfg.fine_tune_pool = common.get("fine_tune_pool", cfg.fine_tune_pool);
        cfg.eval_size = common.get("eval_size", cfg.eval_size);
        cfg.seed = common.seed;
        const auto report = evalbench::epsilon_ablation(prior, ab_target.spec(common.seed),
                                                        ab_eps, ab_decaying, cfg);
        std::vector<std::vector<std::string>> rows;
        for (const auto& row : report.rows)
            rows.push_back({row.eps_label, io::format_double(row.gap_k0),
                            io::format_double(row.gap_k50)});
        json header = common_header(common, "ablate-eps");
        header["target"] = report.target_id;
        header["eval_size"] = report.eval_size;
        io::write_report(common.path("ablate-eps.csv"), header,
                         {"eps", "gap_k0_percent", "gap_k50_percent"}, rows);
        std::cout << "wrote " << common.path("ablate-eps.csv") << "\n";
    });

    // report (meta vs multi vs oracle)
    auto* rp = app.add_subcommand("report", "meta/multi/oracle gap-vs-K comparison");
    common.add_to(rp);
    std::string rp_preset = "tsp-var-mode";
    TaskFlags rp_target;
    rp_target.add_to(rp, "target-");
    std::vector<int> rp_k{0, 50};
    rp->add_option("--preset", rp_preset, "prior task set");
    rp->add_option("--k-list", rp_k, "fine-tuning step counts")->delimiter(',');
    rp->callback([&] {
        common.load();
        const auto prior = taskgen::preset_taskset(rp_preset, taskgen::PresetScale::Desk);
        evalbench::ComparisonConfig cfg;
        cfg.arch.embed_dim = common.get("embed_dim", cfg.arch.embed_dim);
        cfg.arch.layers = common.get("layers", cfg.arch.layers);
        cfg.meta = meta_config(common);
        cfg.fine_tune = train_config(common);
        cfg.fine_tune_pool = common.get("fine_tune_pool", cfg.fine_tune_pool);
        cfg.eval_size = common.get("eval_size", cfg.eval_size);
        cfg.seed = common.seed;
        const auto report =
            evalbench::meta_vs_multi_report(prior, rp_target.spec(common.seed), rp_k, cfg);
        std::vector<std::vector<std::string>> rows;
        for (const auto& curve : report.curves)
            for (std::size_t i = 0; i < curve.k_values.size(); ++i)
                rows.push_back({curve.method, std::to_string(curve.k_values[i]),
                                io::format_double(curve.mean_gap[i])});
        json header = common_header(common, "report");
        header["target"] = report.target_id;
        header["eval_size"] = report.eval_size;
        io::write_report(common.path("meta-vs-multi.csv"), header,
                         {"method", "k", "gap_percent"}, rows);
        std::cout << "wrote " << common.path("meta-vs-multi.csv") << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0)
            std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return app.exit(e);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}
