#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedq/harness.hpp"
#include "fedq/serialization.hpp"

// fedq: experiment front-end.
//   gen-env  — generate an environment from a spec file and serialize it
//   solve    — ground-truth Q* by value iteration
//   run      — execute one configured experiment, emit metrics CSV
//   sweep    — Cartesian parameter grids over a base config
//   verify   — invariant suites on a serialized (mdp, partition) pair

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

int cmd_gen_env(const std::string& config, const std::string& out) {
    fedq::EnvSpec spec = fedq::env_spec_from_json(fedq::load_json_file(config));
    fedq::GeneratedEnv env = fedq::generate_env(spec);  // fully built before any file appears
    fedq::save_json_file(out + ".mdp.json", fedq::mdp_to_json(env.mdp));
    fedq::save_json_file(out + ".partition.json", fedq::partition_to_json(env.partition));
    std::cout << fedq::format_partition_report(fedq::describe_partition(env.partition, env.mdp));
    return 0;
}

int cmd_solve(const std::string& mdp_path, double tol, const std::string& out) {
    fedq::TabularMdp mdp = fedq::mdp_from_json(fedq::load_json_file(mdp_path));
    fedq::ValueIterationResult res =
        fedq::value_iteration(mdp, fedq::QTable(mdp.n_states, mdp.n_actions), tol);
    fedq::save_json_file(out, fedq::qtable_to_json(res.q, tol, res.iters));
    std::cout << "solved in " << res.iters << " iterations, residual " << fedq::format_double(res.residual)
              << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
    fedq::json j = fedq::load_json_file(config_path);
    if (seed) j["master_seed"] = *seed;
    fedq::ExperimentConfig cfg = fedq::experiment_config_from_json(j);
    if (out) cfg.out = *out;
    fedq::RunResult res = fedq::run_experiment(cfg);
    const std::string csv = std::string(fedq::kCsvHeader) + res.csv_body;
    if (cfg.out)
        write_text(*cfg.out, csv);
    else
        std::cout << csv;
    return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::string> out, int jobs) {
    fedq::SweepResult res = fedq::run_sweep(fedq::load_json_file(config_path), jobs);
    if (out)
        write_text(*out, res.csv);
    else
        std::cout << res.csv;
    for (const auto& f : res.failures) std::cerr << "cell failed: " << f << "\n";
    return 0;
}

int cmd_verify(const std::string& mdp_path, const std::string& partition_path, std::uint64_t seed) {
    fedq::TabularMdp mdp = fedq::mdp_from_json(fedq::load_json_file(mdp_path));
    fedq::RegionPartition partition = fedq::partition_from_json(fedq::load_json_file(partition_path));
    if (partition.n_states != mdp.n_states) throw std::invalid_argument("verify: partition/mdp state count mismatch");
    fedq::VerifyReport rep = fedq::verify_instance(mdp, partition, seed);
    std::cout << fedq::format_verify_report(rep);
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedq: federated tabular Q-learning laboratory"};
    app.require_subcommand(1);

    std::string config, out, mdp_path, partition_path;
    double tol = 1e-10;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool seed_set = false, out_set = false;

    auto* gen = app.add_subcommand("gen-env", "generate environment from a spec file");
    gen->add_option("--config", config, "spec file (random_mdp or windy_cliff)")->required();
    gen->add_option("--out", out, "output path prefix")->required();

    auto* solve = app.add_subcommand("solve", "solve ground-truth Q* by value iteration");
    solve->add_option("--config", mdp_path, "mdp file")->required();
    solve->add_option("--tol", tol, "backup residual tolerance");
    solve->add_option("--out", out, "output Q* file")->required();

    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", config, "experiment config file")->required();
    run->add_option("--seed", seed, "override master_seed")->each([&](const std::string&) { seed_set = true; });
    run->add_option("--out", out, "metrics CSV path (stdout if omitted)")
        ->each([&](const std::string&) { out_set = true; });

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep config");
    sweep->add_option("--config", config, "sweep config file")->required();
    sweep->add_option("--out", out, "combined CSV path (stdout if omitted)")
        ->each([&](const std::string&) { out_set = true; });
    sweep->add_option("--jobs", jobs, "parallel cells");

    auto* verify = app.add_subcommand("verify", "run invariant suites on mdp+partition files");
    verify->add_option("--config", mdp_path, "mdp file")->required();
    verify->add_option("--partition", partition_path, "partition file")->required();
    verify->add_option("--seed", seed, "sampling seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_env(config, out);
        if (solve->parsed()) return cmd_solve(mdp_path, tol, out);
        if (run->parsed())
            return cmd_run(config, seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                           out_set ? std::optional<std::string>(out) : std::nullopt);
        if (sweep->parsed()) return cmd_sweep(config, out_set ? std::optional<std::string>(out) : std::nullopt, jobs);
        if (verify->parsed()) return cmd_verify(mdp_path, partition_path, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
