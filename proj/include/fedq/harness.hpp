#pragma once

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fedq/environments.hpp"
#include "fedq/federation.hpp"
#include "fedq/mdp.hpp"
#include "fedq/oracles.hpp"
#include "fedq/serialization.hpp"

// Experiment runner behind the CLI: environment resolution, ground-truth
// solving, algorithm dispatch, CSV metrics, sweeps and the invariant
// verification suites.
//
// CSV bodies are a pure function of (config, master_seed): every float is
// printed with shortest round-trip formatting and wall-clock timings go to
// the log, never into the CSV.

namespace fedq {

enum class LogLevel { error = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* v = std::getenv("FEDQ_LOG");
        if (!v) return LogLevel::error;
        const std::string s(v);
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}

inline void log_line(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level())) std::cerr << "[fedq] " << msg << "\n";
}

/// Shortest round-trip decimal formatting.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct EnvFiles {
    std::string mdp_path;
    std::string partition_path;
};

struct ExperimentConfig {
    std::variant<RandomMdpSpec, WindyCliffSpec, EnvFiles> env;
    std::string algorithm = "fedq_exact";  // fedq_exact | fedq_synq | super_agent
    OracleConfig oracle;
    int rounds = 1;
    std::uint64_t master_seed = 0;
    double gt_tol = 1e-10;
    double stop_tol = 0.0;
    bool track_error = true;              // solve Q* at gt_tol unless qstar_path given
    std::optional<std::string> qstar_path;
    std::optional<std::string> out;
};

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    const json& env = detail::require(j, "env", "config");
    if (env.contains("mdp")) {
        cfg.env = EnvFiles{env["mdp"].get<std::string>(),
                           detail::require(env, "partition", "config.env").get<std::string>()};
    } else {
        EnvSpec spec = env_spec_from_json(env);
        if (std::holds_alternative<RandomMdpSpec>(spec))
            cfg.env = std::get<RandomMdpSpec>(spec);
        else
            cfg.env = std::get<WindyCliffSpec>(spec);
    }
    cfg.algorithm = detail::require(j, "algorithm", "config").get<std::string>();
    if (cfg.algorithm != "fedq_exact" && cfg.algorithm != "fedq_synq" && cfg.algorithm != "super_agent")
        throw std::invalid_argument("config: unknown algorithm '" + cfg.algorithm + "'");
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        cfg.oracle.eta = o.value("eta", 0.5);
        cfg.oracle.batch_size = o.value("batch_size", 5);
        cfg.oracle.local_steps = o.value("local_steps", 1);
        cfg.oracle.tol = o.value("tol", 1e-10);
    }
    cfg.oracle.kind = cfg.algorithm == "fedq_exact" ? OracleConfig::Kind::exact : OracleConfig::Kind::sync_q;
    cfg.oracle.validate();
    cfg.rounds = detail::require(j, "rounds", "config").get<int>();
    if (cfg.rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
    cfg.master_seed = j.value("master_seed", std::uint64_t{0});
    cfg.gt_tol = j.value("gt_tol", 1e-10);
    cfg.stop_tol = j.value("stop_tol", 0.0);
    cfg.track_error = j.value("track_error", true);
    if (j.contains("qstar")) cfg.qstar_path = j["qstar"].get<std::string>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    return cfg;
}

inline GeneratedEnv resolve_env(const ExperimentConfig& cfg) {
    if (std::holds_alternative<EnvFiles>(cfg.env)) {
        const auto& files = std::get<EnvFiles>(cfg.env);
        TabularMdp mdp = mdp_from_json(load_json_file(files.mdp_path));
        RegionPartition partition = partition_from_json(load_json_file(files.partition_path));
        if (partition.n_states != mdp.n_states)
            throw std::invalid_argument("config: partition/mdp state count mismatch");
        return {std::move(mdp), std::move(partition)};
    }
    if (std::holds_alternative<RandomMdpSpec>(cfg.env)) return generate_random_mdp(std::get<RandomMdpSpec>(cfg.env));
    return generate_windy_cliff(std::get<WindyCliffSpec>(cfg.env));
}

inline constexpr const char* kCsvHeader = "run_id,round,linf_error,samples_per_agent,samples_total,gamma_fed\n";

struct RunResult {
    std::string run_id;
    std::string csv_body;  // rows only, header excluded
    FedRunState state;
    double gamma_fed = 0.0;
};

inline std::string metrics_row(const std::string& run_id, const RoundMetrics& m, double gamma_fed) {
    std::ostringstream os;
    os << run_id << "," << m.round << "," << format_double(m.linf_error) << ",";
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < m.samples_per_agent.size(); ++i) {
        if (i) os << ";";
        os << m.samples_per_agent[i];
        total += m.samples_per_agent[i];
    }
    os << "," << total << "," << format_double(gamma_fed) << "\n";
    return os.str();
}

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    GeneratedEnv env = resolve_env(cfg);
    const LeakageProfile leak = compute_leakage(env.mdp, env.partition);

    QTable q0(env.mdp.n_states, env.mdp.n_actions, 0.0);
    QTable q_star;
    bool have_qstar = false;
    if (cfg.qstar_path) {
        q_star = qtable_from_json(load_json_file(*cfg.qstar_path));
        if (!q_star.same_shape(env.mdp)) throw std::invalid_argument("config: qstar shape mismatch");
        have_qstar = true;
    } else if (cfg.track_error) {
        q_star = value_iteration(env.mdp, q0, cfg.gt_tol).q;
        have_qstar = true;
    }

    RunResult res;
    res.gamma_fed = leak.gamma_fed;
    res.run_id = cfg.algorithm + "-s" + std::to_string(cfg.master_seed);

    if (cfg.algorithm == "fedq_exact") {
        FedRunOptions opts;
        opts.rounds = cfg.rounds;
        opts.stop_tol = cfg.stop_tol;
        opts.q_star = have_qstar ? &q_star : nullptr;
        res.state = fedq_run(env.mdp, env.partition, make_exact_oracle(cfg.oracle.tol), q0, opts);
    } else {
        SynQRunConfig sc;
        sc.eta = cfg.oracle.eta;
        sc.local_steps = cfg.oracle.local_steps;
        sc.rounds = cfg.rounds;
        sc.batch_size = cfg.oracle.batch_size;
        sc.seed = cfg.master_seed;
        SynQRunOptions opts;
        opts.q_star = have_qstar ? &q_star : nullptr;
        if (cfg.algorithm == "fedq_synq")
            res.state = fedq_synq(env.mdp, env.partition, sc, q0, opts);
        else
            res.state = super_agent_baseline(env.mdp, sc, q0, opts);
    }

    std::ostringstream body;
    for (const auto& m : res.state.history) body << metrics_row(res.run_id, m, res.gamma_fed);
    res.csv_body = body.str();

    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    log_line(LogLevel::info, "run " + res.run_id + " finished: " + std::to_string(res.state.round) + " rounds, " +
                                 std::to_string(ms.count()) + " ms");
    return res;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
    std::string key;  // "param=value;...;seed=s"
    json config;      // patched experiment config
};

struct SweepResult {
    std::string csv;  // header + rows, cells in declaration order
    std::vector<std::string> failures;
};

/// Cartesian product of the listed grids applied over the base config.
/// Grid keys are dotted paths into the config object ("env.p_max",
/// "oracle.local_steps"); "seeds" lists master_seed replicates.
inline std::vector<SweepCell> expand_sweep(const json& sweep) {
    const json& base = detail::require(sweep, "base", "sweep");
    std::vector<std::pair<std::string, std::vector<json>>> grids;
    if (sweep.contains("grids"))
        for (const auto& [key, values] : sweep["grids"].items())
            grids.emplace_back(key, values.get<std::vector<json>>());
    std::vector<std::uint64_t> seeds = sweep.contains("seeds")
                                           ? sweep["seeds"].get<std::vector<std::uint64_t>>()
                                           : std::vector<std::uint64_t>{base.value("master_seed", std::uint64_t{0})};

    std::vector<SweepCell> cells{{std::string(), base}};
    for (const auto& [key, values] : grids) {
        std::vector<SweepCell> next;
        const std::string pointer = "/" + [&] {
            std::string p = key;
            for (auto& c : p)
                if (c == '.') c = '/';
            return p;
        }();
        for (const auto& cell : cells) {
            for (const auto& v : values) {
                SweepCell c = cell;
                c.config[json::json_pointer(pointer)] = v;
                c.key += (c.key.empty() ? "" : ";") + key + "=" + v.dump();
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    std::vector<SweepCell> out;
    for (const auto& cell : cells) {
        for (std::uint64_t seed : seeds) {
            SweepCell c = cell;
            c.config["master_seed"] = seed;
            c.key += (c.key.empty() ? "" : ";") + std::string("seed=") + std::to_string(seed);
            out.push_back(std::move(c));
        }
    }
    return out;
}

inline SweepResult run_sweep(const json& sweep, int jobs = 1) {
    std::vector<SweepCell> cells = expand_sweep(sweep);
    std::vector<std::string> bodies(cells.size());
    std::vector<std::string> errors(cells.size());

    const auto run_cell = [&](std::size_t i) {
        try {
            ExperimentConfig cfg = experiment_config_from_json(cells[i].config);
            RunResult res = run_experiment(cfg);
            std::ostringstream os;
            std::istringstream rows(res.csv_body);
            std::string line;
            while (std::getline(rows, line)) os << cells[i].key << "," << line << "\n";
            bodies[i] = os.str();
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::vector<std::future<void>> futures;
        futures.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            futures.push_back(std::async(std::launch::async, run_cell, i));
        for (auto& f : futures) f.get();
    }

    SweepResult res;
    std::ostringstream os;
    os << "cell," << kCsvHeader;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        os << bodies[i];  // merge ordered by cell key declaration, not completion
        if (!errors[i].empty()) res.failures.push_back(cells[i].key + ": " + errors[i]);
    }
    res.csv = os.str();
    return res;
}

// ---------------------------------------------------------------------------
// Invariant verification suites

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string detail;  // witness inputs on failure, serialized for replay
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline QTable random_q(const TabularMdp& mdp, std::mt19937_64& rng) {
    QTable q(mdp.n_states, mdp.n_actions);
    const double hi = 1.0 / (1.0 - mdp.gamma);
    for (auto& v : q.values) v = hi * std::generate_canonical<double, 53>(rng);
    return q;
}

}  // namespace detail

/// Executes the contraction / fixed-point / idempotence / kernel-edge /
/// n-step-monotonicity suites on one instance. tol_local is the exact local
/// solve tolerance; pairs controls the sampling effort.
inline VerifyReport verify_instance(const TabularMdp& mdp, const RegionPartition& partition,
                                    std::uint64_t seed = 1, int pairs = 200, double tol_local = 1e-10) {
    VerifyReport rep;
    const LeakageProfile leak = compute_leakage(mdp, partition);
    std::mt19937_64 rng(derive_stream(seed, 0, 0));

    // kernel/edge partition is exact
    {
        CheckResult c{"kernel_edge_partition", true, 0.0, 0.0, ""};
        for (int k = 0; k < partition.n_agents; ++k) {
            const std::size_t total = leak.kernel[static_cast<std::size_t>(k)].size() +
                                      leak.edge[static_cast<std::size_t>(k)].size();
            const std::size_t expect =
                partition.regions[static_cast<std::size_t>(k)].size() * static_cast<std::size_t>(mdp.n_actions);
            if (total != expect) {
                c.pass = false;
                c.detail = "agent " + std::to_string(k) + " kernel+edge != |S_k|*|A|";
            }
            for (const auto& [s, a] : leak.kernel[static_cast<std::size_t>(k)]) {
                double l = 0.0;
                for (int s2 = 0; s2 < mdp.n_states; ++s2)
                    if (!partition.contains(k, s2)) l += mdp.prob(s, a, s2);
                c.measured = std::max(c.measured, l);
                if (l >= kKernelZeroTol) c.pass = false;
            }
        }
        c.bound = kKernelZeroTol;
        rep.checks.push_back(std::move(c));
    }

    // local + federated contraction on sampled pairs
    {
        CheckResult local{"local_contraction", true, 0.0, 0.0, ""};
        CheckResult fed{"federated_contraction", true, 0.0, leak.gamma_fed + 1e-6, ""};
        for (int i = 0; i < pairs; ++i) {
            const QTable q1 = detail::random_q(mdp, rng);
            const QTable q2 = detail::random_q(mdp, rng);
            const double dq = linf_diff(q1, q2);
            if (dq == 0.0) continue;
            const VTable v1 = v_from_q(q1), v2 = v_from_q(q2);
            std::vector<LocalQTable> l1, l2;
            for (int k = 0; k < partition.n_agents; ++k) {
                l1.push_back(local_bellman_exact(mdp, partition, k, v1, tol_local, &q1));
                l2.push_back(local_bellman_exact(mdp, partition, k, v2, tol_local, &q2));
                double d = 0.0;
                for (std::size_t ii = 0; ii < l1.back().values.size(); ++ii)
                    d = std::max(d, std::abs(l1.back().values[ii] - l2.back().values[ii]));
                const double bound_k = leak.gamma_fed_k[static_cast<std::size_t>(k)] * dq + 5 * tol_local + 1e-6 * dq;
                local.measured = std::max(local.measured, d - bound_k);
                if (d > bound_k) {
                    local.pass = false;
                    if (local.detail.empty())
                        local.detail = json{{"agent", k}, {"q1", q1.values}, {"q2", q2.values}}.dump();
                }
            }
            const double dt = linf_diff(aggregate(l1, partition).first, aggregate(l2, partition).first);
            const double ratio = dt / dq;
            fed.measured = std::max(fed.measured, ratio);
            if (ratio > leak.gamma_fed + 1e-6 + 5 * tol_local / dq) {
                fed.pass = false;
                if (fed.detail.empty()) fed.detail = json{{"q1", q1.values}, {"q2", q2.values}}.dump();
            }
        }
        rep.checks.push_back(std::move(local));
        rep.checks.push_back(std::move(fed));
    }

    // fixed point: T_fed(Q*) = Q*
    {
        QTable q_star = value_iteration(mdp, QTable(mdp.n_states, mdp.n_actions), 1e-10).q;
        const double d = linf_diff(federated_backup(mdp, partition, q_star, tol_local), q_star);
        rep.checks.push_back({"fixed_point", d <= 1e-8, d, 1e-8, d <= 1e-8 ? "" : "Q* drifted under T_fed"});
    }

    // idempotence of each local operator (same v_tilde on both applications)
    {
        CheckResult c{"idempotence", true, 0.0, 1e-8, ""};
        const QTable q = detail::random_q(mdp, rng);
        const VTable v = v_from_q(q);
        for (int k = 0; k < partition.n_agents; ++k) {
            const LocalQTable once = local_bellman_exact(mdp, partition, k, v, tol_local, &q);
            const LocalQTable twice = local_bellman_exact(mdp, partition, k, v, tol_local, nullptr);
            double d = 0.0;
            for (std::size_t i = 0; i < once.values.size(); ++i)
                d = std::max(d, std::abs(once.values[i] - twice.values[i]));
            c.measured = std::max(c.measured, d);
            if (d > 1e-8) {
                c.pass = false;
                c.detail = json{{"agent", k}, {"q", q.values}}.dump();
            }
        }
        rep.checks.push_back(std::move(c));
    }

    // n-step factor: gamma at n=1, non-increasing, limit equals gamma_fed^k
    {
        CheckResult c{"n_step_factor", true, 0.0, 1e-9, ""};
        for (int k = 0; k < partition.n_agents; ++k) {
            const double p = leak.p_max[static_cast<std::size_t>(k)];
            double prev = n_step_contraction_factor(mdp.gamma, p, 1);
            if (std::abs(prev - mdp.gamma) > 0.0) c.pass = false;
            for (long nn = 2; nn <= 64; nn *= 2) {
                const double g = n_step_contraction_factor(mdp.gamma, p, nn);
                if (g > prev + 1e-15) c.pass = false;
                prev = g;
            }
            const double tail = n_step_contraction_factor(mdp.gamma, p, 1000000);
            c.measured = std::max(c.measured, std::abs(tail - leak.gamma_fed_k[static_cast<std::size_t>(k)]));
        }
        if (c.measured > c.bound) c.pass = false;
        rep.checks.push_back(std::move(c));
    }

    return rep;
}

inline std::string format_verify_report(const VerifyReport& rep) {
    std::ostringstream os;
    for (const auto& c : rep.checks) {
        os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " measured=" << format_double(c.measured)
           << " bound=" << format_double(c.bound);
        if (!c.pass && !c.detail.empty()) os << " witness=" << c.detail;
        os << "\n";
    }
    return os.str();
}

}  // namespace fedq
