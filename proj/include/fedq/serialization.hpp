#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "fedq/environments.hpp"
#include "fedq/federation.hpp"
#include "fedq/mdp.hpp"
#include "fedq/oracles.hpp"

// JSON file formats. Writers emit full double precision (nlohmann's
// round-trip serialization); readers validate every invariant and reject
// with a field-identifying error.

namespace fedq {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(where + ": missing field '" + key + "'");
    return *it;
}

}  // namespace detail

inline json mdp_to_json(const TabularMdp& mdp) {
    return json{{"n_states", mdp.n_states},
                {"n_actions", mdp.n_actions},
                {"gamma", mdp.gamma},
                {"rewards", mdp.rewards},
                {"transitions", mdp.transitions}};
}

inline TabularMdp mdp_from_json(const json& j) {
    TabularMdp mdp;
    mdp.n_states = detail::require(j, "n_states", "mdp").get<int>();
    mdp.n_actions = detail::require(j, "n_actions", "mdp").get<int>();
    mdp.gamma = detail::require(j, "gamma", "mdp").get<double>();
    mdp.rewards = detail::require(j, "rewards", "mdp").get<std::vector<double>>();
    mdp.transitions = detail::require(j, "transitions", "mdp").get<std::vector<double>>();
    mdp.validate();
    return mdp;
}

inline json partition_to_json(const RegionPartition& p) {
    return json{{"n_states", p.n_states}, {"regions", p.regions}};
}

inline RegionPartition partition_from_json(const json& j) {
    const int n_states = detail::require(j, "n_states", "partition").get<int>();
    auto regions = detail::require(j, "regions", "partition").get<std::vector<std::vector<int>>>();
    return RegionPartition::from_regions(n_states, std::move(regions));
}

inline json qtable_to_json(const QTable& q, std::optional<double> tol = std::nullopt,
                           std::optional<long> iters = std::nullopt) {
    json j{{"n_states", q.n_states}, {"n_actions", q.n_actions}, {"values", q.values}};
    if (tol) j["tol"] = *tol;
    if (iters) j["iters"] = *iters;
    return j;
}

inline QTable qtable_from_json(const json& j) {
    QTable q;
    q.n_states = detail::require(j, "n_states", "qtable").get<int>();
    q.n_actions = detail::require(j, "n_actions", "qtable").get<int>();
    q.values = detail::require(j, "values", "qtable").get<std::vector<double>>();
    if (q.n_states <= 0 || q.n_actions <= 0 ||
        q.values.size() != static_cast<std::size_t>(q.n_states) * q.n_actions)
        throw std::invalid_argument("qtable: shape/values size mismatch");
    for (double x : q.values)
        if (!std::isfinite(x)) throw std::invalid_argument("qtable: non-finite value");
    return q;
}

inline json random_mdp_spec_to_json(const RandomMdpSpec& s) {
    json j{{"type", "random_mdp"},   {"n_agents", s.n_agents}, {"k_exclusive", s.k_exclusive},
           {"e_shared", s.e_shared}, {"n_share", s.n_share},   {"n_actions", s.n_actions},
           {"seed", s.seed},         {"gamma", s.gamma}};
    if (s.p_max) j["p_max"] = *s.p_max;
    return j;
}

inline RandomMdpSpec random_mdp_spec_from_json(const json& j) {
    RandomMdpSpec s;
    s.n_agents = detail::require(j, "n_agents", "random_mdp spec").get<int>();
    s.k_exclusive = detail::require(j, "k_exclusive", "random_mdp spec").get<int>();
    s.e_shared = j.value("e_shared", 0);
    s.n_share = j.value("n_share", 1);
    if (j.contains("p_max")) s.p_max = j["p_max"].get<double>();
    s.n_actions = detail::require(j, "n_actions", "random_mdp spec").get<int>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.gamma = detail::require(j, "gamma", "random_mdp spec").get<double>();
    s.validate();
    return s;
}

inline json windy_cliff_spec_to_json(const WindyCliffSpec& s) {
    return json{{"type", "windy_cliff"},
                {"width", s.width},
                {"height", s.height},
                {"wind", s.wind},
                {"split", s.split == WindyCliffSpec::Split::horizontal ? "horizontal" : "vertical"},
                {"n_agents", s.n_agents},
                {"seed", s.seed},
                {"gamma", s.gamma},
                {"goal_zero_reward", s.goal_zero_reward}};
}

inline WindyCliffSpec windy_cliff_spec_from_json(const json& j) {
    WindyCliffSpec s;
    s.width = detail::require(j, "width", "windy_cliff spec").get<int>();
    s.height = detail::require(j, "height", "windy_cliff spec").get<int>();
    s.wind = detail::require(j, "wind", "windy_cliff spec").get<double>();
    const std::string split = j.value("split", "horizontal");
    if (split == "horizontal")
        s.split = WindyCliffSpec::Split::horizontal;
    else if (split == "vertical")
        s.split = WindyCliffSpec::Split::vertical;
    else
        throw std::invalid_argument("windy_cliff spec: split must be 'horizontal' or 'vertical'");
    s.n_agents = detail::require(j, "n_agents", "windy_cliff spec").get<int>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.gamma = detail::require(j, "gamma", "windy_cliff spec").get<double>();
    s.goal_zero_reward = j.value("goal_zero_reward", false);
    s.validate();
    return s;
}

using EnvSpec = std::variant<RandomMdpSpec, WindyCliffSpec>;

inline EnvSpec env_spec_from_json(const json& j) {
    const std::string type = detail::require(j, "type", "env spec").get<std::string>();
    if (type == "random_mdp") return random_mdp_spec_from_json(j);
    if (type == "windy_cliff") return windy_cliff_spec_from_json(j);
    throw std::invalid_argument("env spec: unknown type '" + type + "'");
}

inline GeneratedEnv generate_env(const EnvSpec& spec) {
    if (std::holds_alternative<RandomMdpSpec>(spec)) return generate_random_mdp(std::get<RandomMdpSpec>(spec));
    return generate_windy_cliff(std::get<WindyCliffSpec>(spec));
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fedq
