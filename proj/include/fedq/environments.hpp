#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedq/federation.hpp"
#include "fedq/mdp.hpp"
#include "fedq/rng.hpp"

// Reproducible generators for the two experiment families. Both are pure
// functions of (spec, seed): identical inputs give bit-identical instances.

namespace fedq {

struct GeneratedEnv {
    TabularMdp mdp;
    RegionPartition partition;
};

struct RandomMdpSpec {
    int n_agents = 1;        // N
    int k_exclusive = 1;     // K_S, exclusive states per agent
    int e_shared = 0;        // E_S, shared states per agent
    int n_share = 1;         // N_S, sharing multiplicity
    std::optional<double> p_max;  // controlled leakage; requires e_shared == 0
    int n_actions = 2;
    std::uint64_t seed = 0;
    double gamma = 0.9;

    // |S| = K_S*N + E_S*N*N/N_S
    long n_shared_states() const {
        return static_cast<long>(e_shared) * n_agents * n_agents / n_share;
    }
    long n_states() const { return static_cast<long>(k_exclusive) * n_agents + n_shared_states(); }

    void validate() const {
        if (n_agents < 1) throw std::invalid_argument("random_mdp: n_agents must be >= 1");
        if (k_exclusive < 1) throw std::invalid_argument("random_mdp: k_exclusive must be >= 1");
        if (e_shared < 0) throw std::invalid_argument("random_mdp: e_shared must be >= 0");
        if (n_share < 1 || n_share > n_agents)
            throw std::invalid_argument("random_mdp: n_share must lie in [1, n_agents]");
        if ((static_cast<long>(e_shared) * n_agents * n_agents) % n_share != 0)
            throw std::invalid_argument("random_mdp: shared-state count E_S*N*N/N_S is not an integer");
        if (n_actions < 1) throw std::invalid_argument("random_mdp: n_actions must be >= 1");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("random_mdp: gamma must lie in (0,1)");
        if (p_max) {
            if (!(*p_max > 0.0 && *p_max < 1.0))
                throw std::invalid_argument("random_mdp: p_max must lie in (0,1)");
            if (e_shared != 0) throw std::invalid_argument("random_mdp: p_max requires e_shared == 0");
            if (n_agents < 2) throw std::invalid_argument("random_mdp: p_max requires n_agents >= 2");
        }
    }
};

namespace detail {

// Uniform Dirichlet row via normalized i.i.d. exponential draws.
inline void dirichlet_row(std::mt19937_64& rng, double* out, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::generate_canonical<double, 53>(rng);
        out[i] = -std::log1p(-u);
        sum += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

}  // namespace detail

/// RandomMDP: K_S*N exclusive states (agent k owns a contiguous block) plus
/// E_S*N*N/N_S shared states, each assigned to N_S agents by a seeded
/// round-robin window. Rewards i.i.d. U[0,1]. Without p_max every transition
/// row is uniform on the simplex; with p_max every (s,a) places exactly
/// (1-p_max) mass inside the owning region and p_max outside.
inline GeneratedEnv generate_random_mdp(const RandomMdpSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(spec.n_states());
    const int n_ex = spec.k_exclusive * spec.n_agents;
    const long n_sh = spec.n_shared_states();
    std::mt19937_64 rng(splitmix64(spec.seed));

    std::vector<std::vector<int>> regions(static_cast<std::size_t>(spec.n_agents));
    for (int k = 0; k < spec.n_agents; ++k)
        for (int i = 0; i < spec.k_exclusive; ++i)
            regions[static_cast<std::size_t>(k)].push_back(k * spec.k_exclusive + i);
    for (long j = 0; j < n_sh; ++j) {
        const int s = n_ex + static_cast<int>(j);
        const int start = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.n_agents));
        for (int i = 0; i < spec.n_share; ++i)
            regions[static_cast<std::size_t>((start + i) % spec.n_agents)].push_back(s);
    }
    RegionPartition partition = RegionPartition::from_regions(n, std::move(regions));

    TabularMdp mdp;
    mdp.n_states = n;
    mdp.n_actions = spec.n_actions;
    mdp.gamma = spec.gamma;
    mdp.rewards.resize(static_cast<std::size_t>(n) * spec.n_actions);
    for (auto& r : mdp.rewards) r = std::generate_canonical<double, 53>(rng);
    mdp.transitions.assign(static_cast<std::size_t>(n) * spec.n_actions * n, 0.0);

    if (!spec.p_max) {
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < spec.n_actions; ++a)
                detail::dirichlet_row(rng, mdp.transitions.data() +
                                               (static_cast<std::size_t>(s) * spec.n_actions + a) * n,
                                      static_cast<std::size_t>(n));
    } else {
        // Each state belongs to exactly one agent (e_shared == 0).
        const double p = *spec.p_max;
        std::vector<double> in_row, out_row;
        for (int s = 0; s < n; ++s) {
            const int k = s / spec.k_exclusive;
            const auto& region = partition.regions[static_cast<std::size_t>(k)];
            const std::size_t m = region.size();
            in_row.resize(m);
            out_row.resize(static_cast<std::size_t>(n) - m);
            for (int a = 0; a < spec.n_actions; ++a) {
                detail::dirichlet_row(rng, in_row.data(), m);
                detail::dirichlet_row(rng, out_row.data(), out_row.size());
                double* row = mdp.transitions.data() + (static_cast<std::size_t>(s) * spec.n_actions + a) * n;
                std::size_t i_in = 0, i_out = 0;
                for (int s2 = 0; s2 < n; ++s2) {
                    if (partition.contains(k, s2))
                        row[s2] = (1.0 - p) * in_row[i_in++];
                    else
                        row[s2] = p * out_row[i_out++];
                }
            }
        }
    }
    mdp.validate();
    return {std::move(mdp), std::move(partition)};
}

struct WindyCliffSpec {
    enum class Split { horizontal, vertical };
    int width = 6;
    int height = 6;
    double wind = 0.1;  // probability the intended move is overridden by "down"
    Split split = Split::horizontal;
    int n_agents = 1;
    std::uint64_t seed = 0;  // kept for interface symmetry; construction is deterministic
    double gamma = 0.9;
    bool goal_zero_reward = false;  // default: goal self-loop pays 1.0 each step

    void validate() const {
        if (width < 2 || height < 2) throw std::invalid_argument("windy_cliff: grid must be at least 2x2");
        if (!(wind >= 0.0 && wind <= 1.0)) throw std::invalid_argument("windy_cliff: wind must lie in [0,1]");
        if (n_agents < 1) throw std::invalid_argument("windy_cliff: n_agents must be >= 1");
        const int extent = split == Split::horizontal ? height : width;
        if (n_agents > extent)
            throw std::invalid_argument("windy_cliff: more agents than bands along the split dimension");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("windy_cliff: gamma must lie in (0,1)");
    }
};

/// Classic cliff-walking geometry: the bottom row is the Cliff Zone except
/// the bottom-left start and bottom-right goal. Actions {up,down,right,left};
/// the wind overrides the chosen action with "down" with probability p;
/// off-grid moves keep the agent in place. Arrival rewards: 1.0 at the goal,
/// -0.01 at other land cells, -0.1 at cliff cells, encoded on (s,a) as
/// R(s,a) = sum_{s'} P(s'|s,a) * r_arrival(s'). The goal self-loops; cliff
/// cells teleport to the start. Regions are N contiguous row or column bands
/// with remainder rows/columns in the last band.
inline GeneratedEnv generate_windy_cliff(const WindyCliffSpec& spec) {
    spec.validate();
    const int w = spec.width, h = spec.height;
    const int n = w * h;
    const auto idx = [w](int row, int col) { return row * w + col; };
    const int start = idx(h - 1, 0);
    const int goal = idx(h - 1, w - 1);
    const auto is_cliff = [&](int s) { return s / w == h - 1 && s != start && s != goal; };

    std::vector<double> arrival(static_cast<std::size_t>(n), -0.01);
    for (int s = 0; s < n; ++s)
        if (is_cliff(s)) arrival[static_cast<std::size_t>(s)] = -0.1;
    arrival[static_cast<std::size_t>(goal)] = 1.0;

    // action deltas: up, down, right, left
    constexpr int kDr[4] = {-1, 1, 0, 0};
    constexpr int kDc[4] = {0, 0, 1, -1};
    const auto move = [&](int s, int action) {
        const int row = s / w, col = s % w;
        const int nr = std::min(std::max(row + kDr[action], 0), h - 1);
        const int nc = std::min(std::max(col + kDc[action], 0), w - 1);
        return idx(nr, nc);
    };

    TabularMdp mdp;
    mdp.n_states = n;
    mdp.n_actions = 4;
    mdp.gamma = spec.gamma;
    mdp.rewards.assign(static_cast<std::size_t>(n) * 4, 0.0);
    mdp.transitions.assign(static_cast<std::size_t>(n) * 4 * n, 0.0);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < 4; ++a) {
            double* row = mdp.transitions.data() + (static_cast<std::size_t>(s) * 4 + a) * n;
            if (s == goal) {
                row[goal] = 1.0;
            } else if (is_cliff(s)) {
                row[start] = 1.0;
            } else {
                row[move(s, a)] += 1.0 - spec.wind;
                row[move(s, 1)] += spec.wind;  // wind blows "down"
            }
            double r = 0.0;
            for (int s2 = 0; s2 < n; ++s2) r += row[s2] * arrival[static_cast<std::size_t>(s2)];
            if (s == goal && spec.goal_zero_reward) r = 0.0;
            mdp.rewards[static_cast<std::size_t>(s) * 4 + a] = r;
        }
    }
    mdp.validate();

    std::vector<std::vector<int>> regions(static_cast<std::size_t>(spec.n_agents));
    const int extent = spec.split == WindyCliffSpec::Split::horizontal ? h : w;
    const int band = extent / spec.n_agents;
    for (int s = 0; s < n; ++s) {
        const int coord = spec.split == WindyCliffSpec::Split::horizontal ? s / w : s % w;
        const int k = std::min(coord / band, spec.n_agents - 1);
        regions[static_cast<std::size_t>(k)].push_back(s);
    }
    RegionPartition partition = RegionPartition::from_regions(n, std::move(regions));
    return {std::move(mdp), std::move(partition)};
}

/// Arrival reward per grid cell (1.0 goal, -0.01 land, -0.1 cliff). The
/// MDP encodes these on (s,a) as expectations over the arrival state.
inline std::vector<double> windy_cliff_arrival_rewards(const WindyCliffSpec& spec) {
    spec.validate();
    const int w = spec.width, h = spec.height;
    const int start = (h - 1) * w;
    const int goal = h * w - 1;
    std::vector<double> arrival(static_cast<std::size_t>(w) * h, -0.01);
    for (int s = (h - 1) * w; s < h * w; ++s)
        if (s != start && s != goal) arrival[static_cast<std::size_t>(s)] = -0.1;
    arrival[static_cast<std::size_t>(goal)] = 1.0;
    return arrival;
}

struct PartitionReport {
    struct AgentRow {
        int agent = 0;
        std::size_t region_size = 0;
        std::size_t kernel_size = 0;
        std::size_t edge_size = 0;
        double p_max = 0.0;
        double gamma_fed_k = 0.0;
    };
    std::vector<AgentRow> agents;
    std::vector<std::pair<int, int>> multiplicity_histogram;  // (N(s), count)
    int n_min = 0;
    double gamma_fed = 0.0;
};

inline PartitionReport describe_partition(const RegionPartition& partition, const TabularMdp& mdp) {
    const LeakageProfile leak = compute_leakage(mdp, partition);
    PartitionReport rep;
    for (int k = 0; k < partition.n_agents; ++k) {
        PartitionReport::AgentRow row;
        row.agent = k;
        row.region_size = partition.regions[static_cast<std::size_t>(k)].size();
        row.kernel_size = leak.kernel[static_cast<std::size_t>(k)].size();
        row.edge_size = leak.edge[static_cast<std::size_t>(k)].size();
        row.p_max = leak.p_max[static_cast<std::size_t>(k)];
        row.gamma_fed_k = leak.gamma_fed_k[static_cast<std::size_t>(k)];
        rep.agents.push_back(row);
    }
    std::vector<int> hist;
    for (int m : partition.multiplicity) {
        if (static_cast<std::size_t>(m) >= hist.size()) hist.resize(static_cast<std::size_t>(m) + 1, 0);
        hist[static_cast<std::size_t>(m)] += 1;
    }
    for (std::size_t m = 0; m < hist.size(); ++m)
        if (hist[m] > 0) rep.multiplicity_histogram.emplace_back(static_cast<int>(m), hist[m]);
    rep.n_min = partition.n_min;
    rep.gamma_fed = leak.gamma_fed;
    return rep;
}

inline std::string format_partition_report(const PartitionReport& rep) {
    std::ostringstream os;
    os << "agents: " << rep.agents.size() << ", N_min: " << rep.n_min << ", gamma_fed: " << rep.gamma_fed << "\n";
    os << "multiplicity histogram:";
    for (const auto& [m, c] : rep.multiplicity_histogram) os << " N(s)=" << m << " x" << c;
    os << "\n";
    for (const auto& a : rep.agents) {
        os << "  agent " << a.agent << ": |S_k|=" << a.region_size << " kernel=" << a.kernel_size
           << " edge=" << a.edge_size << " p_max=" << a.p_max << " gamma_fed_k=" << a.gamma_fed_k << "\n";
    }
    return os.str();
}

}  // namespace fedq
