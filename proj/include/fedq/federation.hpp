#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedq/mdp.hpp"

// Federated control machinery: restricted-region partitions, leakage
// analysis, augmented local MDPs, the exact local/federated Bellman
// operators and the round-based protocol driver.

namespace fedq {

// Leakage below this counts as exact zero when classifying kernel vs edge;
// generators produce exact zeros, the threshold only guards float noise.
inline constexpr double kKernelZeroTol = 1e-15;

/// The N restricted regions {S_k} with coverage bookkeeping.
struct RegionPartition {
    int n_agents = 0;
    int n_states = 0;
    std::vector<std::vector<int>> regions;   // per agent, sorted ascending
    std::vector<std::vector<char>> member;   // [k][s] indicator
    std::vector<int> multiplicity;           // N(s)
    int n_min = 0;                           // min_s N(s)

    bool contains(int k, int s) const { return member[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] != 0; }

    /// Validates coverage, non-empty regions and index ranges; sorts and
    /// deduplicates region lists; computes membership and multiplicity.
    static RegionPartition from_regions(int n_states, std::vector<std::vector<int>> regions) {
        RegionPartition p;
        p.n_states = n_states;
        p.n_agents = static_cast<int>(regions.size());
        if (p.n_agents <= 0) throw std::invalid_argument("partition: needs at least one agent");
        p.regions = std::move(regions);
        p.member.assign(static_cast<std::size_t>(p.n_agents),
                        std::vector<char>(static_cast<std::size_t>(n_states), 0));
        for (int k = 0; k < p.n_agents; ++k) {
            auto& r = p.regions[static_cast<std::size_t>(k)];
            if (r.empty()) throw std::invalid_argument("partition: region " + std::to_string(k) + " is empty");
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
            for (int s : r) {
                if (s < 0 || s >= n_states)
                    throw std::invalid_argument("partition: state index " + std::to_string(s) +
                                                " out of range in region " + std::to_string(k));
                p.member[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] = 1;
            }
        }
        p.multiplicity.assign(static_cast<std::size_t>(n_states), 0);
        for (int s = 0; s < n_states; ++s) {
            int n = 0;
            for (int k = 0; k < p.n_agents; ++k) n += p.member[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)];
            p.multiplicity[static_cast<std::size_t>(s)] = n;
            if (n == 0)
                throw std::invalid_argument("partition: state " + std::to_string(s) + " is covered by no region");
        }
        p.n_min = *std::min_element(p.multiplicity.begin(), p.multiplicity.end());
        return p;
    }
};

/// gamma_fed^k = gamma * p / (1 - gamma * (1 - p)); the contraction modulus
/// of the local Bellman operator for maximum leakage p.
inline double contraction_factor(double gamma, double p_max_k) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("contraction_factor: gamma must lie in (0,1)");
    if (!(p_max_k >= 0.0 && p_max_k <= 1.0))
        throw std::invalid_argument("contraction_factor: p_max must lie in [0,1]");
    return gamma * p_max_k / (1.0 - gamma * (1.0 - p_max_k));
}

/// n-step modulus gamma_fed-n^k =
/// gamma * { [gamma(1-p)]^(n-1) + p * (1 - [gamma(1-p)]^(n-1)) / (1 - gamma(1-p)) }.
/// Equals gamma at n=1 and decreases towards contraction_factor as n grows.
inline double n_step_contraction_factor(double gamma, double p_max_k, long n) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("n_step_contraction_factor: gamma must lie in (0,1)");
    if (!(p_max_k >= 0.0 && p_max_k <= 1.0))
        throw std::invalid_argument("n_step_contraction_factor: p_max must lie in [0,1]");
    if (n < 1) throw std::invalid_argument("n_step_contraction_factor: n must be >= 1");
    const double base = gamma * (1.0 - p_max_k);
    const double pw = std::pow(base, static_cast<double>(n - 1));
    if (p_max_k == 0.0) return gamma * pw;  // gamma^n
    return gamma * (pw + p_max_k * (1.0 - pw) / (1.0 - base));
}

/// Per-agent leakage tables, kernel/edge split and contraction factors.
struct LeakageProfile {
    // leakage[k][i * n_actions + a] where i indexes partition.regions[k].
    std::vector<std::vector<double>> leakage;
    std::vector<std::vector<std::pair<int, int>>> kernel;  // global (s,a) pairs
    std::vector<std::vector<std::pair<int, int>>> edge;
    std::vector<double> p_max;                       // 0 when edge empty
    std::vector<std::optional<double>> p_min;        // defined only when edge nonempty
    std::vector<double> gamma_fed_k;
    double gamma_fed = 0.0;
};

/// P_k(s,a) = sum_{s' not in S_k} P(s'|s,a) for every region pair, plus the
/// derived kernel/edge sets, p_max^k and contraction factors.
inline LeakageProfile compute_leakage(const TabularMdp& mdp, const RegionPartition& partition) {
    if (partition.n_states != mdp.n_states) throw std::invalid_argument("compute_leakage: dimension mismatch");
    LeakageProfile out;
    const int n = partition.n_agents;
    out.leakage.resize(static_cast<std::size_t>(n));
    out.kernel.resize(static_cast<std::size_t>(n));
    out.edge.resize(static_cast<std::size_t>(n));
    out.p_max.assign(static_cast<std::size_t>(n), 0.0);
    out.p_min.resize(static_cast<std::size_t>(n));
    out.gamma_fed_k.assign(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        const auto& region = partition.regions[static_cast<std::size_t>(k)];
        auto& leak = out.leakage[static_cast<std::size_t>(k)];
        leak.assign(region.size() * static_cast<std::size_t>(mdp.n_actions), 0.0);
        double pmax = 0.0;
        double pmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < region.size(); ++i) {
            const int s = region[i];
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double* p = mdp.row(s, a);
                double l = 0.0;
                for (int s2 = 0; s2 < mdp.n_states; ++s2)
                    if (!partition.contains(k, s2)) l += p[s2];
                leak[i * static_cast<std::size_t>(mdp.n_actions) + a] = l;
                if (l < kKernelZeroTol) {
                    out.kernel[static_cast<std::size_t>(k)].emplace_back(s, a);
                } else {
                    out.edge[static_cast<std::size_t>(k)].emplace_back(s, a);
                    pmax = std::max(pmax, l);
                    pmin = std::min(pmin, l);
                }
            }
        }
        if (!out.edge[static_cast<std::size_t>(k)].empty()) {
            out.p_max[static_cast<std::size_t>(k)] = pmax;
            out.p_min[static_cast<std::size_t>(k)] = pmin;
        }
        out.gamma_fed_k[static_cast<std::size_t>(k)] = contraction_factor(mdp.gamma, out.p_max[static_cast<std::size_t>(k)]);
    }
    out.gamma_fed = *std::max_element(out.gamma_fed_k.begin(), out.gamma_fed_k.end());
    return out;
}

/// Local MDP M_k: interior rows reference the base MDP; exterior states pay
/// the terminal value v_tilde and fall into the absorbing s_null.
struct AugmentedLocalMdp {
    const TabularMdp* base = nullptr;
    const RegionPartition* partition = nullptr;
    int agent = -1;
    VTable v_tilde;

    bool interior(int s) const { return partition->contains(agent, s); }
    const std::vector<int>& region() const { return partition->regions[static_cast<std::size_t>(agent)]; }

    /// R_k(s,a): base reward inside S_k, terminal value outside.
    double reward(int s, int a) const { return interior(s) ? base->reward(s, a) : v_tilde(s); }

    /// P_k(s'|s,a) for interior s; exterior states move to s_null w.p. 1.
    double prob(int s, int a, int s2) const { return interior(s) ? base->prob(s, a, s2) : 0.0; }
};

inline AugmentedLocalMdp build_local_mdp(const TabularMdp& mdp, const RegionPartition& partition, int k,
                                         VTable v_tilde) {
    if (k < 0 || k >= partition.n_agents) throw std::invalid_argument("build_local_mdp: agent index out of range");
    if (v_tilde.size() != mdp.n_states) throw std::invalid_argument("build_local_mdp: v_tilde size mismatch");
    return AugmentedLocalMdp{&mdp, &partition, k, std::move(v_tilde)};
}

/// Q-values over S_k x A only; states listed in region (ascending) order.
struct LocalQTable {
    int agent = -1;
    std::vector<int> states;  // global indices, ascending
    int n_actions = 0;
    std::vector<double> values;  // states.size() * n_actions

    double operator()(std::size_t local_i, int a) const { return values[local_i * n_actions + a]; }
    double& operator()(std::size_t local_i, int a) { return values[local_i * n_actions + a]; }
};

/// Realizes T_fed^k exactly: solves the augmented local MDP by value
/// iteration until the local Bellman residual is <= tol on S_k x A.
/// The exterior contribution sum_{s' not in S_k} P(s'|s,a) v_tilde(s') is
/// constant during the solve and folded into the reward.
inline LocalQTable local_bellman_exact(const TabularMdp& mdp, const RegionPartition& partition, int k,
                                       const VTable& v_tilde, double tol, const QTable* warm_start = nullptr,
                                       long max_iters = 10000000) {
    if (!(tol > 0.0)) throw std::invalid_argument("local_bellman_exact: tol must be positive");
    if (k < 0 || k >= partition.n_agents)
        throw std::invalid_argument("local_bellman_exact: agent index out of range");
    if (v_tilde.size() != mdp.n_states) throw std::invalid_argument("local_bellman_exact: v_tilde size mismatch");

    const auto& region = partition.regions[static_cast<std::size_t>(k)];
    const std::size_t m = region.size();
    const int na = mdp.n_actions;

    // local state index per global state, -1 outside
    std::vector<int> local_of(static_cast<std::size_t>(mdp.n_states), -1);
    for (std::size_t i = 0; i < m; ++i) local_of[static_cast<std::size_t>(region[i])] = static_cast<int>(i);

    // fixed part: R(s,a) + gamma * exterior mass weighted by v_tilde
    std::vector<double> fixed(m * static_cast<std::size_t>(na));
    // interior transition block, m x na x m
    std::vector<double> p_in(m * static_cast<std::size_t>(na) * m);
    for (std::size_t i = 0; i < m; ++i) {
        const int s = region[i];
        for (int a = 0; a < na; ++a) {
            const double* p = mdp.row(s, a);
            double ext = 0.0;
            double* pin = p_in.data() + (i * static_cast<std::size_t>(na) + a) * m;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                const int j = local_of[static_cast<std::size_t>(s2)];
                if (j >= 0)
                    pin[j] = p[s2];
                else
                    ext += p[s2] * v_tilde(s2);
            }
            fixed[i * static_cast<std::size_t>(na) + a] = mdp.reward(s, a) + mdp.gamma * ext;
        }
    }

    std::vector<double> q(m * static_cast<std::size_t>(na), 0.0);
    if (warm_start) {
        for (std::size_t i = 0; i < m; ++i)
            for (int a = 0; a < na; ++a) q[i * static_cast<std::size_t>(na) + a] = (*warm_start)(region[i], a);
    }

    std::vector<double> v(m), tq(m * static_cast<std::size_t>(na));
    double res = 0.0;
    for (long it = 0; it <= max_iters; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* p = q.data() + i * static_cast<std::size_t>(na);
            v[i] = *std::max_element(p, p + na);
        }
        res = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (int a = 0; a < na; ++a) {
                const double* pin = p_in.data() + (i * static_cast<std::size_t>(na) + a) * m;
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += pin[j] * v[j];
                const std::size_t idx = i * static_cast<std::size_t>(na) + a;
                tq[idx] = fixed[idx] + mdp.gamma * acc;
                res = std::max(res, std::abs(tq[idx] - q[idx]));
            }
        }
        if (res <= tol) {
            LocalQTable out;
            out.agent = k;
            out.states = region;
            out.n_actions = na;
            out.values = std::move(q);
            return out;
        }
        q.swap(tq);
    }
    throw std::runtime_error("local_bellman_exact: max_iters exceeded for agent " + std::to_string(k) +
                             ", residual " + std::to_string(res));
}

/// Overlap-mean aggregation: Q(s,a) = (1/N(s)) sum_k Q_k(s,a) 1_k(s), summed in
/// ascending agent order for bit-reproducibility; V(s) = max_a Q(s,a).
inline std::pair<QTable, VTable> aggregate(const std::vector<LocalQTable>& per_agent_q,
                                           const RegionPartition& partition) {
    if (per_agent_q.size() != static_cast<std::size_t>(partition.n_agents))
        throw std::invalid_argument("aggregate: expected one Q-table per agent");
    int na = 0;
    for (const auto& lq : per_agent_q) na = std::max(na, lq.n_actions);
    // sum in ascending agent-index order, whatever the caller's list order
    std::vector<std::size_t> order(per_agent_q.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return per_agent_q[a].agent < per_agent_q[b].agent; });
    QTable q(partition.n_states, na, 0.0);
    std::vector<int> count(static_cast<std::size_t>(partition.n_states), 0);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const auto& lq = per_agent_q[order[oi]];
        if (lq.n_actions != na) throw std::invalid_argument("aggregate: action count mismatch");
        for (std::size_t i = 0; i < lq.states.size(); ++i) {
            const int s = lq.states[i];
            for (int a = 0; a < na; ++a) q(s, a) += lq(i, a);
            count[static_cast<std::size_t>(s)] += 1;
        }
    }
    for (int s = 0; s < partition.n_states; ++s) {
        const int n = count[static_cast<std::size_t>(s)];
        if (n == 0) throw std::invalid_argument("aggregate: state " + std::to_string(s) + " covered by no agent");
        for (int a = 0; a < na; ++a) q(s, a) /= n;
    }
    VTable v = v_from_q(q);
    return {std::move(q), std::move(v)};
}

/// One application of T_fed = aggregate after exact local solves.
inline QTable federated_backup(const TabularMdp& mdp, const RegionPartition& partition, const QTable& q,
                               double local_tol) {
    VTable v = v_from_q(q);
    std::vector<LocalQTable> locals;
    locals.reserve(static_cast<std::size_t>(partition.n_agents));
    for (int k = 0; k < partition.n_agents; ++k)
        locals.push_back(local_bellman_exact(mdp, partition, k, v, local_tol, &q));
    return aggregate(locals, partition).first;
}

struct OracleResult {
    LocalQTable q;
    std::uint64_t samples = 0;
};

/// Pluggable local-solver contract for a single protocol round.
using LocalOracle = std::function<OracleResult(const TabularMdp& mdp, const RegionPartition& partition, int k,
                                               const VTable& v_tilde, const QTable& global_q, int round)>;

struct RoundMetrics {
    int round = 0;
    double linf_error = std::numeric_limits<double>::quiet_NaN();  // vs supplied Q*, NaN when absent
    std::vector<std::uint64_t> samples_per_agent;                  // cumulative
    double q_change = 0.0;                                         // ||Q_{r+1} - Q_r||_inf
};

struct FedRunState {
    int round = 0;
    QTable global_q;
    VTable global_v;
    std::vector<LocalQTable> per_agent_q;
    std::vector<std::uint64_t> samples_per_agent;
    std::vector<RoundMetrics> history;
    std::vector<QTable> q_history;  // filled only when requested
    bool stopped_early = false;
};

struct FedRunOptions {
    int rounds = 1;
    double stop_tol = 0.0;             // <= 0 disables early stopping
    const QTable* q_star = nullptr;    // optional reference for error tracking
    bool record_q = false;
};

/// Algorithm-1 driver: per round derive V_r, build the N local MDPs, invoke
/// the oracle per agent, aggregate by multiplicity-weighted averaging.
inline FedRunState fedq_run(const TabularMdp& mdp, const RegionPartition& partition, const LocalOracle& oracle,
                            const QTable& q0, const FedRunOptions& opts) {
    if (opts.rounds < 1) throw std::invalid_argument("fedq_run: rounds must be >= 1");
    if (!q0.same_shape(mdp)) throw std::invalid_argument("fedq_run: q0 dimension mismatch");
    const double qmax = 1.0 / (1.0 - mdp.gamma);
    for (double x : q0.values)
        if (!(x >= 0.0 && x <= qmax))
            throw std::invalid_argument("fedq_run: q0 entries must lie in [0, 1/(1-gamma)]");

    FedRunState st;
    st.global_q = q0;
    st.global_v = v_from_q(st.global_q);
    st.samples_per_agent.assign(static_cast<std::size_t>(partition.n_agents), 0);
    for (int r = 0; r < opts.rounds; ++r) {
        std::vector<LocalQTable> locals;
        locals.reserve(static_cast<std::size_t>(partition.n_agents));
        for (int k = 0; k < partition.n_agents; ++k) {
            try {
                OracleResult res = oracle(mdp, partition, k, st.global_v, st.global_q, r);
                st.samples_per_agent[static_cast<std::size_t>(k)] += res.samples;
                locals.push_back(std::move(res.q));
            } catch (const std::exception& e) {
                throw std::runtime_error("fedq_run: oracle failed for agent " + std::to_string(k) + " in round " +
                                         std::to_string(r) + ": " + e.what());
            }
        }
        auto [q_next, v_next] = aggregate(locals, partition);
        const double change = linf_diff(q_next, st.global_q);
        st.global_q = std::move(q_next);
        st.global_v = std::move(v_next);
        st.per_agent_q = std::move(locals);
        st.round = r + 1;
        RoundMetrics m;
        m.round = st.round;
        if (opts.q_star) m.linf_error = linf_diff(st.global_q, *opts.q_star);
        m.samples_per_agent = st.samples_per_agent;
        m.q_change = change;
        st.history.push_back(std::move(m));
        if (opts.record_q) st.q_history.push_back(st.global_q);
        if (opts.stop_tol > 0.0 && change <= opts.stop_tol) {
            st.stopped_early = true;
            break;
        }
    }
    return st;
}

}  // namespace fedq
