#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedq/federation.hpp"
#include "fedq/mdp.hpp"
#include "fedq/rng.hpp"

// Local RL solvers pluggable into the protocol driver: the exact oracle,
// synchronous Q-learning on a generative model, the integrated round/step
// algorithm and the single-agent baseline.

namespace fedq {

struct OracleConfig {
    enum class Kind { exact, sync_q };
    Kind kind = Kind::exact;
    double eta = 0.5;      // learning rate, (0,1]
    int batch_size = 5;    // next-state draws per (s,a) per step
    int local_steps = 1;   // E
    double tol = 1e-10;    // exact oracle only

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("oracle: eta must lie in (0,1]");
        if (local_steps < 1) throw std::invalid_argument("oracle: local_steps must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("oracle: batch_size must be >= 1");
        if (kind == Kind::exact && !(tol > 0.0)) throw std::invalid_argument("oracle: tol must be positive");
    }
};

/// Seeded sampler of next states from P(.|s,a) via inverse CDF.
class GenerativeModel {
  public:
    GenerativeModel(const TabularMdp& mdp, std::uint64_t stream_seed) : mdp_(&mdp), rng_(stream_seed) {}

    int sample_next(int s, int a) {
        const double u = std::generate_canonical<double, 53>(rng_);
        const double* p = mdp_->row(s, a);
        double acc = 0.0;
        for (int s2 = 0; s2 < mdp_->n_states; ++s2) {
            acc += p[s2];
            if (u < acc) return s2;
        }
        // round-off: fall back to the last state with positive mass
        for (int s2 = mdp_->n_states - 1; s2 >= 0; --s2)
            if (p[s2] > 0.0) return s2;
        return mdp_->n_states - 1;
    }

  private:
    const TabularMdp* mdp_;
    std::mt19937_64 rng_;
};

/// The idealized oracle: exact local Bellman solve, zero samples. Warm
/// starts from the restriction of the current global Q.
inline LocalOracle make_exact_oracle(double tol) {
    return [tol](const TabularMdp& mdp, const RegionPartition& partition, int k, const VTable& v_tilde,
                 const QTable& global_q, int /*round*/) -> OracleResult {
        return {local_bellman_exact(mdp, partition, k, v_tilde, tol, &global_q), 0};
    };
}

/// One synchronous Q-learning step on the augmented local MDP of agent k.
/// For every (s,a) in S_k x A (lexicographic order) draws batch_size next
/// states, averages the empirical backup
///   R(s,a) + gamma * (1/b) sum_j V(s'_j),
/// with V(s') = max_a' Q(s',a') inside S_k and V(s') = v_tilde(s') outside,
/// then applies Q <- (1-eta) Q + eta * backup. Exterior rows are untouched.
inline QTable sync_q_step(const TabularMdp& mdp, const RegionPartition& partition, int k, const QTable& q,
                          const VTable& v_tilde, GenerativeModel& gen, double eta, int batch_size) {
    QTable out = q;
    for (int s : partition.regions[static_cast<std::size_t>(k)]) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            double avg = 0.0;
            for (int j = 0; j < batch_size; ++j) {
                const int s2 = gen.sample_next(s, a);
                avg += partition.contains(k, s2) ? q.row_max(s2) : v_tilde(s2);
            }
            avg /= batch_size;
            const double backup = mdp.reward(s, a) + mdp.gamma * avg;
            out(s, a) = (1.0 - eta) * q(s, a) + eta * backup;
        }
    }
    return out;
}

struct SynQRunConfig {
    double eta = 0.5;
    int local_steps = 1;  // E
    int rounds = 1;       // R; total update steps T = E * R
    int batch_size = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("synq: eta must lie in (0,1]");
        if (local_steps < 1) throw std::invalid_argument("synq: local_steps must be >= 1");
        if (rounds < 1) throw std::invalid_argument("synq: rounds must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("synq: batch_size must be >= 1");
    }
};

struct SynQRunOptions {
    const QTable* q_star = nullptr;
    bool record_q = false;
};

/// Round/step algorithm with synchronous Q-learning as the local oracle.
/// Between synchronizations each agent's exterior Q entries stay frozen at
/// the last aggregated values; every E local steps the tables are averaged
/// on overlaps and re-broadcast. Per-agent RNG streams are keyed by
/// (seed, agent, round).
inline FedRunState fedq_synq(const TabularMdp& mdp, const RegionPartition& partition, const SynQRunConfig& cfg,
                             const QTable& q0, const SynQRunOptions& opts = {}) {
    cfg.validate();
    if (!q0.same_shape(mdp)) throw std::invalid_argument("fedq_synq: q0 dimension mismatch");
    if (partition.n_states != mdp.n_states) throw std::invalid_argument("fedq_synq: partition dimension mismatch");
    const double qmax = 1.0 / (1.0 - mdp.gamma);
    for (double x : q0.values)
        if (!(x >= 0.0 && x <= qmax))
            throw std::invalid_argument("fedq_synq: q0 entries must lie in [0, 1/(1-gamma)]");

    FedRunState st;
    st.global_q = q0;
    st.global_v = v_from_q(q0);
    st.samples_per_agent.assign(static_cast<std::size_t>(partition.n_agents), 0);
    std::vector<QTable> agent_q(static_cast<std::size_t>(partition.n_agents), q0);

    for (int r = 0; r < cfg.rounds; ++r) {
        const VTable v_frozen = st.global_v;
        for (int k = 0; k < partition.n_agents; ++k) {
            GenerativeModel gen(mdp, derive_stream(cfg.seed, static_cast<std::uint64_t>(k),
                                                   static_cast<std::uint64_t>(r)));
            QTable& qk = agent_q[static_cast<std::size_t>(k)];
            for (int e = 0; e < cfg.local_steps; ++e)
                qk = sync_q_step(mdp, partition, k, qk, v_frozen, gen, cfg.eta, cfg.batch_size);
            st.samples_per_agent[static_cast<std::size_t>(k)] +=
                static_cast<std::uint64_t>(cfg.local_steps) *
                partition.regions[static_cast<std::size_t>(k)].size() *
                static_cast<std::uint64_t>(mdp.n_actions) * static_cast<std::uint64_t>(cfg.batch_size);
        }
        std::vector<LocalQTable> locals;
        locals.reserve(static_cast<std::size_t>(partition.n_agents));
        for (int k = 0; k < partition.n_agents; ++k) {
            const auto& region = partition.regions[static_cast<std::size_t>(k)];
            LocalQTable lq;
            lq.agent = k;
            lq.states = region;
            lq.n_actions = mdp.n_actions;
            lq.values.resize(region.size() * static_cast<std::size_t>(mdp.n_actions));
            for (std::size_t i = 0; i < region.size(); ++i)
                for (int a = 0; a < mdp.n_actions; ++a) lq(i, a) = agent_q[static_cast<std::size_t>(k)](region[i], a);
            locals.push_back(std::move(lq));
        }
        auto [q_next, v_next] = aggregate(locals, partition);
        st.global_q = std::move(q_next);
        st.global_v = std::move(v_next);
        st.per_agent_q = std::move(locals);
        for (auto& qk : agent_q) qk = st.global_q;  // broadcast
        st.round = r + 1;
        RoundMetrics m;
        m.round = st.round;
        if (opts.q_star) m.linf_error = linf_diff(st.global_q, *opts.q_star);
        m.samples_per_agent = st.samples_per_agent;
        st.history.push_back(std::move(m));
        if (opts.record_q) st.q_history.push_back(st.global_q);
    }
    return st;
}

/// Single-agent synchronous Q-learning on the global MDP: the trivial
/// partition with E = 1, one metrics row per iteration. Identical seeding
/// makes it trajectory-equal to fedq_synq on that partition.
inline FedRunState super_agent_baseline(const TabularMdp& mdp, const SynQRunConfig& cfg, const QTable& q0,
                                        const SynQRunOptions& opts = {}) {
    cfg.validate();
    std::vector<int> all(static_cast<std::size_t>(mdp.n_states));
    for (int s = 0; s < mdp.n_states; ++s) all[static_cast<std::size_t>(s)] = s;
    RegionPartition trivial = RegionPartition::from_regions(mdp.n_states, {all});
    SynQRunConfig flat = cfg;
    flat.local_steps = 1;
    flat.rounds = cfg.rounds * cfg.local_steps;  // same total step budget T
    return fedq_synq(mdp, trivial, flat, q0, opts);
}

/// Theoretical prescriptions for (T, eta, E) at target accuracy epsilon and
/// confidence 1 - delta. Desk-scale runs use practical values instead; this
/// only reports what the bounds ask for.
struct SynQTheory {
    double t_min = 0.0;
    double eta_max = 0.0;
    double e_max = 0.0;
};

inline SynQTheory synq_theory_prescription(double epsilon, double delta, int n_min, double gamma,
                                           long n_states, long n_actions, int n_agents) {
    if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || n_min < 1 || !(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("synq_theory_prescription: domain violation");
    const double one_minus = 1.0 - gamma;
    const double log_eps = std::log(10.0 / (epsilon * one_minus * one_minus));
    // T appears inside its own log term; a few fixed-point sweeps settle it.
    double t = 1.0;
    for (int i = 0; i < 8; ++i) {
        const double log_t = std::log(6.0 * n_states * n_actions * std::max(t, 1.0) * n_agents / delta);
        t = 1296.0 / (n_min * epsilon * epsilon * std::pow(one_minus, 5)) * log_eps * log_eps * log_t;
    }
    const double log_t = std::log(6.0 * n_states * n_actions * std::max(t, 1.0) * n_agents / delta);
    SynQTheory th;
    th.t_min = t;
    th.eta_max = n_min * epsilon * epsilon * std::pow(one_minus, 4) / (1296.0 * log_t);
    th.e_max = 1.0 + (1.0 / (1.01 * th.eta_max)) * std::min(one_minus / (4.0 * gamma), 1.0 / n_min);
    return th;
}

inline std::string format_synq_theory(const SynQTheory& th) {
    std::ostringstream os;
    os << "theory: T >= " << th.t_min << ", eta <= " << th.eta_max << ", E <= " << th.e_max;
    return os.str();
}

}  // namespace fedq
