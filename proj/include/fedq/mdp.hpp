#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Tabular MDP representation and exact Bellman machinery.
//
// All tables are dense, row-major, 64-bit doubles. Argmax ties are broken
// by lowest action index everywhere.

namespace fedq {

struct QTable;
struct VTable;

/// Dense finite MDP: rewards indexed (s,a), transitions indexed (s,a,s').
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    std::vector<double> rewards;      // n_states * n_actions
    std::vector<double> transitions;  // n_states * n_actions * n_states

    double reward(int s, int a) const { return rewards[static_cast<std::size_t>(s) * n_actions + a]; }
    double prob(int s, int a, int s2) const {
        return transitions[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    const double* row(int s, int a) const {
        return transitions.data() + (static_cast<std::size_t>(s) * n_actions + a) * n_states;
    }

    /// Checks shapes, probability rows (sum 1 within 1e-12, entries in [0,1]),
    /// finite rewards and gamma in (0,1). Throws std::invalid_argument naming
    /// the offending field or (s,a) row.
    void validate() const;
};

struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;  // n_states * n_actions

    QTable() = default;
    QTable(int states, int actions, double fill = 0.0)
        : n_states(states), n_actions(actions),
          values(static_cast<std::size_t>(states) * actions, fill) {}

    double& operator()(int s, int a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
    double operator()(int s, int a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }

    bool same_shape(const TabularMdp& mdp) const {
        return n_states == mdp.n_states && n_actions == mdp.n_actions;
    }

    /// Row max with lowest-index tie-breaking (the max itself is tie-free).
    double row_max(int s) const {
        const double* p = values.data() + static_cast<std::size_t>(s) * n_actions;
        return *std::max_element(p, p + n_actions);
    }
};

struct VTable {
    std::vector<double> values;

    VTable() = default;
    explicit VTable(int states, double fill = 0.0) : values(static_cast<std::size_t>(states), fill) {}

    double operator()(int s) const { return values[static_cast<std::size_t>(s)]; }
    double& operator()(int s) { return values[static_cast<std::size_t>(s)]; }
    int size() const { return static_cast<int>(values.size()); }
};

struct DeterministicPolicy {
    std::vector<int> action;  // state -> action index
};

inline void TabularMdp::validate() const {
    if (n_states <= 0) throw std::invalid_argument("mdp: n_states must be positive");
    if (n_actions <= 0) throw std::invalid_argument("mdp: n_actions must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("mdp: gamma must lie in (0,1)");
    const std::size_t nsa = static_cast<std::size_t>(n_states) * n_actions;
    if (rewards.size() != nsa) throw std::invalid_argument("mdp: rewards size mismatch");
    if (transitions.size() != nsa * static_cast<std::size_t>(n_states))
        throw std::invalid_argument("mdp: transitions size mismatch");
    for (std::size_t i = 0; i < nsa; ++i) {
        if (!std::isfinite(rewards[i]))
            throw std::invalid_argument("mdp: non-finite reward at flat index " + std::to_string(i));
    }
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            const double* p = row(s, a);
            double sum = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) {
                if (!(p[s2] >= 0.0 && p[s2] <= 1.0))
                    throw std::invalid_argument("mdp: transition entry out of [0,1] at (s=" +
                                                std::to_string(s) + ",a=" + std::to_string(a) +
                                                ",s'=" + std::to_string(s2) + ")");
                sum += p[s2];
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("mdp: transition row does not sum to 1 at (s=" +
                                            std::to_string(s) + ",a=" + std::to_string(a) + ")");
        }
    }
}

inline double linf_diff(const QTable& a, const QTable& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

inline VTable v_from_q(const QTable& q) {
    VTable v(q.n_states);
    for (int s = 0; s < q.n_states; ++s) v(s) = q.row_max(s);
    return v;
}

/// One application of the optimistic Bellman operator:
/// T(Q)(s,a) = R(s,a) + gamma * sum_{s'} P(s'|s,a) * max_{a'} Q(s',a').
inline QTable bellman_backup(const TabularMdp& mdp, const QTable& q) {
    if (!q.same_shape(mdp)) throw std::invalid_argument("bellman_backup: dimension mismatch");
    VTable v = v_from_q(q);
    QTable out(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double* p = mdp.row(s, a);
            double exp_v = 0.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) exp_v += p[s2] * v(s2);
            out(s, a) = mdp.reward(s, a) + mdp.gamma * exp_v;
        }
    }
    return out;
}

struct ValueIterationResult {
    QTable q;
    long iters = 0;
    double residual = 0.0;  // ||Q - T(Q)||_inf at exit
};

/// Thrown when the iteration cap is hit; carries the best iterate.
class ValueIterationError : public std::runtime_error {
  public:
    ValueIterationError(std::string msg, QTable best_iterate, double res)
        : std::runtime_error(std::move(msg)), best(std::move(best_iterate)), residual(res) {}
    QTable best;
    double residual;
};

/// Fixed-point iteration of the contraction T. Convergence is certified on
/// the backup residual ||Q - T(Q)||_inf <= tol, which bounds
/// ||Q - Q*||_inf <= tol / (1 - gamma).
inline ValueIterationResult value_iteration(const TabularMdp& mdp, const QTable& q0, double tol,
                                            long max_iters = 1000000) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    if (!q0.same_shape(mdp)) throw std::invalid_argument("value_iteration: dimension mismatch");
    QTable q = q0;
    double res = 0.0;
    for (long it = 0; it <= max_iters; ++it) {
        QTable tq = bellman_backup(mdp, q);
        res = linf_diff(q, tq);
        if (res <= tol) return {std::move(q), it, res};
        q = std::move(tq);
    }
    throw ValueIterationError("value_iteration: max_iters exceeded, residual " + std::to_string(res),
                              std::move(q), res);
}

/// Argmax policy of Q; ties broken by lowest action index.
inline DeterministicPolicy greedy_policy(const QTable& q) {
    DeterministicPolicy pi;
    pi.action.resize(static_cast<std::size_t>(q.n_states));
    for (int s = 0; s < q.n_states; ++s) {
        int best = 0;
        for (int a = 1; a < q.n_actions; ++a)
            if (q(s, a) > q(s, best)) best = a;
        pi.action[static_cast<std::size_t>(s)] = best;
    }
    return pi;
}

/// Iterative policy evaluation to residual tol on the policy Bellman equation.
inline VTable policy_evaluation(const TabularMdp& mdp, const DeterministicPolicy& policy, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("policy_evaluation: tol must be positive");
    if (policy.action.size() != static_cast<std::size_t>(mdp.n_states))
        throw std::invalid_argument("policy_evaluation: dimension mismatch");
    for (int a : policy.action)
        if (a < 0 || a >= mdp.n_actions) throw std::invalid_argument("policy_evaluation: action index out of range");
    VTable v(mdp.n_states);
    while (true) {
        VTable nv(mdp.n_states);
        double res = 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            int a = policy.action[static_cast<std::size_t>(s)];
            const double* p = mdp.row(s, a);
            double exp_v = 0.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) exp_v += p[s2] * v(s2);
            nv(s) = mdp.reward(s, a) + mdp.gamma * exp_v;
            res = std::max(res, std::abs(nv(s) - v(s)));
        }
        v = std::move(nv);
        if (res <= tol) return v;
    }
}

}  // namespace fedq
