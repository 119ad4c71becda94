#pragma once

#include <optional>
#include <vector>

#include "simulmt/array.hpp"
#include "simulmt/nmt.hpp"
#include "simulmt/ops.hpp"
#include "simulmt/rng.hpp"

namespace simulmt {

enum class Action { kRead = 0, kWrite = 1 };
enum class ChooseMode { kSample, kGreedy };

/// Two-point action distribution; a masked step is a point mass.
struct ActionDist {
    double p_read = 0.5;
    double p_write = 0.5;
    bool forced = false;

    double prob(Action a) const { return a == Action::kRead ? p_read : p_write; }
    double log_prob(Action a) const;
    double entropy() const;
};

/// Greedy mode returns the argmax with WRITE preferred on exact ties;
/// sample mode draws from the distribution.
Action choose(const ActionDist& dist, ChooseMode mode, Rng* rng);

struct PolicyState {
    Array s;
};

/// o_t = [c ; z ; E(y)] built from the frozen environment's target embedding.
Array observe(const NmtModel& env, const Candidate& cand);

struct AgentConfig {
    int obs_dim = 0;
    int hidden_dim = 64;
};

/// Recurrent stochastic READ/WRITE policy: s_t = GRU(s_{t-1}, o_t),
/// pi(a|s_t) = softmax(W s_t + b). The action head is zero-initialized so
/// an untrained agent starts at (0.5, 0.5).
class AgentModel {
public:
    AgentModel(const AgentConfig& cfg, ParamStore& store, Rng& rng);
    AgentModel(const AgentConfig& cfg, ParamStore& store);

    const AgentConfig& config() const { return cfg_; }

    PolicyState initial_state() const { return PolicyState{Array({cfg_.hidden_dim})}; }

    struct StepResult {
        PolicyState state;
        ActionDist dist;
    };
    /// GRU update then 2-way softmax; a mask replaces the distribution with
    /// a point mass on the forced action (the state still updates).
    StepResult policy_step(const PolicyState& state, const Array& obs, std::optional<Action> mask = {}) const;

    struct ReplayStats {
        double policy_loss = 0.0;  // sum of -log pi(a_t) * coeff_t over included steps
        double entropy_sum = 0.0;
        int included_steps = 0;
    };
    /// Replays the policy over recorded (observation, action) steps and
    /// accumulates gradients of
    ///   weight * sum_t [ -log pi(a_t) * coeff_t - entropy_coeff * H_t ]
    /// over the steps with include[t] set (masked steps propagate state but
    /// contribute no loss).
    ReplayStats replay_backward(const std::vector<Array>& observations, const std::vector<Action>& actions,
                                const std::vector<char>& include, const std::vector<double>& coeff,
                                double entropy_coeff, double weight) const;

    static void register_params(const AgentConfig& cfg, ParamStore& store, Rng& rng);

private:
    AgentConfig cfg_;
    GruWeights gru_;
    Parameter* out_w_;
    Parameter* out_b_;
};

struct BaselineConfig {
    int obs_dim = 0;
    int hidden_dim = 64;
};

/// Value head b(o_t): two-layer tanh MLP on the observation alone, with a
/// zero-initialized scalar output layer.
class BaselineModel {
public:
    BaselineModel(const BaselineConfig& cfg, ParamStore& store, Rng& rng);
    BaselineModel(const BaselineConfig& cfg, ParamStore& store);

    double value(const Array& obs) const;

    /// Accumulates gradients of weight * (value(obs) - target)^2 and
    /// returns the (unweighted) squared error.
    double squared_loss_backward(const Array& obs, double target, double weight) const;

    static void register_params(const BaselineConfig& cfg, ParamStore& store, Rng& rng);

private:
    BaselineConfig cfg_;
    Parameter* w1_;
    Parameter* b1_;
    Parameter* w2_;
    Parameter* b2_;
};

}  // namespace simulmt
