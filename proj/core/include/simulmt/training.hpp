#pragma once

#include <functional>
#include <string>
#include <vector>

#include "simulmt/agent.hpp"
#include "simulmt/corpus.hpp"
#include "simulmt/decoding.hpp"
#include "simulmt/rewards.hpp"

namespace simulmt {

/// Running mean/scale of the centered returns, updated per batch by an
/// exponential moving average.
struct RunningStats {
    double mean = 0.0;
    double stddev = 1.0;
    double eps = 1e-8;
    double momentum = 0.99;

    double normalize(double x) const;
    void update(const std::vector<double>& batch);
};

struct TrainConfig {
    // policy-gradient phase
    double lr_agent = 1e-4;          // lambda_1
    double lr_baseline = 1e-3;       // lambda_2
    double entropy_coef = 0.01;      // kappa
    bool entropy_literal_sign = false;  // true applies the literal J - kappa*H update
    int batch_sentences = 10;
    int samples_per_sentence = 5;
    int max_updates = 500;
    int eval_every = 25;
    int n_workers = 1;
    std::uint64_t seed = 1;
    // MLE pre-training phase
    double mle_lr = 1e-3;
    int mle_epochs = 20;
    int mle_batch = 16;
};

struct MleEpochRow {
    int epoch = 0;
    double train_ppl = 0.0;
    double valid_ppl = 0.0;
};

struct MleResult {
    std::vector<MleEpochRow> log;
};

/// Maximum-likelihood pre-training of the environment over shuffled
/// minibatches (Adam). The environment is frozen afterwards for the
/// policy-gradient phase.
MleResult pretrain_mle(NmtModel& env, ParamStore& env_store, const Corpus& train, const Corpus* valid,
                       const TrainConfig& cfg, Rng& rng, std::ostream* log_out = nullptr);

/// n_samples rollouts per sentence with sampled actions. Rollout r of
/// sentence i uses an RNG stream derived from (seed, update, i, r), so
/// results do not depend on the worker count.
std::vector<Trajectory> sample_trajectories(const NmtModel& env, const AgentModel& agent,
                                            const std::vector<const SentencePair*>& batch, int n_samples,
                                            std::uint64_t seed, std::uint64_t update_index, int n_workers = 1);

/// R_hat = R - b(o); R_tilde = (R_hat - mean) / sqrt(std^2 + eps) using the
/// incoming stats, which are then EMA-updated from this batch's R_hat.
/// Only non-forced steps carry values (forced entries are 0).
std::vector<std::vector<double>> normalize_returns(const std::vector<Trajectory>& trajs,
                                                   const std::vector<std::vector<double>>& raw_returns,
                                                   const BaselineModel& baseline, RunningStats& stats);

struct PolicyGradientStats {
    double mean_entropy = 0.0;
    double mean_loss = 0.0;
};

/// One Adam ascent step on theta: accumulates
/// sum_t grad log pi(a_t) R_tilde_t plus the entropy bonus, averaged per
/// trajectory. Throws on non-finite gradients (the step is aborted).
PolicyGradientStats policy_gradient_update(const AgentModel& agent, ParamStore& agent_store,
                                           const std::vector<Trajectory>& trajs,
                                           const std::vector<std::vector<double>>& normalized_returns,
                                           const TrainConfig& cfg);

/// One Adam descent step on phi against the raw (pre-normalization)
/// returns; returns the mean squared error.
double baseline_update(const BaselineModel& baseline, ParamStore& baseline_store,
                       const std::vector<Trajectory>& trajs, const std::vector<std::vector<double>>& raw_returns,
                       const TrainConfig& cfg);

struct CurveRow {
    int update = 0;
    double mean_reward = 0.0;
    double bleu = 0.0;
    double ap = 0.0;
    double cw = 0.0;
    double entropy = 0.0;
    double baseline_loss = 0.0;
};

struct TrainAgentResult {
    std::vector<CurveRow> curve;
    bool diverged = false;
    std::string diagnostic;
    /// Snapshot of (theta, phi) at the eval point maximizing BLEU/AP.
    std::map<std::string, Array> best_params;
    int best_update = 0;
    double best_ratio = 0.0;
};

/// Policy-gradient training loop: sample trajectories, score rewards,
/// baseline values, variance reduction, then the theta/phi updates, with a
/// periodic greedy evaluation on `valid` appended to the learning curve.
/// Halts with a diagnostic if evaluation BLEU is NaN or the policy entropy
/// stays below 1e-4 for three consecutive evals.
TrainAgentResult train_agent(const NmtModel& env, const AgentModel& agent, ParamStore& agent_store,
                             const BaselineModel& baseline, ParamStore& baseline_store, const Corpus& train,
                             const Corpus& valid, const RewardConfig& reward_cfg, const TrainConfig& cfg,
                             std::ostream* curve_out = nullptr);

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows, const std::string& config_echo);

}  // namespace simulmt
