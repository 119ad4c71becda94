#pragma once

#include <string>
#include <vector>

#include "simulmt/decoding.hpp"

namespace simulmt {

/// Quality/delay trade-off knobs. alpha scales the consecutive-wait hinge,
/// beta the final average-proportion hinge; both must be <= 0.
struct RewardConfig {
    double alpha = -0.025;
    double beta = -1.0;
    double d_star = 0.5;  // target AP in (0, 1]
    double c_star = 2.0;  // target CW >= 1
    int max_ngram = 4;
    bool bp_at_end_only = true;  // brevity penalty applied only at the final step

    void validate() const;
};

/// Sentence-level smoothed BLEU without the brevity penalty: geometric mean
/// of modified n-gram precisions with add-one smoothing on numerator and
/// denominator for n >= 2; orders longer than the candidate are skipped.
/// Trailing </s> tokens are stripped from both sides before scoring.
double bleu0(const std::vector<int>& candidate, const std::vector<int>& reference, int max_ngram = 4);

/// bleu0 times BP, BP = 1 if |Y| >= |Y*| else exp(1 - |Y*|/|Y|).
double bleu(const std::vector<int>& candidate, const std::vector<int>& reference, int max_ngram = 4);

/// Per-step quality rewards: 0 at READ steps, the increment in bleu0 at
/// WRITE steps, and the full BLEU (with BP) at the final step.
std::vector<double> quality_rewards(const Trajectory& traj, const std::vector<int>& reference, int max_ngram = 4);

/// c_t per action step: c_t = c_{t-1} + 1 on READ, 0 on WRITE (c_0 = 0).
std::vector<int> consecutive_wait(const std::vector<Action>& actions);

struct DelayTrace {
    std::vector<int> c_seq;
    std::vector<int> s_per_emit;
    double d_final = 0.0;  // average proportion, in (0, 1]
};

DelayTrace delay_trace(const Trajectory& traj);

/// d = (1 / (|X| |Y|)) sum_tau s(tau); errors if nothing was emitted.
double average_proportion(const Trajectory& traj);
double average_proportion(const std::vector<int>& s_per_emit, int source_len, int target_len);

/// r_t^D = alpha [sgn(c_t - c*) + 1] + beta max(0, d_t - d*), where d_t is 0
/// before the final step and the trajectory AP at it.
std::vector<double> delay_rewards(const DelayTrace& delay, const RewardConfig& cfg);

struct StepRewards {
    std::vector<double> quality;
    std::vector<double> delay;
    std::vector<double> reward;    // quality + delay
    std::vector<double> returns;   // suffix sums of reward
};

StepRewards combined_rewards(const Trajectory& traj, const std::vector<int>& reference, const RewardConfig& cfg);

/// Summary statistics used in metric exports: mean consecutive-wait run
/// length (reads / number of maximal READ runs) and max c_t.
double cw_mean(const std::vector<Action>& actions);
int cw_max(const std::vector<Action>& actions);

struct SentenceMetrics {
    int sentence_id = 0;
    double bleu = 0.0;
    double bleu0 = 0.0;
    double ap = 0.0;
    double cw_mean = 0.0;
    int cw_max = 0;
    int source_len = 0;   // T_s
    int target_len = 0;   // T_t (emitted)
};

SentenceMetrics score_trajectory(int sentence_id, const Trajectory& traj, const std::vector<int>& reference,
                                 int max_ngram = 4);

/// Writes `echo` as '#'-prefixed comment lines (the artifact header shared
/// by every CSV export).
void write_echo_comments(std::ostream& out, const std::string& echo);

/// CSV with columns sentence_id,bleu,bleu0,ap,cw_mean,cw_max,T_s,T_t after
/// '#'-prefixed config-echo lines.
void write_metrics_csv(std::ostream& out, const std::vector<SentenceMetrics>& rows, const std::string& config_echo);

}  // namespace simulmt
