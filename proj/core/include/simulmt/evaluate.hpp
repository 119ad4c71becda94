#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "simulmt/corpus.hpp"
#include "simulmt/decoding.hpp"
#include "simulmt/rewards.hpp"
#include "simulmt/training.hpp"

namespace simulmt {

struct EvalMode {
    bool beam = false;
    int beam_width = 1;

    static EvalMode greedy() { return EvalMode{}; }
    static EvalMode beam_k(int k) { return EvalMode{true, k}; }
};

struct EvalAggregates {
    double mean_bleu = 0.0;
    double mean_bleu0 = 0.0;
    double mean_ap = 0.0;
    double mean_cw = 0.0;
    double max_cw = 0.0;
    int sentences = 0;
};

struct EvalResult {
    std::vector<SentenceMetrics> rows;
    EvalAggregates aggregates;
    std::vector<Trajectory> trajectories;  // kept only when requested
};

/// Decodes every pair of the corpus with the policy (greedy action mode)
/// and scores it with the rewards module; aggregates are unweighted
/// sentence means.
EvalResult evaluate_corpus(const NmtModel& env, DecisionPolicy& policy, const Corpus& corpus, const EvalMode& mode,
                           bool keep_trajectories = false);

enum class DelayTargetKind { kAverageProportion, kConsecutiveWait };

struct SweepConfig {
    DelayTargetKind target = DelayTargetKind::kAverageProportion;
    std::vector<double> grid;  // d* or c* values
    int beam_width = 5;
    int agent_hidden = 64;
    int baseline_hidden = 64;
    RewardConfig reward;  // alpha/beta base values; the off-target coefficient is zeroed
    TrainConfig train;
};

struct SweepRow {
    std::string target_kind;
    double target_value = 0.0;
    std::string mode;  // "greedy" or "beam"
    double bleu = 0.0;
    double bleu0 = 0.0;
    double ap = 0.0;
    double cw = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    int best_update = 0;
    bool diverged = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> diagnostics;
};

/// Trains one agent per grid point (alpha = 0 when targeting AP, beta = 0
/// when targeting CW), selects the eval point maximizing BLEU/AP on the
/// validation split, and evaluates that snapshot on `test` with greedy and
/// beam decoding. Divergence of one grid point is reported, not fatal.
SweepResult sweep(const NmtModel& env, ParamStore& env_store, const Corpus& train, const Corpus& valid,
                  const Corpus& test, const SweepConfig& cfg, std::ostream* progress = nullptr);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& config_echo);

/// Soft-alignment heat-map of one trajectory: CSV matrix with one row per
/// source position and one column per emitted token; cell = attention
/// weight at that emission, zero for positions unread at the time. A
/// second block lists s(tau) per emitted token.
void export_heatmap_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& source_tokens,
                        const std::vector<std::string>& target_tokens);

/// Plotting-dependency-free SVG rendering of the same heat-map.
void export_heatmap_svg(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& source_tokens,
                        const std::vector<std::string>& target_tokens);

/// Scatter of quality vs delay from sweep rows (one marker per row).
void export_curve_svg(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace simulmt
