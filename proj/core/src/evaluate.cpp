#include "simulmt/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "simulmt/vocab.hpp"

namespace simulmt {

EvalResult evaluate_corpus(const NmtModel& env, DecisionPolicy& policy, const Corpus& corpus, const EvalMode& mode,
                           bool keep_trajectories) {
    EvalResult result;
    double sum_bleu = 0.0, sum_bleu0 = 0.0, sum_ap = 0.0, sum_cw = 0.0, max_cw_all = 0.0;
    int id = 0;
    for (const auto& pair : corpus.pairs) {
        Trajectory traj = mode.beam
                              ? simultaneous_beam_decode(env, policy, pair.source, mode.beam_width)
                              : simultaneous_greedy_decode(env, policy, pair.source);
        SentenceMetrics m = score_trajectory(id, traj, pair.target);
        sum_bleu += m.bleu;
        sum_bleu0 += m.bleu0;
        sum_ap += m.ap;
        sum_cw += m.cw_mean;
        max_cw_all = std::max(max_cw_all, static_cast<double>(m.cw_max));
        result.rows.push_back(m);
        if (keep_trajectories) result.trajectories.push_back(std::move(traj));
        ++id;
    }
    const double n = static_cast<double>(std::max<std::size_t>(corpus.pairs.size(), 1));
    result.aggregates.mean_bleu = sum_bleu / n;
    result.aggregates.mean_bleu0 = sum_bleu0 / n;
    result.aggregates.mean_ap = sum_ap / n;
    result.aggregates.mean_cw = sum_cw / n;
    result.aggregates.max_cw = max_cw_all;
    result.aggregates.sentences = static_cast<int>(corpus.pairs.size());
    return result;
}

SweepResult sweep(const NmtModel& env, ParamStore& env_store, const Corpus& train, const Corpus& valid,
                  const Corpus& test, const SweepConfig& cfg, std::ostream* progress) {
    if (cfg.grid.empty()) throw std::invalid_argument("sweep: empty target grid");
    SweepResult result;
    const bool ap_target = cfg.target == DelayTargetKind::kAverageProportion;

    for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
        const double target = cfg.grid[g];
        RewardConfig reward = cfg.reward;
        // one target per delay measure: the other coefficient is zeroed
        if (ap_target) {
            reward.alpha = 0.0;
            reward.d_star = target;
        } else {
            reward.beta = 0.0;
            reward.c_star = target;
        }

        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = derive_seed(cfg.train.seed, 0x53EE9, g);

        ParamStore agent_store;
        Rng agent_rng(derive_seed(train_cfg.seed, 0xA6E27));
        const AgentConfig agent_cfg{env.observation_dim(), cfg.agent_hidden};
        AgentModel agent(agent_cfg, agent_store, agent_rng);
        ParamStore baseline_store;
        const BaselineConfig baseline_cfg{env.observation_dim(), cfg.baseline_hidden};
        BaselineModel baseline(baseline_cfg, baseline_store, agent_rng);

        if (progress)
            *progress << "sweep: target " << (ap_target ? "ap" : "cw") << "=" << target << " training...\n";
        TrainAgentResult trained = train_agent(env, agent, agent_store, baseline, baseline_store, train, valid,
                                               reward, train_cfg, nullptr);
        if (trained.diverged) {
            result.diagnostics.push_back("target " + std::to_string(target) + ": " + trained.diagnostic);
        }
        // restore the checkpoint maximizing BLEU/AP on validation
        if (!trained.best_params.empty()) {
            for (auto& [name, p] : agent_store.all()) p.value = trained.best_params.at(name);
            for (auto& [name, p] : baseline_store.all()) p.value = trained.best_params.at(name);
        }

        for (const bool use_beam : {false, true}) {
            AgentPolicy policy(agent);
            const EvalResult ev = evaluate_corpus(env, policy, test,
                                                  use_beam ? EvalMode::beam_k(cfg.beam_width) : EvalMode::greedy());
            SweepRow row;
            row.target_kind = ap_target ? "ap" : "cw";
            row.target_value = target;
            row.mode = use_beam ? "beam" : "greedy";
            row.bleu = ev.aggregates.mean_bleu;
            row.bleu0 = ev.aggregates.mean_bleu0;
            row.ap = ev.aggregates.mean_ap;
            row.cw = ev.aggregates.mean_cw;
            row.alpha = reward.alpha;
            row.beta = reward.beta;
            row.best_update = trained.best_update;
            row.diverged = trained.diverged;
            result.rows.push_back(row);
        }
    }
    (void)env_store;
    return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& config_echo) {
    write_echo_comments(out, config_echo);
    out << "target_kind,target_value,mode,bleu,bleu0,ap,cw,alpha,beta,best_update,diverged\n";
    char buf[320];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                      r.target_kind.c_str(), r.target_value, r.mode.c_str(), r.bleu, r.bleu0, r.ap, r.cw, r.alpha,
                      r.beta, r.best_update, r.diverged ? 1 : 0);
        out << buf;
    }
}

namespace {

/// Dense [source_len x emitted] attention matrix; rows past s(tau) are zero.
std::vector<std::vector<double>> heatmap_matrix(const Trajectory& traj) {
    const std::size_t rows = static_cast<std::size_t>(traj.source_length);
    const std::size_t cols = traj.attn_records.size();
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols, 0.0));
    for (std::size_t c = 0; c < cols; ++c) {
        const Array& attn = traj.attn_records[c];
        for (std::size_t r = 0; r < attn.size() && r < rows; ++r) m[r][c] = attn[r];
    }
    return m;
}

}  // namespace

void export_heatmap_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& source_tokens,
                        const std::vector<std::string>& target_tokens) {
    if (traj.attn_records.size() != static_cast<std::size_t>(traj.writes()))
        throw std::invalid_argument("heatmap: trajectory lacks attention records");
    const auto m = heatmap_matrix(traj);

    out << "source_token";
    for (std::size_t c = 0; c < traj.attn_records.size(); ++c)
        out << "," << (c < target_tokens.size() ? target_tokens[c] : "?");
    out << "\n";
    char buf[64];
    for (std::size_t r = 0; r < m.size(); ++r) {
        out << (r < source_tokens.size() ? source_tokens[r] : "?");
        for (std::size_t c = 0; c < m[r].size(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m[r][c]);
            out << buf;
        }
        out << "\n";
    }
    // waits per emitted token
    out << "\ntarget_token,s_tau\n";
    for (std::size_t c = 0; c < traj.reads_before_emit.size(); ++c)
        out << (c < target_tokens.size() ? target_tokens[c] : "?") << "," << traj.reads_before_emit[c] << "\n";
}

void export_heatmap_svg(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& source_tokens,
                        const std::vector<std::string>& target_tokens) {
    const auto m = heatmap_matrix(traj);
    const int cell = 22, margin = 90;
    const int rows = static_cast<int>(m.size());
    const int cols = rows > 0 ? static_cast<int>(m[0].size()) : 0;
    const int width = margin + cols * cell + 10;
    const int height = margin + rows * cell + 10;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<style>text{font-family:monospace;font-size:10px;}</style>\n";
    for (int c = 0; c < cols; ++c) {
        const std::string label = c < static_cast<int>(target_tokens.size()) ? target_tokens[static_cast<std::size_t>(c)] : "?";
        out << "<text x=\"" << margin + c * cell + 4 << "\" y=\"" << margin - 6 << "\" transform=\"rotate(-60 "
            << margin + c * cell + 4 << " " << margin - 6 << ")\">" << label << "</text>\n";
    }
    for (int r = 0; r < rows; ++r) {
        const std::string label = r < static_cast<int>(source_tokens.size()) ? source_tokens[static_cast<std::size_t>(r)] : "?";
        out << "<text x=\"4\" y=\"" << margin + r * cell + 14 << "\">" << label << "</text>\n";
        for (int c = 0; c < cols; ++c) {
            const double w = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            const int shade = 255 - static_cast<int>(std::lround(std::min(1.0, std::max(0.0, w)) * 255.0));
            out << "<rect x=\"" << margin + c * cell << "\" y=\"" << margin + r * cell << "\" width=\"" << cell - 1
                << "\" height=\"" << cell - 1 << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"/>\n";
        }
    }
    out << "</svg>\n";
}

void export_curve_svg(std::ostream& out, const std::vector<SweepRow>& rows) {
    const int width = 480, height = 360, margin = 50;
    double min_x = 1e30, max_x = -1e30;
    for (const auto& r : rows) {
        min_x = std::min(min_x, r.ap);
        max_x = std::max(max_x, r.ap);
    }
    if (rows.empty()) {
        min_x = 0.0;
        max_x = 1.0;
    }
    if (max_x - min_x < 1e-9) {
        min_x -= 0.05;
        max_x += 0.05;
    }
    auto sx = [&](double ap) {
        return margin + (ap - min_x) / (max_x - min_x) * (width - 2 * margin);
    };
    auto sy = [&](double bleu) { return height - margin - bleu * (height - 2 * margin); };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<style>text{font-family:monospace;font-size:10px;}</style>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << margin << "\" y2=\"" << margin
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\">AP</text>\n";
    out << "<text x=\"8\" y=\"" << margin - 8 << "\">BLEU</text>\n";
    for (const auto& r : rows) {
        const bool beam = r.mode == "beam";
        out << "<circle cx=\"" << sx(r.ap) << "\" cy=\"" << sy(r.bleu) << "\" r=\"4\" fill=\""
            << (beam ? "none" : "steelblue") << "\" stroke=\"steelblue\"/>\n";
        out << "<text x=\"" << sx(r.ap) + 6 << "\" y=\"" << sy(r.bleu) + 4 << "\">" << r.target_kind << "="
            << r.target_value << (beam ? "b" : "") << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace simulmt
