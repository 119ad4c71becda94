#include "simulmt/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "simulmt/evaluate.hpp"

namespace simulmt {

double RunningStats::normalize(double x) const { return (x - mean) / std::sqrt(stddev * stddev + eps); }

void RunningStats::update(const std::vector<double>& batch) {
    if (batch.empty()) return;
    double bmean = 0.0;
    for (double x : batch) bmean += x;
    bmean /= static_cast<double>(batch.size());
    double bvar = 0.0;
    for (double x : batch) bvar += (x - bmean) * (x - bmean);
    bvar /= static_cast<double>(batch.size());
    mean = momentum * mean + (1.0 - momentum) * bmean;
    const double var = momentum * stddev * stddev + (1.0 - momentum) * bvar;
    stddev = std::sqrt(var);
}

namespace {

void scale_grads(ParamStore& store, double s) {
    for (auto& [_, p] : store.all())
        for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] *= s;
}

double corpus_ppl(const NmtModel& env, const Corpus& corpus) {
    double nll = 0.0;
    long tokens = 0;
    for (const auto& pair : corpus.pairs) {
        nll += env.sentence_nll(pair.source, pair.target);
        tokens += static_cast<long>(pair.target.size());
    }
    return std::exp(nll / static_cast<double>(tokens));
}

}  // namespace

MleResult pretrain_mle(NmtModel& env, ParamStore& env_store, const Corpus& train, const Corpus* valid,
                       const TrainConfig& cfg, Rng& rng, std::ostream* log_out) {
    if (train.pairs.empty()) throw std::invalid_argument("pretrain_mle: empty corpus");
    const AdamConfig adam{cfg.mle_lr, 0.9, 0.999, 1e-8};

    MleResult result;
    if (log_out) *log_out << "epoch,train_ppl,valid_ppl\n";
    std::vector<std::size_t> order(train.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.mle_epochs; ++epoch) {
        rng.shuffle(order);
        double nll = 0.0;
        long tokens = 0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t end = std::min(pos + static_cast<std::size_t>(cfg.mle_batch), order.size());
            env_store.zero_grads();
            for (std::size_t i = pos; i < end; ++i) {
                const auto& pair = train.pairs[order[i]];
                nll += env.sentence_nll_backward(pair.source, pair.target);
                tokens += static_cast<long>(pair.target.size());
            }
            scale_grads(env_store, 1.0 / static_cast<double>(end - pos));
            adam_update(env_store, adam);
            pos = end;
        }
        MleEpochRow row;
        row.epoch = epoch;
        row.train_ppl = std::exp(nll / static_cast<double>(tokens));
        row.valid_ppl = valid ? corpus_ppl(env, *valid) : 0.0;
        if (log_out) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.train_ppl, row.valid_ppl);
            *log_out << buf;
        }
        result.log.push_back(row);
    }
    env_store.zero_grads();
    return result;
}

std::vector<Trajectory> sample_trajectories(const NmtModel& env, const AgentModel& agent,
                                            const std::vector<const SentencePair*>& batch, int n_samples,
                                            std::uint64_t seed, std::uint64_t update_index, int n_workers) {
    const int total = static_cast<int>(batch.size()) * n_samples;
    std::vector<Trajectory> out(static_cast<std::size_t>(total));
    auto work = [&](int lo, int hi) {
        for (int j = lo; j < hi; ++j) {
            const int si = j / n_samples;
            const int r = j % n_samples;
            Rng rng(derive_seed(seed, update_index, static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(r)));
            AgentPolicy policy(agent);
            out[static_cast<std::size_t>(j)] = simultaneous_greedy_decode(
                env, policy, batch[static_cast<std::size_t>(si)]->source, {}, ChooseMode::kSample, &rng);
        }
    };
    if (n_workers <= 1 || total <= 1) {
        work(0, total);
    } else {
        const int workers = std::min(n_workers, total);
        std::vector<std::thread> threads;
        const int chunk = (total + workers - 1) / workers;
        for (int w = 0; w < workers; ++w)
            threads.emplace_back(work, w * chunk, std::min(total, (w + 1) * chunk));
        for (auto& t : threads) t.join();
    }
    return out;
}

std::vector<std::vector<double>> normalize_returns(const std::vector<Trajectory>& trajs,
                                                   const std::vector<std::vector<double>>& raw_returns,
                                                   const BaselineModel& baseline, RunningStats& stats) {
    std::vector<std::vector<double>> centered(trajs.size());
    std::vector<double> flat;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const Trajectory& traj = trajs[i];
        centered[i].assign(raw_returns[i].size(), 0.0);
        for (std::size_t t = 0; t < raw_returns[i].size(); ++t) {
            if (traj.forced[t]) continue;
            centered[i][t] = raw_returns[i][t] - baseline.value(traj.observations[t]);
            flat.push_back(centered[i][t]);
        }
    }
    std::vector<std::vector<double>> normalized(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        normalized[i].assign(centered[i].size(), 0.0);
        for (std::size_t t = 0; t < centered[i].size(); ++t)
            if (!trajs[i].forced[t]) normalized[i][t] = stats.normalize(centered[i][t]);
    }
    stats.update(flat);
    return normalized;
}

namespace {

/// Step records seen by the policy network: everything except the forced
/// initial READ, which never passes through the recurrent policy.
struct PolicySteps {
    std::vector<Array> obs;
    std::vector<Action> actions;
    std::vector<char> include;
    std::vector<double> coeff;
};

PolicySteps policy_steps(const Trajectory& traj, const std::vector<double>& per_step) {
    PolicySteps s;
    const std::size_t n = traj.observations.size();
    for (std::size_t t = 1; t < n; ++t) {
        s.obs.push_back(traj.observations[t]);
        s.actions.push_back(traj.actions[t]);
        s.include.push_back(traj.forced[t] ? 0 : 1);
        s.coeff.push_back(per_step[t]);
    }
    return s;
}

}  // namespace

PolicyGradientStats policy_gradient_update(const AgentModel& agent, ParamStore& agent_store,
                                           const std::vector<Trajectory>& trajs,
                                           const std::vector<std::vector<double>>& normalized_returns,
                                           const TrainConfig& cfg) {
    if (trajs.size() != normalized_returns.size())
        throw std::invalid_argument("policy_gradient_update: misaligned returns");
    agent_store.zero_grads();
    const double weight = 1.0 / static_cast<double>(trajs.size());
    const double kappa = cfg.entropy_literal_sign ? -cfg.entropy_coef : cfg.entropy_coef;

    PolicyGradientStats stats;
    double entropy_sum = 0.0;
    long steps = 0;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const PolicySteps s = policy_steps(trajs[i], normalized_returns[i]);
        const auto rep = agent.replay_backward(s.obs, s.actions, s.include, s.coeff, kappa, weight);
        stats.mean_loss += rep.policy_loss * weight;
        entropy_sum += rep.entropy_sum;
        steps += rep.included_steps;
    }
    stats.mean_entropy = steps > 0 ? entropy_sum / static_cast<double>(steps) : 0.0;
    adam_update(agent_store, AdamConfig{cfg.lr_agent, 0.9, 0.999, 1e-8});
    agent_store.zero_grads();
    return stats;
}

double baseline_update(const BaselineModel& baseline, ParamStore& baseline_store,
                       const std::vector<Trajectory>& trajs, const std::vector<std::vector<double>>& raw_returns,
                       const TrainConfig& cfg) {
    baseline_store.zero_grads();
    double total_sq = 0.0;
    long steps = 0;
    for (std::size_t i = 0; i < trajs.size(); ++i)
        for (std::size_t t = 0; t < raw_returns[i].size(); ++t)
            if (!trajs[i].forced[t]) ++steps;
    if (steps == 0) return 0.0;
    const double weight = 1.0 / static_cast<double>(steps);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const Trajectory& traj = trajs[i];
        for (std::size_t t = 0; t < raw_returns[i].size(); ++t) {
            if (traj.forced[t]) continue;
            total_sq += baseline.squared_loss_backward(traj.observations[t], raw_returns[i][t], weight);
        }
    }
    adam_update(baseline_store, AdamConfig{cfg.lr_baseline, 0.9, 0.999, 1e-8});
    baseline_store.zero_grads();
    return total_sq / static_cast<double>(steps);
}

TrainAgentResult train_agent(const NmtModel& env, const AgentModel& agent, ParamStore& agent_store,
                             const BaselineModel& baseline, ParamStore& baseline_store, const Corpus& train,
                             const Corpus& valid, const RewardConfig& reward_cfg, const TrainConfig& cfg,
                             std::ostream* curve_out) {
    if (train.pairs.empty()) throw std::invalid_argument("train_agent: empty corpus");
    reward_cfg.validate();

    TrainAgentResult result;
    if (curve_out) *curve_out << "update,mean_reward,bleu,ap,cw,entropy,baseline_loss\n";

    Rng shuffle_rng(derive_seed(cfg.seed, 0xBA7C4));
    std::vector<std::size_t> order(train.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    RunningStats stats;
    int entropy_collapse_streak = 0;

    for (int update = 1; update <= cfg.max_updates; ++update) {
        std::vector<const SentencePair*> batch;
        for (int b = 0; b < cfg.batch_sentences; ++b) {
            if (cursor == order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(&train.pairs[order[cursor++]]);
        }

        const std::vector<Trajectory> trajs = sample_trajectories(
            env, agent, batch, cfg.samples_per_sentence, cfg.seed, static_cast<std::uint64_t>(update), cfg.n_workers);

        std::vector<std::vector<double>> raw(trajs.size());
        double reward_sum = 0.0;
        for (std::size_t j = 0; j < trajs.size(); ++j) {
            const auto& ref = batch[j / static_cast<std::size_t>(cfg.samples_per_sentence)]->target;
            raw[j] = combined_rewards(trajs[j], ref, reward_cfg).returns;
            reward_sum += raw[j].empty() ? 0.0 : raw[j].front();
        }

        const auto normalized = normalize_returns(trajs, raw, baseline, stats);
        const auto pg = policy_gradient_update(agent, agent_store, trajs, normalized, cfg);
        const double bl_loss = baseline_update(baseline, baseline_store, trajs, raw, cfg);

        if (update % cfg.eval_every == 0 || update == cfg.max_updates) {
            AgentPolicy policy(agent);
            const EvalResult ev = evaluate_corpus(env, policy, valid, EvalMode::greedy());
            CurveRow row;
            row.update = update;
            row.mean_reward = reward_sum / static_cast<double>(trajs.size());
            row.bleu = ev.aggregates.mean_bleu;
            row.ap = ev.aggregates.mean_ap;
            row.cw = ev.aggregates.mean_cw;
            row.entropy = pg.mean_entropy;
            row.baseline_loss = bl_loss;
            result.curve.push_back(row);
            if (curve_out) {
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.update,
                              row.mean_reward, row.bleu, row.ap, row.cw, row.entropy, row.baseline_loss);
                *curve_out << buf;
            }

            if (std::isnan(row.bleu)) {
                result.diverged = true;
                result.diagnostic = "evaluation BLEU is NaN at update " + std::to_string(update);
                return result;
            }
            entropy_collapse_streak = row.entropy < 1e-4 ? entropy_collapse_streak + 1 : 0;
            if (entropy_collapse_streak >= 3) {
                result.diverged = true;
                result.diagnostic = "policy entropy below 1e-4 for 3 consecutive evals at update " +
                                    std::to_string(update);
                return result;
            }

            const double ratio = row.ap > 0.0 ? row.bleu / row.ap : 0.0;
            if (result.best_params.empty() || ratio > result.best_ratio) {
                result.best_ratio = ratio;
                result.best_update = update;
                result.best_params.clear();
                for (const auto& [name, p] : agent_store.all()) result.best_params[name] = p.value;
                for (const auto& [name, p] : baseline_store.all()) result.best_params[name] = p.value;
            }
        }
    }
    return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows, const std::string& config_echo) {
    write_echo_comments(out, config_echo);
    out << "update,mean_reward,bleu,ap,cw,entropy,baseline_loss\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.update, r.mean_reward, r.bleu,
                      r.ap, r.cw, r.entropy, r.baseline_loss);
        out << buf;
    }
}

}  // namespace simulmt
