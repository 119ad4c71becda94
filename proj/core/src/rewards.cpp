#include "simulmt/rewards.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "simulmt/vocab.hpp"

namespace simulmt {

void RewardConfig::validate() const {
    if (alpha > 0.0 || beta > 0.0) throw std::invalid_argument("reward: alpha and beta must be <= 0");
    if (!(d_star > 0.0 && d_star <= 1.0)) throw std::invalid_argument("reward: d_star must be in (0,1]");
    if (c_star < 1.0) throw std::invalid_argument("reward: c_star must be >= 1");
    if (max_ngram < 1) throw std::invalid_argument("reward: max_ngram must be >= 1");
}

namespace {

std::vector<int> strip_eos(const std::vector<int>& seq) {
    std::vector<int> out = seq;
    while (!out.empty() && out.back() == kEos) out.pop_back();
    return out;
}

using NgramCounts = std::map<std::vector<int>, int>;

NgramCounts count_ngrams(const std::vector<int>& seq, int n) {
    NgramCounts counts;
    const int len = static_cast<int>(seq.size());
    for (int i = 0; i + n <= len; ++i)
        ++counts[std::vector<int>(seq.begin() + i, seq.begin() + i + n)];
    return counts;
}

double bleu0_stripped(const std::vector<int>& cand, const std::vector<int>& ref, int max_ngram) {
    if (cand.empty()) return 0.0;
    const int orders = std::min<int>(max_ngram, static_cast<int>(cand.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= orders; ++n) {
        const NgramCounts cand_counts = count_ngrams(cand, n);
        const NgramCounts ref_counts = count_ngrams(ref, n);
        long matched = 0;
        long total = 0;
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matched += std::min(count, it->second);
        }
        const double smooth = n >= 2 ? 1.0 : 0.0;
        const double p = (static_cast<double>(matched) + smooth) / (static_cast<double>(total) + smooth);
        if (p <= 0.0) return 0.0;  // only possible for the unsmoothed unigram order
        log_sum += std::log(p);
    }
    return std::exp(log_sum / orders);
}

}  // namespace

double bleu0(const std::vector<int>& candidate, const std::vector<int>& reference, int max_ngram) {
    const std::vector<int> ref = strip_eos(reference);
    if (ref.empty()) throw std::invalid_argument("bleu: empty reference");
    return bleu0_stripped(strip_eos(candidate), ref, max_ngram);
}

double bleu(const std::vector<int>& candidate, const std::vector<int>& reference, int max_ngram) {
    const std::vector<int> cand = strip_eos(candidate);
    const std::vector<int> ref = strip_eos(reference);
    if (ref.empty()) throw std::invalid_argument("bleu: empty reference");
    if (cand.empty()) return 0.0;
    const double bp = cand.size() >= ref.size()
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
    return bp * bleu0_stripped(cand, ref, max_ngram);
}

std::vector<double> quality_rewards(const Trajectory& traj, const std::vector<int>& reference, int max_ngram) {
    const std::vector<int> ref = strip_eos(reference);
    if (ref.empty()) throw std::invalid_argument("quality_rewards: empty reference");

    const int T = traj.steps();
    std::vector<double> r(static_cast<std::size_t>(T), 0.0);
    std::vector<int> emitted;  // cumulative output, </s> never kept (strip_eos semantics)
    double prev = 0.0;         // bleu0 of the empty output
    int write_idx = 0;
    for (int t = 0; t < T; ++t) {
        const auto k = static_cast<std::size_t>(t);
        if (traj.actions[k] == Action::kWrite) {
            const int tok = traj.emitted[static_cast<std::size_t>(write_idx++)];
            if (tok != kEos) emitted.push_back(tok);
            if (t < T - 1) {
                const double cur = bleu0_stripped(emitted, ref, max_ngram);
                r[k] = cur - prev;
                prev = cur;
            }
        }
        if (t == T - 1) {
            // final step: full BLEU with brevity penalty, not a difference
            std::vector<int> full = emitted;
            r[k] = bleu(full, ref, max_ngram);
        }
    }
    return r;
}

std::vector<int> consecutive_wait(const std::vector<Action>& actions) {
    std::vector<int> c(actions.size());
    int run = 0;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        run = actions[t] == Action::kRead ? run + 1 : 0;
        c[t] = run;
    }
    return c;
}

DelayTrace delay_trace(const Trajectory& traj) {
    DelayTrace d;
    d.c_seq = consecutive_wait(traj.actions);
    d.s_per_emit = traj.reads_before_emit;
    d.d_final = average_proportion(traj);
    return d;
}

double average_proportion(const std::vector<int>& s_per_emit, int source_len, int target_len) {
    if (s_per_emit.empty() || target_len <= 0) throw std::invalid_argument("average_proportion: no emissions");
    if (source_len <= 0) throw std::invalid_argument("average_proportion: bad source length");
    long sum = 0;
    for (int s : s_per_emit) sum += s;
    return static_cast<double>(sum) / (static_cast<double>(source_len) * static_cast<double>(target_len));
}

double average_proportion(const Trajectory& traj) {
    return average_proportion(traj.reads_before_emit, traj.source_length, traj.writes());
}

std::vector<double> delay_rewards(const DelayTrace& delay, const RewardConfig& cfg) {
    cfg.validate();
    const std::size_t T = delay.c_seq.size();
    std::vector<double> r(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double diff = static_cast<double>(delay.c_seq[t]) - cfg.c_star;
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double d_t = (t + 1 == T) ? delay.d_final : 0.0;
        r[t] = cfg.alpha * (sgn + 1.0) + cfg.beta * std::max(0.0, d_t - cfg.d_star);
    }
    return r;
}

StepRewards combined_rewards(const Trajectory& traj, const std::vector<int>& reference, const RewardConfig& cfg) {
    StepRewards out;
    out.quality = quality_rewards(traj, reference, cfg.max_ngram);
    out.delay = delay_rewards(delay_trace(traj), cfg);
    const std::size_t T = out.quality.size();
    out.reward.resize(T);
    for (std::size_t t = 0; t < T; ++t) out.reward[t] = out.quality[t] + out.delay[t];
    out.returns.resize(T);
    double suffix = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        suffix += out.reward[t];
        out.returns[t] = suffix;
    }
    return out;
}

double cw_mean(const std::vector<Action>& actions) {
    int reads = 0, runs = 0;
    bool in_run = false;
    for (Action a : actions) {
        if (a == Action::kRead) {
            ++reads;
            if (!in_run) {
                ++runs;
                in_run = true;
            }
        } else {
            in_run = false;
        }
    }
    return runs == 0 ? 0.0 : static_cast<double>(reads) / static_cast<double>(runs);
}

int cw_max(const std::vector<Action>& actions) {
    int best = 0;
    for (int c : consecutive_wait(actions)) best = std::max(best, c);
    return best;
}

SentenceMetrics score_trajectory(int sentence_id, const Trajectory& traj, const std::vector<int>& reference,
                                 int max_ngram) {
    SentenceMetrics m;
    m.sentence_id = sentence_id;
    m.bleu = bleu(traj.emitted, reference, max_ngram);
    m.bleu0 = bleu0(traj.emitted, reference, max_ngram);
    m.ap = average_proportion(traj);
    m.cw_mean = cw_mean(traj.actions);
    m.cw_max = cw_max(traj.actions);
    m.source_len = traj.source_length;
    m.target_len = traj.writes();
    return m;
}

void write_echo_comments(std::ostream& out, const std::string& echo) {
    std::size_t start = 0;
    while (start < echo.size()) {
        std::size_t end = echo.find('\n', start);
        if (end == std::string::npos) end = echo.size();
        out << "# " << echo.substr(start, end - start) << "\n";
        start = end + 1;
    }
}

void write_metrics_csv(std::ostream& out, const std::vector<SentenceMetrics>& rows, const std::string& config_echo) {
    write_echo_comments(out, config_echo);
    out << "sentence_id,bleu,bleu0,ap,cw_mean,cw_max,T_s,T_t\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n", r.sentence_id, r.bleu, r.bleu0, r.ap,
                      r.cw_mean, r.cw_max, r.source_len, r.target_len);
        out << buf;
    }
}

}  // namespace simulmt
