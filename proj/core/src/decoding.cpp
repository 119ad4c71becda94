#include "simulmt/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "simulmt/vocab.hpp"

namespace simulmt {

int Trajectory::reads() const {
    int n = 0;
    for (Action a : actions) n += a == Action::kRead ? 1 : 0;
    return n;
}

Decision AgentPolicy::decide(const DecisionView& view, std::optional<Action> mask, ChooseMode mode, Rng* rng) {
    auto res = agent_->policy_step(state_, view.observation, mask);
    state_ = std::move(res.state);
    Decision d;
    d.action = mask ? *mask : choose(res.dist, mode, rng);
    d.log_prob = res.dist.log_prob(d.action);
    d.entropy = res.dist.entropy();
    d.forced = res.dist.forced;
    return d;
}

namespace {

Decision point_mass(Action a, bool forced) {
    Decision d;
    d.action = a;
    d.forced = forced;
    return d;
}

class WaitUntilEndPolicy final : public DecisionPolicy {
public:
    Decision decide(const DecisionView& view, std::optional<Action> mask, ChooseMode, Rng*) override {
        if (mask) return point_mass(*mask, true);
        (void)view;
        return point_mass(Action::kRead, false);
    }
};

class WaitOneStepPolicy final : public DecisionPolicy {
public:
    Decision decide(const DecisionView& view, std::optional<Action> mask, ChooseMode, Rng*) override {
        if (mask) return point_mass(*mask, true);
        return point_mass(view.eta > view.tau ? Action::kWrite : Action::kRead, false);
    }
};

// Pre-reads the next source word and accepts that READ when the best
// candidate gets strictly worse (WIW) or changes identity (WID); ties WRITE.
class PreReadPolicy final : public DecisionPolicy {
public:
    explicit PreReadPolicy(bool if_worse) : if_worse_(if_worse) {}

    Decision decide(const DecisionView& view, std::optional<Action> mask, ChooseMode, Rng*) override {
        if (mask) return point_mass(*mask, true);
        if (!view.peek_after_read) return point_mass(Action::kWrite, false);
        const Candidate& now = view.candidate;
        const Candidate& after = (*view.peek_after_read)();
        bool accept_read;
        if (if_worse_) {
            accept_read = after.dist[static_cast<std::size_t>(after.y_cand)] <
                          now.dist[static_cast<std::size_t>(now.y_cand)];
        } else {
            accept_read = after.y_cand != now.y_cand;
        }
        return point_mass(accept_read ? Action::kRead : Action::kWrite, false);
    }

private:
    bool if_worse_;
};

}  // namespace

HeuristicKind parse_heuristic(const std::string& name) {
    if (name == "wue") return HeuristicKind::kWaitUntilEnd;
    if (name == "wos") return HeuristicKind::kWaitOneStep;
    if (name == "wiw") return HeuristicKind::kWaitIfWorse;
    if (name == "wid") return HeuristicKind::kWaitIfDiff;
    throw std::invalid_argument("unknown heuristic policy: " + name);
}

std::unique_ptr<DecisionPolicy> make_heuristic_policy(HeuristicKind kind) {
    switch (kind) {
        case HeuristicKind::kWaitUntilEnd: return std::make_unique<WaitUntilEndPolicy>();
        case HeuristicKind::kWaitOneStep: return std::make_unique<WaitOneStepPolicy>();
        case HeuristicKind::kWaitIfWorse: return std::make_unique<PreReadPolicy>(true);
        case HeuristicKind::kWaitIfDiff: return std::make_unique<PreReadPolicy>(false);
    }
    throw std::invalid_argument("unknown heuristic kind");
}

namespace {

void check_source(const std::vector<int>& source) {
    if (source.empty()) throw std::invalid_argument("decode: empty source");
    if (source.back() != kEos) throw std::invalid_argument("decode: source does not end with </s>");
}

void record_step(Trajectory& traj, Action action, Array obs, double log_prob, double entropy, bool forced) {
    (void)entropy;
    traj.actions.push_back(action);
    traj.observations.push_back(std::move(obs));
    traj.log_probs.push_back(log_prob);
    traj.forced.push_back(forced ? 1 : 0);
}

/// Lazily extends `prefix` by the next unread token for WIW/WID pre-reads;
/// the extension is kept exactly when the READ is accepted.
struct SpeculativeRead {
    const NmtModel& env;
    const EncoderPrefix& prefix;
    const DecoderContext& ctx;
    int next_token;
    std::optional<EncoderPrefix> extended;
    std::optional<Candidate> candidate;

    const Candidate& get() {
        if (!candidate) {
            extended = prefix;
            env.read_next(*extended, next_token);
            candidate = env.decode_candidate(ctx, *extended);
        }
        return *candidate;
    }
};

}  // namespace

Trajectory simultaneous_greedy_decode(const NmtModel& env, DecisionPolicy& policy, const std::vector<int>& source,
                                      const DecodeLimits& limits, ChooseMode mode, Rng* rng) {
    check_source(source);
    const int tau_max = limits.resolve(static_cast<int>(source.size()));

    Trajectory traj;
    traj.source_length = static_cast<int>(source.size());

    EncoderPrefix prefix = env.begin_read(source[0]);
    record_step(traj, Action::kRead, Array({env.observation_dim()}), 0.0, 0.0, true);
    std::size_t next_src = 1;

    DecoderContext ctx = env.init_decoder(prefix);
    policy.begin_sentence();

    while (ctx.tau < tau_max) {
        const Candidate cand = env.decode_candidate(ctx, prefix);
        Array obs = observe(env, cand);

        SpeculativeRead spec{env, prefix, ctx, prefix.source_exhausted ? -1 : source[next_src], {}, {}};
        std::function<const Candidate&()> peek = [&spec]() -> const Candidate& { return spec.get(); };

        DecisionView view{cand, obs, prefix.eta(), ctx.tau, prefix.source_exhausted,
                          prefix.source_exhausted ? nullptr : &peek};
        const std::optional<Action> mask =
            prefix.source_exhausted ? std::optional<Action>(Action::kWrite) : std::nullopt;
        const Decision d = policy.decide(view, mask, mode, rng);
        record_step(traj, d.action, std::move(obs), d.log_prob, d.entropy, d.forced);

        if (d.action == Action::kRead) {
            if (spec.extended)
                prefix = std::move(*spec.extended);
            else
                env.read_next(prefix, source[next_src]);
            ++next_src;
            if (traj.writes() == 0) ctx = env.init_decoder(prefix);
        } else {
            ctx = NmtModel::commit(ctx, cand);
            traj.emitted.push_back(cand.y_cand);
            traj.reads_before_emit.push_back(prefix.eta());
            traj.attn_records.push_back(cand.attn);
            if (cand.y_cand == kEos) return traj;
        }
    }
    traj.truncated = true;
    return traj;
}

namespace {

struct BeamHyp {
    DecoderContext ctx;
    std::vector<int> suffix;
    std::vector<Array> suffix_attns;
    double score = 0.0;  // run-local cumulative log-probability
    bool finished = false;
};

struct RunStep {
    Array obs;
    double log_prob;
    bool forced;
};

std::size_t best_index(const std::vector<BeamHyp>& beam) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < beam.size(); ++i)
        if (beam[i].score > beam[best].score) best = i;
    return best;
}

/// Token indices of the top-n entries of dist, ordered by (prob desc, id asc).
std::vector<int> top_tokens(const Array& dist, int n) {
    std::vector<int> ids(dist.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    const int keep = std::min<int>(n, static_cast<int>(ids.size()));
    std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(), [&](int a, int b) {
        const double pa = dist[static_cast<std::size_t>(a)], pb = dist[static_cast<std::size_t>(b)];
        if (pa != pb) return pa > pb;
        return a < b;
    });
    ids.resize(static_cast<std::size_t>(keep));
    return ids;
}

}  // namespace

Trajectory simultaneous_beam_decode(const NmtModel& env, DecisionPolicy& policy, const std::vector<int>& source,
                                    int beam_width, const DecodeLimits& limits, ChooseMode mode, Rng* rng) {
    if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
    check_source(source);
    const int tau_max = limits.resolve(static_cast<int>(source.size()));

    Trajectory traj;
    traj.source_length = static_cast<int>(source.size());

    EncoderPrefix prefix = env.begin_read(source[0]);
    record_step(traj, Action::kRead, Array({env.observation_dim()}), 0.0, 0.0, true);
    std::size_t next_src = 1;

    policy.begin_sentence();
    std::vector<BeamHyp> beam{BeamHyp{env.init_decoder(prefix), {}, {}, 0.0, false}};
    std::vector<RunStep> run_steps;
    int committed_tau = 0;

    // Flush the best path's tokens: one recorded WRITE per flushed token
    // (extra expansions past a finished best path are dropped from the
    // record so that count(WRITE) == |emitted| always holds).
    auto flush = [&](const BeamHyp& hyp) {
        for (std::size_t i = 0; i < hyp.suffix.size(); ++i) {
            record_step(traj, Action::kWrite, std::move(run_steps[i].obs), run_steps[i].log_prob, 0.0,
                        run_steps[i].forced);
            traj.emitted.push_back(hyp.suffix[i]);
            traj.reads_before_emit.push_back(prefix.eta());
            traj.attn_records.push_back(hyp.suffix_attns[i]);
        }
        committed_tau += static_cast<int>(hyp.suffix.size());
        run_steps.clear();
    };

    while (true) {
        const std::size_t bi = best_index(beam);
        if (beam[bi].finished) {
            flush(beam[bi]);
            return traj;  // best path ends with </s>
        }
        if (committed_tau + static_cast<int>(beam[bi].suffix.size()) >= tau_max) {
            flush(beam[bi]);
            traj.truncated = traj.emitted.empty() || traj.emitted.back() != kEos;
            return traj;
        }
        const BeamHyp& best = beam[bi];

        const Candidate best_cand = env.decode_candidate(best.ctx, prefix);
        Array obs = observe(env, best_cand);
        SpeculativeRead spec{env, prefix, best.ctx, prefix.source_exhausted ? -1 : source[next_src], {}, {}};
        std::function<const Candidate&()> peek = [&spec]() -> const Candidate& { return spec.get(); };
        DecisionView view{best_cand, obs, prefix.eta(), committed_tau + static_cast<int>(best.suffix.size()),
                          prefix.source_exhausted, prefix.source_exhausted ? nullptr : &peek};
        const std::optional<Action> mask =
            prefix.source_exhausted ? std::optional<Action>(Action::kWrite) : std::nullopt;
        const Decision d = policy.decide(view, mask, mode, rng);

        if (d.action == Action::kRead) {
            flush(best);
            record_step(traj, Action::kRead, std::move(obs), d.log_prob, d.entropy, d.forced);
            DecoderContext carry = best.ctx;
            if (spec.extended)
                prefix = std::move(*spec.extended);
            else
                env.read_next(prefix, source[next_src]);
            ++next_src;
            if (traj.writes() == 0) carry = env.init_decoder(prefix);
            beam.assign(1, BeamHyp{std::move(carry), {}, {}, 0.0, false});
            continue;
        }

        // WRITE: expand every active hypothesis by its top-k continuations.
        run_steps.push_back(RunStep{std::move(obs), d.log_prob, d.forced});
        struct Ext {
            double score;
            std::size_t parent;
            int token;
        };
        std::vector<Ext> exts;
        std::vector<Candidate> cands(beam.size());
        for (std::size_t h = 0; h < beam.size(); ++h) {
            if (beam[h].finished) continue;
            cands[h] = (h == bi) ? best_cand : env.decode_candidate(beam[h].ctx, prefix);
            for (int tok : top_tokens(cands[h].dist, beam_width)) {
                const double lp = std::log(std::max(cands[h].dist[static_cast<std::size_t>(tok)], kLogFloor));
                exts.push_back(Ext{beam[h].score + lp, h, tok});
            }
        }
        std::sort(exts.begin(), exts.end(), [](const Ext& a, const Ext& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.parent != b.parent) return a.parent < b.parent;
            return a.token < b.token;
        });

        std::vector<BeamHyp> next;
        for (const BeamHyp& hyp : beam)
            if (hyp.finished) next.push_back(hyp);
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(beam_width), exts.size());
        for (std::size_t e = 0; e < take; ++e) {
            const Ext& ext = exts[e];
            const BeamHyp& parent = beam[ext.parent];
            BeamHyp child;
            child.ctx = DecoderContext{cands[ext.parent].z_cand, ext.token, parent.ctx.tau + 1};
            child.suffix = parent.suffix;
            child.suffix.push_back(ext.token);
            child.suffix_attns = parent.suffix_attns;
            child.suffix_attns.push_back(cands[ext.parent].attn);
            child.score = ext.score;
            child.finished = ext.token == kEos;
            next.push_back(std::move(child));
        }
        // keep the k best entries; finished hypotheses compete by score
        std::stable_sort(next.begin(), next.end(), [](const BeamHyp& a, const BeamHyp& b) { return a.score > b.score; });
        if (static_cast<int>(next.size()) > beam_width) next.resize(static_cast<std::size_t>(beam_width));
        beam = std::move(next);
    }
}

std::vector<int> full_beam_decode(const NmtModel& env, const std::vector<int>& source, int beam_width, int len_cap) {
    if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
    if (len_cap < 1) throw std::invalid_argument("length cap must be >= 1");
    check_source(source);

    EncoderPrefix prefix = env.begin_read(source[0]);
    for (std::size_t i = 1; i < source.size(); ++i) env.read_next(prefix, source[i]);

    struct Hyp {
        DecoderContext ctx;
        std::vector<int> tokens;
        double score = 0.0;
    };
    std::vector<Hyp> active{Hyp{env.init_decoder(prefix), {}, 0.0}};
    std::vector<Hyp> finished;

    while (!active.empty()) {
        struct Ext {
            double score;
            std::size_t parent;
            int token;
        };
        std::vector<Ext> exts;
        std::vector<Candidate> cands(active.size());
        for (std::size_t h = 0; h < active.size(); ++h) {
            cands[h] = env.decode_candidate(active[h].ctx, prefix);
            for (int tok : top_tokens(cands[h].dist, beam_width)) {
                const double lp = std::log(std::max(cands[h].dist[static_cast<std::size_t>(tok)], kLogFloor));
                exts.push_back(Ext{active[h].score + lp, h, tok});
            }
        }
        std::sort(exts.begin(), exts.end(), [](const Ext& a, const Ext& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.parent != b.parent) return a.parent < b.parent;
            return a.token < b.token;
        });
        if (static_cast<int>(exts.size()) > beam_width) exts.resize(static_cast<std::size_t>(beam_width));

        std::vector<Hyp> next;
        for (const Ext& ext : exts) {
            Hyp child;
            child.ctx = DecoderContext{cands[ext.parent].z_cand, ext.token, active[ext.parent].ctx.tau + 1};
            child.tokens = active[ext.parent].tokens;
            child.tokens.push_back(ext.token);
            child.score = ext.score;
            if (ext.token == kEos || static_cast<int>(child.tokens.size()) >= len_cap)
                finished.push_back(std::move(child));
            else
                next.push_back(std::move(child));
        }
        active = std::move(next);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i)
        if (finished[i].score > finished[best].score) best = i;

    // greedy floor: the returned hypothesis never scores below the greedy path
    std::vector<int> greedy_tokens;
    double greedy_score = 0.0;
    {
        DecoderContext ctx = env.init_decoder(prefix);
        while (static_cast<int>(greedy_tokens.size()) < len_cap) {
            const Candidate cand = env.decode_candidate(ctx, prefix);
            greedy_score += std::log(std::max(cand.dist[static_cast<std::size_t>(cand.y_cand)], kLogFloor));
            greedy_tokens.push_back(cand.y_cand);
            if (cand.y_cand == kEos) break;
            ctx = NmtModel::commit(ctx, cand);
        }
    }
    if (finished.empty() || greedy_score > finished[best].score) return greedy_tokens;
    return finished[best].tokens;
}

double sequence_log_prob(const NmtModel& env, const std::vector<int>& source, const std::vector<int>& target) {
    check_source(source);
    EncoderPrefix prefix = env.begin_read(source[0]);
    for (std::size_t i = 1; i < source.size(); ++i) env.read_next(prefix, source[i]);
    DecoderContext ctx = env.init_decoder(prefix);
    double lp = 0.0;
    for (int tok : target) {
        const Candidate cand = env.decode_candidate(ctx, prefix);
        lp += std::log(std::max(cand.dist[static_cast<std::size_t>(tok)], kLogFloor));
        ctx = DecoderContext{cand.z_cand, tok, ctx.tau + 1};
    }
    return lp;
}

void write_trace_jsonl(std::ostream& out, const Trajectory& traj, int sentence_id) {
    int eta = 0, tau = 0, write_idx = 0;
    for (int t = 0; t < traj.steps(); ++t) {
        const auto k = static_cast<std::size_t>(t);
        const bool is_write = traj.actions[k] == Action::kWrite;
        if (is_write)
            ++tau;
        else
            ++eta;
        nlohmann::json rec;
        rec["record"] = "step";
        rec["sentence_id"] = sentence_id;
        rec["t"] = t + 1;
        rec["action"] = is_write ? "write" : "read";
        rec["eta"] = eta;
        rec["tau"] = tau;
        rec["log_prob"] = traj.log_probs[k];
        rec["forced"] = static_cast<bool>(traj.forced[k]);
        if (is_write) rec["emitted_token"] = traj.emitted[static_cast<std::size_t>(write_idx++)];
        out << rec.dump() << "\n";
    }
}

}  // namespace simulmt
