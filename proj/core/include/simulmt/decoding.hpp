#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "simulmt/agent.hpp"
#include "simulmt/nmt.hpp"

namespace simulmt {

/// Interleaved READ/WRITE record of one decode. `actions` is the full
/// action string including the mandatory first READ (recorded as a forced
/// step with a zero observation and log-probability 0). After every step t,
/// tokens-read + tokens-emitted == t.
struct Trajectory {
    std::vector<Action> actions;
    std::vector<Array> observations;       // aligned with actions
    std::vector<int> emitted;              // y_1 .. y_Tt
    std::vector<int> reads_before_emit;    // s(tau), source tokens read at each emission
    std::vector<Array> attn_records;       // attention vector captured at each WRITE
    std::vector<double> log_probs;         // log pi(a_t); 0 at forced steps
    std::vector<char> forced;              // mask flags (incl. the initial READ)
    bool truncated = false;
    int source_length = 0;

    int steps() const { return static_cast<int>(actions.size()); }
    int reads() const;
    int writes() const { return static_cast<int>(emitted.size()); }
};

/// What a policy sees each step. `peek_after_read` lazily computes the
/// candidate the environment would propose after reading one more source
/// word (null once the source is exhausted); heuristics that accept such a
/// pre-read keep the extended encoder state.
struct DecisionView {
    const Candidate& candidate;
    const Array& observation;
    int eta = 0;
    int tau = 0;
    bool source_exhausted = false;
    const std::function<const Candidate&()>* peek_after_read = nullptr;
};

struct Decision {
    Action action = Action::kRead;
    double log_prob = 0.0;
    double entropy = 0.0;
    bool forced = false;
};

/// READ/WRITE decision maker; the trained agent and the heuristic
/// baselines are interchangeable behind this interface.
class DecisionPolicy {
public:
    virtual ~DecisionPolicy() = default;
    virtual void begin_sentence() {}
    virtual Decision decide(const DecisionView& view, std::optional<Action> mask, ChooseMode mode, Rng* rng) = 0;
};

/// Wraps the trained policy network; owns the recurrent state between
/// begin_sentence() calls.
class AgentPolicy : public DecisionPolicy {
public:
    explicit AgentPolicy(const AgentModel& agent) : agent_(&agent), state_(agent.initial_state()) {}
    void begin_sentence() override { state_ = agent_->initial_state(); }
    Decision decide(const DecisionView& view, std::optional<Action> mask, ChooseMode mode, Rng* rng) override;

private:
    const AgentModel* agent_;
    PolicyState state_;
};

enum class HeuristicKind { kWaitUntilEnd, kWaitOneStep, kWaitIfWorse, kWaitIfDiff };

HeuristicKind parse_heuristic(const std::string& name);  // wue / wos / wiw / wid
std::unique_ptr<DecisionPolicy> make_heuristic_policy(HeuristicKind kind);

struct DecodeLimits {
    /// Maximum emitted tokens; -1 means the 2*|source|+10 default.
    int tau_max = -1;

    int resolve(int source_len) const { return tau_max > 0 ? tau_max : 2 * source_len + 10; }
};

/// Simultaneous greedy decoding: mandatory first READ, then per step
/// propose a candidate, observe, act. READ extends the prefix (re-deriving
/// z_0 while nothing has been emitted); WRITE commits the candidate. READ
/// is masked to WRITE once the source is exhausted, which guarantees
/// termination; running into tau_max flags the trajectory truncated.
Trajectory simultaneous_greedy_decode(const NmtModel& env, DecisionPolicy& policy, const std::vector<int>& source,
                                      const DecodeLimits& limits = {}, ChooseMode mode = ChooseMode::kGreedy,
                                      Rng* rng = nullptr);

/// Beam variant: during a consecutive WRITE run, k best partial
/// continuations are kept (scored by cumulative log-probability within the
/// run); the agent's decisions consume the observation of the current best
/// hypothesis, and the best path is flushed when the agent switches to
/// READ or the run terminates. k = 1 reproduces greedy decoding bit-exactly.
Trajectory simultaneous_beam_decode(const NmtModel& env, DecisionPolicy& policy, const std::vector<int>& source,
                                    int beam_width, const DecodeLimits& limits = {},
                                    ChooseMode mode = ChooseMode::kGreedy, Rng* rng = nullptr);

/// Standard full-sentence beam search over the complete encoding; raw
/// summed log-probability scoring (no length normalization). The greedy
/// path is kept as a floor so the returned score never drops below it.
std::vector<int> full_beam_decode(const NmtModel& env, const std::vector<int>& source, int beam_width, int len_cap);

double sequence_log_prob(const NmtModel& env, const std::vector<int>& source, const std::vector<int>& target);

/// One JSON object per step: {"record":"step","sentence_id":..,"t":..,
/// "action":"read"|"write","eta":..,"tau":..,"log_prob":..,"forced":..}
/// plus "emitted_token" on WRITE steps.
void write_trace_jsonl(std::ostream& out, const Trajectory& traj, int sentence_id);

}  // namespace simulmt
