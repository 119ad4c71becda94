#pragma once

#include <vector>

#include "simulmt/array.hpp"
#include "simulmt/ops.hpp"
#include "simulmt/param_store.hpp"

namespace simulmt {

struct NmtConfig {
    int src_vocab = 0;
    int tgt_vocab = 0;
    int emb_dim = 32;
    int hidden_dim = 64;
    int attn_dim = 64;
};

/// Growing encoder state for the source prefix read so far. Appending is
/// the only mutation; reading past </s> throws.
struct EncoderPrefix {
    std::vector<Array> states;     // h_1 .. h_eta
    std::vector<Array> attn_proj;  // per-state attention projection, cached at read time
    std::vector<int> tokens_read;
    bool source_exhausted = false;

    int eta() const { return static_cast<int>(states.size()); }
};

struct DecoderContext {
    Array z_prev;
    int y_prev = 0;  // kBos before the first emission
    int tau = 0;     // tokens emitted
};

/// The environment's per-step proposal: greedy token, its decoder state,
/// attention context and the full output distribution over the prefix.
struct Candidate {
    int y_cand = 0;
    Array z_cand;
    Array context;
    Array attn;  // length eta, sums to 1
    Array dist;  // length tgt_vocab, sums to 1
};

/// Uni-directional encoder + attention decoder over read prefixes.
/// Decode-time entry points are const (parameters are read-only there);
/// sentence_nll_backward accumulates gradients for MLE pre-training.
class NmtModel {
public:
    /// Registers parameters in `store` (uniform(-0.08,0.08) weights, zero biases).
    NmtModel(const NmtConfig& cfg, ParamStore& store, Rng& rng);
    /// Binds to parameters already present (e.g. loaded from a checkpoint).
    NmtModel(const NmtConfig& cfg, ParamStore& store);

    const NmtConfig& config() const { return cfg_; }
    int observation_dim() const { return 2 * cfg_.hidden_dim + cfg_.emb_dim; }

    /// Mandatory first read of Algorithm 1's init phase.
    EncoderPrefix begin_read(int first_token) const;
    /// Appends one encoder state; sets source_exhausted on </s>.
    void read_next(EncoderPrefix& prefix, int token) const;

    /// z_0 = tanh(W mean(H^eta) + b), y_prev = <s>, tau = 0.
    DecoderContext init_decoder(const EncoderPrefix& prefix) const;

    /// Attention restricted to the read prefix; argmax ties break to the
    /// lowest token id. Does not mutate ctx.
    Candidate decode_candidate(const DecoderContext& ctx, const EncoderPrefix& prefix) const;

    static DecoderContext commit(const DecoderContext& ctx, const Candidate& cand);

    /// Teacher-forced NLL of `target` given the fully encoded `source`
    /// (both must end with </s>).
    double sentence_nll(const std::vector<int>& source, const std::vector<int>& target) const;
    /// As above, also accumulating parameter gradients.
    double sentence_nll_backward(const std::vector<int>& source, const std::vector<int>& target);

    Array target_embedding(int id) const { return embedding_row(tgt_emb_->value, id); }

    static void register_params(const NmtConfig& cfg, ParamStore& store, Rng& rng);

private:
    struct AttnOut;
    AttnOut attend(const Array& z_prev, const Array& e_prev, const std::vector<Array>& states,
                   const std::vector<Array>& attn_proj) const;
    Array attn_projection(const Array& state) const;

    NmtConfig cfg_;
    Parameter* src_emb_;
    GruWeights enc_;
    Parameter* init_w_;
    Parameter* init_b_;
    Parameter* tgt_emb_;
    Parameter* att_wz_;
    Parameter* att_we_;
    Parameter* att_wh_;
    Parameter* att_b_;
    Parameter* att_v_;
    GruWeights dec_;
    Parameter* out_w_;
    Parameter* out_b_;
};

}  // namespace simulmt
