#include "simulmt/nmt.hpp"

#include <stdexcept>

#include "simulmt/vocab.hpp"

namespace simulmt {

namespace {

void check_ids(const std::vector<int>& ids, int vocab, const char* side) {
    if (ids.empty()) throw std::runtime_error(std::string(side) + " sequence is empty");
    for (int id : ids)
        if (id < 0 || id >= vocab)
            throw std::runtime_error(std::string(side) + " token id " + std::to_string(id) +
                                     " out of vocabulary range [0," + std::to_string(vocab) + ")");
    if (ids.back() != kEos) throw std::runtime_error(std::string(side) + " sequence does not end with </s>");
}

Array uniform_weights(int n) {
    Array w({n});
    w.fill(1.0 / static_cast<double>(n));
    return w;
}

int argmax_lowest_id(const Array& dist) {
    int best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
        if (dist[i] > dist[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

}  // namespace

struct NmtModel::AttnOut {
    Array attn;
    Array context;
    std::vector<Array> tanhs;  // per-position tanh activations, kept for backward
};

void NmtModel::register_params(const NmtConfig& cfg, ParamStore& store, Rng& rng) {
    const int e = cfg.emb_dim, h = cfg.hidden_dim, a = cfg.attn_dim;
    store.add("env.src_emb", {cfg.src_vocab, e}, Init::kUniform, &rng);
    GruWeights::create(store, "env.enc", e, h, rng);
    store.add("env.init_w", {h, h}, Init::kUniform, &rng);
    store.add("env.init_b", {h});
    store.add("env.tgt_emb", {cfg.tgt_vocab, e}, Init::kUniform, &rng);
    store.add("env.att_wz", {a, h}, Init::kUniform, &rng);
    store.add("env.att_we", {a, e}, Init::kUniform, &rng);
    store.add("env.att_wh", {a, h}, Init::kUniform, &rng);
    store.add("env.att_b", {a});
    store.add("env.att_v", {a}, Init::kUniform, &rng);
    GruWeights::create(store, "env.dec", e + h, h, rng);
    store.add("env.out_w", {cfg.tgt_vocab, h}, Init::kUniform, &rng);
    store.add("env.out_b", {cfg.tgt_vocab});
}

NmtModel::NmtModel(const NmtConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    register_params(cfg, store, rng);
    *this = NmtModel(cfg, store);
}

NmtModel::NmtModel(const NmtConfig& cfg, ParamStore& store) : cfg_(cfg) {
    const int e = cfg.emb_dim, h = cfg.hidden_dim;
    src_emb_ = &store.param("env.src_emb");
    enc_ = GruWeights::bind(store, "env.enc", e, h);
    init_w_ = &store.param("env.init_w");
    init_b_ = &store.param("env.init_b");
    tgt_emb_ = &store.param("env.tgt_emb");
    att_wz_ = &store.param("env.att_wz");
    att_we_ = &store.param("env.att_we");
    att_wh_ = &store.param("env.att_wh");
    att_b_ = &store.param("env.att_b");
    att_v_ = &store.param("env.att_v");
    dec_ = GruWeights::bind(store, "env.dec", e + h, h);
    out_w_ = &store.param("env.out_w");
    out_b_ = &store.param("env.out_b");
    require_shape(src_emb_->value, {cfg.src_vocab, e}, "env.src_emb");
    require_shape(tgt_emb_->value, {cfg.tgt_vocab, e}, "env.tgt_emb");
    require_shape(out_w_->value, {cfg.tgt_vocab, h}, "env.out_w");
}

Array NmtModel::attn_projection(const Array& state) const {
    Array proj({cfg_.attn_dim});
    matvec_acc(att_wh_->value, state, &proj);
    return proj;
}

EncoderPrefix NmtModel::begin_read(int first_token) const {
    EncoderPrefix prefix;
    read_next(prefix, first_token);
    return prefix;
}

void NmtModel::read_next(EncoderPrefix& prefix, int token) const {
    if (prefix.source_exhausted) throw std::runtime_error("read past </s>: the source is exhausted");
    if (token < 0 || token >= cfg_.src_vocab)
        throw std::runtime_error("source token id " + std::to_string(token) + " out of vocabulary range");
    const Array x = embedding_row(src_emb_->value, token);
    const Array h_prev = prefix.states.empty() ? Array({cfg_.hidden_dim}) : prefix.states.back();
    Array h = gru_step(enc_, x, h_prev);
    prefix.attn_proj.push_back(attn_projection(h));
    prefix.states.push_back(std::move(h));
    prefix.tokens_read.push_back(token);
    if (token == kEos) prefix.source_exhausted = true;
}

DecoderContext NmtModel::init_decoder(const EncoderPrefix& prefix) const {
    if (prefix.states.empty()) throw std::runtime_error("init_decoder: empty prefix");
    const Array mean = weighted_sum(prefix.states, uniform_weights(prefix.eta()));
    DecoderContext ctx;
    ctx.z_prev = tanh_vec(affine(init_w_->value, init_b_->value, mean));
    ctx.y_prev = kBos;
    ctx.tau = 0;
    return ctx;
}

NmtModel::AttnOut NmtModel::attend(const Array& z_prev, const Array& e_prev, const std::vector<Array>& states,
                                   const std::vector<Array>& attn_proj) const {
    const int eta = static_cast<int>(states.size());
    Array base = affine(att_wz_->value, att_b_->value, z_prev);
    matvec_acc(att_we_->value, e_prev, &base);

    AttnOut out;
    out.tanhs.reserve(static_cast<std::size_t>(eta));
    Array scores({eta});
    for (int i = 0; i < eta; ++i) {
        Array pre = base;
        const Array& proj = attn_proj[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += proj[j];
        Array t = tanh_vec(pre);
        scores[static_cast<std::size_t>(i)] = dot(att_v_->value, t);
        out.tanhs.push_back(std::move(t));
    }
    out.attn = softmax(scores);
    out.context = weighted_sum(states, out.attn);
    return out;
}

Candidate NmtModel::decode_candidate(const DecoderContext& ctx, const EncoderPrefix& prefix) const {
    if (prefix.states.empty()) throw std::runtime_error("decode_candidate: empty prefix");
    const Array e_prev = embedding_row(tgt_emb_->value, ctx.y_prev);
    AttnOut att = attend(ctx.z_prev, e_prev, prefix.states, prefix.attn_proj);

    Candidate cand;
    const Array x = concat(e_prev, att.context);
    cand.z_cand = gru_step(dec_, x, ctx.z_prev);
    cand.dist = softmax(affine(out_w_->value, out_b_->value, cand.z_cand));
    cand.y_cand = argmax_lowest_id(cand.dist);
    cand.context = std::move(att.context);
    cand.attn = std::move(att.attn);
    return cand;
}

DecoderContext NmtModel::commit(const DecoderContext& ctx, const Candidate& cand) {
    DecoderContext next;
    next.z_prev = cand.z_cand;
    next.y_prev = cand.y_cand;
    next.tau = ctx.tau + 1;
    return next;
}

double NmtModel::sentence_nll(const std::vector<int>& source, const std::vector<int>& target) const {
    check_ids(source, cfg_.src_vocab, "source");
    check_ids(target, cfg_.tgt_vocab, "target");

    const int S = static_cast<int>(source.size());
    std::vector<Array> states;
    std::vector<Array> proj;
    states.reserve(static_cast<std::size_t>(S));
    proj.reserve(static_cast<std::size_t>(S));
    Array h({cfg_.hidden_dim});
    for (int i = 0; i < S; ++i) {
        h = gru_step(enc_, embedding_row(src_emb_->value, source[static_cast<std::size_t>(i)]), h);
        states.push_back(h);
        proj.push_back(attn_projection(h));
    }
    Array z = tanh_vec(affine(init_w_->value, init_b_->value, weighted_sum(states, uniform_weights(S))));

    double loss = 0.0;
    int y_prev = kBos;
    for (int t = 0; t < static_cast<int>(target.size()); ++t) {
        const Array e_prev = embedding_row(tgt_emb_->value, y_prev);
        AttnOut att = attend(z, e_prev, states, proj);
        const Array x = concat(e_prev, att.context);
        z = gru_step(dec_, x, z);
        const Array p = softmax(affine(out_w_->value, out_b_->value, z));
        loss += cross_entropy(p, target[static_cast<std::size_t>(t)]);
        y_prev = target[static_cast<std::size_t>(t)];
    }
    return loss;
}

double NmtModel::sentence_nll_backward(const std::vector<int>& source, const std::vector<int>& target) {
    check_ids(source, cfg_.src_vocab, "source");
    check_ids(target, cfg_.tgt_vocab, "target");

    const int S = static_cast<int>(source.size());
    const int T = static_cast<int>(target.size());
    const int h = cfg_.hidden_dim, e = cfg_.emb_dim, a = cfg_.attn_dim, V = cfg_.tgt_vocab;

    // ---- forward with tape ----
    std::vector<GruCache> enc_caches(static_cast<std::size_t>(S));
    std::vector<Array> states, proj;
    states.reserve(static_cast<std::size_t>(S));
    proj.reserve(static_cast<std::size_t>(S));
    Array hstate({h});
    for (int i = 0; i < S; ++i) {
        hstate = gru_step(enc_, embedding_row(src_emb_->value, source[static_cast<std::size_t>(i)]), hstate,
                          &enc_caches[static_cast<std::size_t>(i)]);
        states.push_back(hstate);
        proj.push_back(attn_projection(hstate));
    }
    const Array mean = weighted_sum(states, uniform_weights(S));
    const Array z0 = tanh_vec(affine(init_w_->value, init_b_->value, mean));

    std::vector<Array> z_list;  // z_list[t] feeds step t; z_list[t+1] is its output
    z_list.reserve(static_cast<std::size_t>(T) + 1);
    z_list.push_back(z0);
    std::vector<AttnOut> atts(static_cast<std::size_t>(T));
    std::vector<Array> e_prevs(static_cast<std::size_t>(T));
    std::vector<int> y_prev_ids(static_cast<std::size_t>(T));
    std::vector<GruCache> dec_caches(static_cast<std::size_t>(T));
    std::vector<Array> probs(static_cast<std::size_t>(T));

    double loss = 0.0;
    int y_prev = kBos;
    for (int t = 0; t < T; ++t) {
        const auto k = static_cast<std::size_t>(t);
        y_prev_ids[k] = y_prev;
        e_prevs[k] = embedding_row(tgt_emb_->value, y_prev);
        atts[k] = attend(z_list.back(), e_prevs[k], states, proj);
        const Array x = concat(e_prevs[k], atts[k].context);
        z_list.push_back(gru_step(dec_, x, z_list.back(), &dec_caches[k]));
        probs[k] = softmax(affine(out_w_->value, out_b_->value, z_list.back()));
        loss += cross_entropy(probs[k], target[k]);
        y_prev = target[k];
    }

    // ---- backward ----
    std::vector<Array> dstates(static_cast<std::size_t>(S), Array({h}));
    std::vector<Array> dproj(static_cast<std::size_t>(S), Array({a}));
    Array dz_carry({h});
    for (int t = T - 1; t >= 0; --t) {
        const auto k = static_cast<std::size_t>(t);
        Array dp({V});
        cross_entropy_backward(probs[k], target[k], 1.0, &dp);
        Array dlogits({V});
        softmax_backward(probs[k], dp, &dlogits);
        Array dz_total = dz_carry;
        affine_backward(out_w_->value, z_list[k + 1], dlogits, &out_w_->grad, &out_b_->grad, &dz_total);

        Array dx({e + h}), dz_prev({h});
        gru_step_backward(dec_, dec_caches[k], dz_total, &dx, &dz_prev);
        Array de_prev({e}), dc({h});
        concat_backward(dx, &de_prev, &dc);

        // attention backward
        Array dattn({S});
        weighted_sum_backward(states, atts[k].attn, dc, &dstates, &dattn);
        Array dscores({S});
        softmax_backward(atts[k].attn, dattn, &dscores);
        Array dbase({a});
        for (int i = 0; i < S; ++i) {
            const auto ki = static_cast<std::size_t>(i);
            const double ds = dscores[ki];
            const Array& th = atts[k].tanhs[ki];
            Array dt({a});
            for (int j = 0; j < a; ++j) {
                const auto kj = static_cast<std::size_t>(j);
                dt[kj] = ds * att_v_->value[kj];
                att_v_->grad[kj] += ds * th[kj];
            }
            Array dpre({a});
            tanh_vec_backward(th, dt, &dpre);
            for (int j = 0; j < a; ++j) {
                const auto kj = static_cast<std::size_t>(j);
                dbase[kj] += dpre[kj];
                dproj[ki][kj] += dpre[kj];
            }
        }
        affine_backward(att_wz_->value, z_list[k], dbase, &att_wz_->grad, &att_b_->grad, &dz_prev);
        affine_backward(att_we_->value, e_prevs[k], dbase, &att_we_->grad, nullptr, &de_prev);
        embedding_row_backward(&tgt_emb_->grad, y_prev_ids[k], de_prev);
        dz_carry = std::move(dz_prev);
    }

    // init path: z0 = tanh(init_w mean + init_b)
    Array du({h});
    tanh_vec_backward(z0, dz_carry, &du);
    Array dmean({h});
    affine_backward(init_w_->value, mean, du, &init_w_->grad, &init_b_->grad, &dmean);
    weighted_sum_backward(states, uniform_weights(S), dmean, &dstates, nullptr);

    // attention projections: proj[i] = att_wh states[i]
    for (int i = 0; i < S; ++i) {
        const auto ki = static_cast<std::size_t>(i);
        affine_backward(att_wh_->value, states[ki], dproj[ki], &att_wh_->grad, nullptr, &dstates[ki]);
    }

    // encoder BPTT
    Array dh_carry({h});
    for (int i = S - 1; i >= 0; --i) {
        const auto ki = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < dh_carry.size(); ++j) dh_carry[j] += dstates[ki][j];
        Array dx({e}), dh_prev({h});
        gru_step_backward(enc_, enc_caches[ki], dh_carry, &dx, &dh_prev);
        embedding_row_backward(&src_emb_->grad, source[ki], dx);
        dh_carry = std::move(dh_prev);
    }
    return loss;
}

}  // namespace simulmt
