#include "simulmt/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace simulmt {

double ActionDist::log_prob(Action a) const {
    if (forced) return 0.0;
    return std::log(std::max(prob(a), kLogFloor));
}

double ActionDist::entropy() const {
    if (forced) return 0.0;
    double h = 0.0;
    for (double p : {p_read, p_write})
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

Action choose(const ActionDist& dist, ChooseMode mode, Rng* rng) {
    if (dist.p_read < 0.0 || dist.p_write < 0.0 || std::fabs(dist.p_read + dist.p_write - 1.0) > 1e-9)
        throw std::runtime_error("choose: invalid action distribution");
    if (mode == ChooseMode::kGreedy) return dist.p_read > dist.p_write ? Action::kRead : Action::kWrite;
    if (!rng) throw std::runtime_error("choose: sampling requires an rng");
    return rng->uniform() < dist.p_read ? Action::kRead : Action::kWrite;
}

Array observe(const NmtModel& env, const Candidate& cand) {
    return concat(concat(cand.context, cand.z_cand), env.target_embedding(cand.y_cand));
}

void AgentModel::register_params(const AgentConfig& cfg, ParamStore& store, Rng& rng) {
    GruWeights::create(store, "agent.gru", cfg.obs_dim, cfg.hidden_dim, rng);
    store.add("agent.out_w", {2, cfg.hidden_dim});
    store.add("agent.out_b", {2});
}

AgentModel::AgentModel(const AgentConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    register_params(cfg, store, rng);
    *this = AgentModel(cfg, store);
}

AgentModel::AgentModel(const AgentConfig& cfg, ParamStore& store) : cfg_(cfg) {
    gru_ = GruWeights::bind(store, "agent.gru", cfg.obs_dim, cfg.hidden_dim);
    out_w_ = &store.param("agent.out_w");
    out_b_ = &store.param("agent.out_b");
    require_shape(out_w_->value, {2, cfg.hidden_dim}, "agent.out_w");
}

AgentModel::StepResult AgentModel::policy_step(const PolicyState& state, const Array& obs,
                                               std::optional<Action> mask) const {
    StepResult res;
    res.state.s = gru_step(gru_, obs, state.s);
    if (mask) {
        res.dist.forced = true;
        res.dist.p_read = *mask == Action::kRead ? 1.0 : 0.0;
        res.dist.p_write = 1.0 - res.dist.p_read;
        return res;
    }
    const Array p = softmax(affine(out_w_->value, out_b_->value, res.state.s));
    res.dist.p_read = p[0];
    res.dist.p_write = p[1];
    return res;
}

AgentModel::ReplayStats AgentModel::replay_backward(const std::vector<Array>& observations,
                                                    const std::vector<Action>& actions,
                                                    const std::vector<char>& include,
                                                    const std::vector<double>& coeff, double entropy_coeff,
                                                    double weight) const {
    const std::size_t n = observations.size();
    if (actions.size() != n || include.size() != n || coeff.size() != n)
        throw std::invalid_argument("replay_backward: misaligned step vectors");

    // forward with tape
    std::vector<GruCache> caches(n);
    std::vector<Array> states(n);
    std::vector<Array> probs(n);
    Array s({cfg_.hidden_dim});
    for (std::size_t t = 0; t < n; ++t) {
        s = gru_step(gru_, observations[t], s, &caches[t]);
        states[t] = s;
        if (include[t]) probs[t] = softmax(affine(out_w_->value, out_b_->value, s));
    }

    ReplayStats stats;
    Array ds_carry({cfg_.hidden_dim});
    for (std::size_t t = n; t-- > 0;) {
        Array ds = ds_carry;
        if (include[t]) {
            const Array& p = probs[t];
            const auto a_idx = static_cast<std::size_t>(actions[t]);
            stats.policy_loss += -std::log(std::max(p[a_idx], kLogFloor)) * coeff[t];
            for (std::size_t j = 0; j < 2; ++j)
                if (p[j] > 0.0) stats.entropy_sum -= p[j] * std::log(p[j]);
            ++stats.included_steps;

            Array dp({2});
            // d/dp of -log p[a] * coeff
            if (p[a_idx] > kLogFloor) dp[a_idx] += coeff[t] * (-1.0 / p[a_idx]);
            // d/dp of -entropy_coeff * H, H = -sum p log p
            if (entropy_coeff != 0.0)
                for (std::size_t j = 0; j < 2; ++j) dp[j] += entropy_coeff * (std::log(std::max(p[j], kLogFloor)) + 1.0);
            Array dlogits({2});
            softmax_backward(p, dp, &dlogits);
            for (std::size_t j = 0; j < dlogits.size(); ++j) dlogits[j] *= weight;
            affine_backward(out_w_->value, states[t], dlogits, &out_w_->grad, &out_b_->grad, &ds);
        }
        Array ds_prev({cfg_.hidden_dim});
        gru_step_backward(gru_, caches[t], ds, nullptr, &ds_prev);
        ds_carry = std::move(ds_prev);
    }
    return stats;
}

void BaselineModel::register_params(const BaselineConfig& cfg, ParamStore& store, Rng& rng) {
    store.add("baseline.w1", {cfg.hidden_dim, cfg.obs_dim}, Init::kUniform, &rng);
    store.add("baseline.b1", {cfg.hidden_dim});
    store.add("baseline.w2", {1, cfg.hidden_dim});
    store.add("baseline.b2", {1});
}

BaselineModel::BaselineModel(const BaselineConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    register_params(cfg, store, rng);
    *this = BaselineModel(cfg, store);
}

BaselineModel::BaselineModel(const BaselineConfig& cfg, ParamStore& store) : cfg_(cfg) {
    w1_ = &store.param("baseline.w1");
    b1_ = &store.param("baseline.b1");
    w2_ = &store.param("baseline.w2");
    b2_ = &store.param("baseline.b2");
    require_shape(w1_->value, {cfg.hidden_dim, cfg.obs_dim}, "baseline.w1");
}

double BaselineModel::value(const Array& obs) const {
    const Array a1 = tanh_vec(affine(w1_->value, b1_->value, obs));
    return affine(w2_->value, b2_->value, a1)[0];
}

double BaselineModel::squared_loss_backward(const Array& obs, double target, double weight) const {
    const Array a1 = tanh_vec(affine(w1_->value, b1_->value, obs));
    const double v = affine(w2_->value, b2_->value, a1)[0];
    const double err = v - target;

    const Array dv = Array::vec({weight * 2.0 * err});
    Array da1({cfg_.hidden_dim});
    affine_backward(w2_->value, a1, dv, &w2_->grad, &b2_->grad, &da1);
    Array du1({cfg_.hidden_dim});
    tanh_vec_backward(a1, da1, &du1);
    affine_backward(w1_->value, obs, du1, &w1_->grad, &b1_->grad, nullptr);
    return err * err;
}

}  // namespace simulmt
