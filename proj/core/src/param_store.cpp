#include "simulmt/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace simulmt {

Parameter& ParamStore::add(const std::string& name, std::vector<int> shape, Init init, Rng* rng) {
    if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    Parameter p;
    p.value = Array(shape);
    p.grad = Array(shape);
    p.m = Array(shape);
    p.v = Array(std::move(shape));
    if (init == Init::kUniform) {
        if (!rng) throw std::invalid_argument("uniform init requires an rng for " + name);
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = rng->uniform(-0.08, 0.08);
    }
    return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Parameter& ParamStore::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
}

void ParamStore::zero_grads() {
    for (auto& [_, p] : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::value_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

bool ParamStore::values_equal(const ParamStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    auto it = other.params_.begin();
    for (const auto& [name, p] : params_) {
        if (it->first != name || !(it->second.value == p.value)) return false;
        ++it;
    }
    return true;
}

void adam_update(ParamStore& store, const AdamConfig& cfg) {
    for (const auto& [name, p] : store.params_) {
        if (!p.grad.all_finite()) throw std::runtime_error("non-finite gradient for parameter " + name);
    }
    store.adam_step_ += 1;
    const double t = static_cast<double>(store.adam_step_);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& [_, p] : store.params_) {
        double* w = p.value.data();
        const double* g = p.grad.data();
        double* m = p.m.data();
        double* v = p.v.data();
        const std::size_t n = p.value.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace simulmt
