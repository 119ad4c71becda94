#pragma once

#include <map>
#include <string>
#include <vector>

#include "simulmt/array.hpp"
#include "simulmt/rng.hpp"

namespace simulmt {

/// One named tensor with its gradient and Adam moment buffers,
/// all shape-congruent.
struct Parameter {
    Array value;
    Array grad;
    Array m;
    Array v;
};

enum class Init { kZero, kUniform };

/// Named parameter collection. Not internally synchronized: single writer
/// during updates, any number of readers in between.
class ParamStore {
public:
    /// kUniform fills value with uniform(-0.08, 0.08) draws from `rng`.
    Parameter& add(const std::string& name, std::vector<int> shape, Init init = Init::kZero, Rng* rng = nullptr);

    Parameter& param(const std::string& name);
    const Parameter& param(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }

    std::vector<std::string> names() const;
    std::map<std::string, Parameter>& all() { return params_; }
    const std::map<std::string, Parameter>& all() const { return params_; }

    void zero_grads();
    std::size_t value_count() const;

    long adam_step() const { return adam_step_; }
    void set_adam_step(long s) { adam_step_ = s; }

    /// True iff every parameter value is bit-identical.
    bool values_equal(const ParamStore& other) const;

private:
    std::map<std::string, Parameter> params_;
    long adam_step_ = 0;
    friend void adam_update(ParamStore&, const struct AdamConfig&);
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam step over every parameter using the accumulated gradients.
/// Throws (naming the parameter, before touching any value) if a gradient
/// is non-finite. Gradients are left in place for the caller to zero.
void adam_update(ParamStore& store, const AdamConfig& cfg);

}  // namespace simulmt
