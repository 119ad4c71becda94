#pragma once

#include <functional>
#include <string>
#include <vector>

#include "simulmt/param_store.hpp"

namespace simulmt {

struct GradCheckOptions {
    double fd_step = 1e-5;
    double tolerance = 1e-4;
    /// Relative-error denominator floor. Gradients below this magnitude are
    /// held to an absolute bound of tolerance * denom_floor, which keeps
    /// central-difference round-off noise (~|f| eps / fd_step) from
    /// dominating near-zero entries.
    double denom_floor = 1e-3;
    /// 0 = check every element; otherwise a deterministic subsample per parameter.
    std::size_t max_elements_per_param = 0;
    std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
    struct Entry {
        std::string name;
        double max_rel_err = 0.0;
        std::size_t checked = 0;
        bool flagged = false;
    };
    std::vector<Entry> entries;
    double worst_rel_err = 0.0;

    bool ok() const {
        for (const auto& e : entries)
            if (e.flagged) return false;
        return true;
    }
    std::vector<std::string> flagged_names() const;
};

/// Central finite-difference check of analytic gradients.
/// `loss` evaluates the scalar objective at the store's current values;
/// `backward` must zero the gradients, run forward+backward at the current
/// values and leave d(loss)/d(param) in each Parameter::grad.
GradCheckReport grad_check(ParamStore& store, const std::function<double()>& loss,
                           const std::function<void()>& backward, const GradCheckOptions& opts = {});

}  // namespace simulmt
