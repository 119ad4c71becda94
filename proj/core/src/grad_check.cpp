#include "simulmt/grad_check.hpp"

#include <cmath>

#include "simulmt/rng.hpp"

namespace simulmt {

std::vector<std::string> GradCheckReport::flagged_names() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
        if (e.flagged) out.push_back(e.name);
    return out;
}

GradCheckReport grad_check(ParamStore& store, const std::function<double()>& loss,
                           const std::function<void()>& backward, const GradCheckOptions& opts) {
    backward();

    GradCheckReport report;
    Rng pick(opts.sample_seed);
    for (auto& [name, p] : store.all()) {
        GradCheckReport::Entry entry;
        entry.name = name;

        std::vector<std::size_t> indices;
        const std::size_t n = p.value.size();
        if (opts.max_elements_per_param == 0 || opts.max_elements_per_param >= n) {
            indices.resize(n);
            for (std::size_t i = 0; i < n; ++i) indices[i] = i;
        } else {
            for (std::size_t i = 0; i < opts.max_elements_per_param; ++i)
                indices.push_back(static_cast<std::size_t>(pick.uniform_int(static_cast<int>(n))));
        }

        for (std::size_t idx : indices) {
            const double saved = p.value[idx];
            p.value[idx] = saved + opts.fd_step;
            const double up = loss();
            p.value[idx] = saved - opts.fd_step;
            const double down = loss();
            p.value[idx] = saved;

            const double fd = (up - down) / (2.0 * opts.fd_step);
            const double an = p.grad[idx];
            const double denom = std::max({std::fabs(fd), std::fabs(an), opts.denom_floor});
            const double rel = std::fabs(fd - an) / denom;
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
            ++entry.checked;
        }
        entry.flagged = entry.max_rel_err > opts.tolerance;
        report.worst_rel_err = std::max(report.worst_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace simulmt
