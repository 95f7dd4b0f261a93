#include "tabdistill/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tabdistill {

GradCheckReport grad_check(const LossFn& loss, const GradFn& grad, const ParamMap& params,
                           const GradCheckOptions& options) {
    if (!(options.step > 0.0)) throw ContractError("grad_check: step must be positive");
    const GradientMap analytic = grad(params);
    GradCheckReport report;
    ParamMap probe = params;
    for (auto& [name, value] : probe) {
        GradCheckEntry entry;
        entry.name = name;
        const Matrix& a = analytic.at(name);
        const std::size_t n = value.size();
        const std::size_t stride =
            (options.max_entries == 0 || n <= options.max_entries) ? 1 : n / options.max_entries;
        for (std::size_t i = 0; i < n; i += stride) {
            const double saved = value.data()[i];
            value.data()[i] = saved + options.step;
            const double up = loss(probe);
            value.data()[i] = saved - options.step;
            const double down = loss(probe);
            value.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double an = a.data()[i];
            const double denom = std::max({std::abs(an), std::abs(numeric), options.floor});
            const double err = std::abs(an - numeric) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, err);
            ++entry.checked;
        }
        entry.passed = entry.max_rel_error < options.tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.passed = report.passed && entry.passed;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

double evaluate(const GraphObjective& objective, const ParamMap& params) {
    ad::Graph g;
    const auto bound = g.bind(params);
    return objective(g, bound).value()(0, 0);
}

GradientMap gradient(const GraphObjective& objective, const ParamMap& params) {
    ad::Graph g;
    const auto bound = g.bind(params);
    g.backward(objective(g, bound));
    return g.gradients(bound);
}

GradCheckReport grad_check(const GraphObjective& objective, const ParamMap& params,
                           const GradCheckOptions& options) {
    return grad_check([&](const ParamMap& p) { return evaluate(objective, p); },
                      [&](const ParamMap& p) { return gradient(objective, p); }, params, options);
}

}  // namespace tabdistill
