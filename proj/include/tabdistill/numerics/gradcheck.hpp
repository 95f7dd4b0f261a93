#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/params.hpp"

namespace tabdistill {

struct GradCheckEntry {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool passed = true;
};

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Denominator floor of the relative error |a − n| / max(|a|, |n|, floor).
    double floor = 1e-6;
    // Entries checked per parameter (0 = all); chosen by a fixed stride.
    std::size_t max_entries = 0;
};

using LossFn = std::function<double(const ParamMap&)>;
using GradFn = std::function<GradientMap(const ParamMap&)>;
// Builds a scalar objective on a fresh graph from bound parameters.
using GraphObjective = std::function<ad::Var(ad::Graph&, const ad::BoundParams&)>;

// Compares analytic gradients against central finite differences.
GradCheckReport grad_check(const LossFn& loss, const GradFn& grad, const ParamMap& params,
                           const GradCheckOptions& options);

GradCheckReport grad_check(const GraphObjective& objective, const ParamMap& params,
                           const GradCheckOptions& options);

// Value and gradient of a graph objective.
double evaluate(const GraphObjective& objective, const ParamMap& params);
GradientMap gradient(const GraphObjective& objective, const ParamMap& params);

}  // namespace tabdistill
