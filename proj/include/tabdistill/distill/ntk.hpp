#pragma once

#include <span>

#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::distill {

// Infinite-width NTK of f(x) = n^-1/2 Σ_i v_i relu(w_i·x / sqrt(d0)) with
// standard normal weights:
//
//   Θ(x, x') = [2u(π − θ) + sqrt(|x|²|x'|² − u²)] / (2π·d0),
//   u = x·x',  θ = angle(x, x').
//
// Positively homogeneous of degree 2 jointly, Θ(x, x) = |x|²/d0, and 0 when
// either input is the zero vector.
double ntk_entry(std::span<const double> x, std::span<const double> x2);

// Kernel matrix K[i][j] = Θ(a_i, b_j). Throws DimensionError on unequal widths.
Matrix ntk(const Matrix& a, const Matrix& b);

// Differentiable kernel matrix; gradients flow into both arguments (passing
// the same Var twice gives the symmetric Gram matrix and its full gradient).
ad::Var ntk(ad::Var a, ad::Var b);

}  // namespace tabdistill::distill
