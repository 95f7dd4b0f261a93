#include "tabdistill/distill/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tabdistill/numerics/errors.hpp"

namespace tabdistill::distill {

namespace {

constexpr double kPi = std::numbers::pi;

struct PairTerms {
    double u = 0.0;      // x·x'
    double s = 0.0;      // sqrt(|x|²|x'|² − u²)
    double angle = 0.0;  // θ
};

double sq_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double dot_span(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

PairTerms pair_terms(double aa, double bb, double u) {
    const double ab = std::sqrt(aa * bb);
    PairTerms t;
    t.u = u;
    t.s = std::sqrt(std::max(aa * bb - u * u, 0.0));
    t.angle = std::acos(std::clamp(u / ab, -1.0, 1.0));
    return t;
}

double entry_from(double aa, double bb, double u, std::size_t d0) {
    if (aa == 0.0 || bb == 0.0) return 0.0;
    const PairTerms t = pair_terms(aa, bb, u);
    return (2.0 * t.u * (kPi - t.angle) + t.s) / (2.0 * kPi * static_cast<double>(d0));
}

// Accumulates up·∂Θ(x, y)/∂y into `out`:
//   ∂Θ/∂y = [2(π − θ)x + (s/|y|²)y + (u/s)(x − (u/|y|²)y)] / (2π·d0).
// The last term is dropped at θ ∈ {0, π}, where it vanishes in the limit
// direction-wise; gradients at a zero input are taken as 0.
void accumulate_partial(std::span<const double> x, std::span<const double> y, double xx, double yy, double u,
                        double up, std::span<double> out) {
    if (xx == 0.0 || yy == 0.0) return;
    const PairTerms t = pair_terms(xx, yy, u);
    const double scale = up / (2.0 * kPi * static_cast<double>(x.size()));
    const double cx = 2.0 * (kPi - t.angle);
    const double cy = t.s / yy;
    const bool degenerate = t.s <= 1e-12 * std::sqrt(xx * yy);
    const double cperp = degenerate ? 0.0 : t.u / t.s;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double perp = x[k] - (u / yy) * y[k];
        out[k] += scale * (cx * x[k] + cy * y[k] + cperp * perp);
    }
}

void check_widths(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("ntk: feature widths differ, " + a.shape_string() + " vs " + b.shape_string());
    if (a.cols() == 0) throw DimensionError("ntk: zero feature width");
}

std::vector<double> row_sq_norms(const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = sq_norm(m.row(i));
    return out;
}

}  // namespace

double ntk_entry(std::span<const double> x, std::span<const double> x2) {
    if (x.size() != x2.size() || x.empty()) throw DimensionError("ntk_entry: feature widths differ");
    return entry_from(sq_norm(x), sq_norm(x2), dot_span(x, x2), x.size());
}

Matrix ntk(const Matrix& a, const Matrix& b) {
    check_widths(a, b);
    const auto na = row_sq_norms(a), nb = row_sq_norms(b);
    Matrix k(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            k(i, j) = entry_from(na[i], nb[j], dot_span(a.row(i), b.row(j)), a.cols());
    return k;
}

ad::Var ntk(ad::Var a, ad::Var b) {
    if (a.graph == nullptr || a.graph != b.graph) throw ContractError("ntk: operands belong to different graphs");
    ad::Graph& g = *a.graph;
    Matrix value = ntk(a.value(), b.value());
    const std::size_t ia = a.id, ib = b.id;
    return g.record(std::move(value), {ia, ib},
                    [ia, ib](ad::Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        const Matrix& x = gr.value(ia);
                        const Matrix& y = gr.value(ib);
                        const auto nx = row_sq_norms(x), ny = row_sq_norms(y);
                        Matrix gx(x.rows(), x.cols()), gy(y.rows(), y.cols());
                        for (std::size_t i = 0; i < x.rows(); ++i) {
                            for (std::size_t j = 0; j < y.rows(); ++j) {
                                const double w = up(i, j);
                                if (w == 0.0) continue;
                                const double u = dot_span(x.row(i), y.row(j));
                                accumulate_partial(y.row(j), x.row(i), ny[j], nx[i], u, w, gx.row(i));
                                accumulate_partial(x.row(i), y.row(j), nx[i], ny[j], u, w, gy.row(j));
                            }
                        }
                        gr.accumulate(ia, gx);
                        gr.accumulate(ib, gy);
                    },
                    "ntk");
}

}  // namespace tabdistill::distill
