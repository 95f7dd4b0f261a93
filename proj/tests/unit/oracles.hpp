#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into the library code under test beyond Matrix
// and Rng.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "tabdistill/numerics/matrix.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::oracle {

struct Partition {
    std::vector<int> side;  // 0/1 per point; point 0 is always on side 0
    double sse = std::numeric_limits<double>::infinity();
};

inline double group_sse(const Matrix& pts, const std::vector<int>& side, int which) {
    std::vector<double> mean(pts.cols(), 0.0);
    double count = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        if (side[i] != which) continue;
        for (std::size_t j = 0; j < pts.cols(); ++j) mean[j] += pts(i, j);
        count += 1.0;
    }
    if (count == 0.0) return 0.0;
    for (double& m : mean) m /= count;
    double s = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        if (side[i] != which) continue;
        for (std::size_t j = 0; j < pts.cols(); ++j) s += (pts(i, j) - mean[j]) * (pts(i, j) - mean[j]);
    }
    return s;
}

// Exhaustive search over all partitions into two nonempty groups.
inline Partition best_two_partition(const Matrix& pts) {
    const std::size_t n = pts.rows();
    Partition best;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        std::vector<int> side(n, 0);
        for (std::size_t i = 1; i < n; ++i) side[i] = static_cast<int>((mask >> (i - 1)) & 1U);
        const double sse = group_sse(pts, side, 0) + group_sse(pts, side, 1);
        if (sse < best.sse) best = {side, sse};
    }
    return best;
}

// True when two labelings describe the same 2-way split.
inline bool same_split(const std::vector<int>& a, const std::vector<std::size_t>& b) {
    bool direct = true, flipped = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int bi = static_cast<int>(b[i]);
        direct = direct && a[i] == bi;
        flipped = flipped && a[i] == 1 - bi;
    }
    return direct || flipped;
}

// Smallest between-group distance over largest within-group distance.
inline double separation_ratio(const Matrix& pts, const std::vector<int>& side) {
    double inter = std::numeric_limits<double>::infinity(), intra = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i)
        for (std::size_t j = i + 1; j < pts.rows(); ++j) {
            const double d = std::sqrt(squared_distance(pts.row(i), pts.row(j)));
            if (side[i] == side[j]) intra = std::max(intra, d);
            else inter = std::min(inter, d);
        }
    return intra == 0.0 ? std::numeric_limits<double>::infinity() : inter / intra;
}

// Clustering instance i of the fixed generator: 8 points in the plane from
// two Gaussian groups whose separation ranges from overlapping to far apart.
inline Matrix clustering_instance(std::uint64_t i) {
    Rng rng(0xC1u * 1000 + i);
    const std::size_t first = 2 + static_cast<std::size_t>(rng.below(5));  // 2..6 points in group A
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const double gap = 0.5 * std::exp(rng.uniform(0.0, std::log(120.0)));  // log-uniform in [0.5, 60]
    Matrix pts(8, 2);
    for (std::size_t r = 0; r < 8; ++r) {
        const bool a = r < first;
        pts(r, 0) = (a ? 0.0 : gap * std::cos(angle)) + rng.normal();
        pts(r, 1) = (a ? 0.0 : gap * std::sin(angle)) + rng.normal();
    }
    return pts;
}

// Empirical NTK Σ_θ ∂f(x)/∂θ · ∂f(x')/∂θ of one random finite-width network
// f(x) = n^-1/2 Σ_i v_i relu(w_i·x / sqrt(d)), computed from explicit
// per-parameter derivatives.
class EmpiricalNtk {
public:
    EmpiricalNtk(std::size_t width, std::size_t dims, std::uint64_t seed) : w_(width, dims), v_(width) {
        Rng rng(seed);
        for (double& x : w_.data()) x = rng.normal();
        for (double& x : v_) x = rng.normal();
    }

    double operator()(std::span<const double> x, std::span<const double> y) const {
        const std::size_t n = w_.rows(), d = w_.cols();
        const double inv_n = 1.0 / static_cast<double>(n);
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ax = 0.0, ay = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                ax += w_(i, k) * x[k];
                ay += w_(i, k) * y[k];
            }
            ax *= inv_sqrt_d;
            ay *= inv_sqrt_d;
            // ∂f/∂v_i
            const double dvx = std::max(ax, 0.0), dvy = std::max(ay, 0.0);
            total += dvx * dvy * inv_n;
            // ∂f/∂w_ik = v_i·1[a > 0]·x_k / sqrt(n·d)
            if (ax > 0.0 && ay > 0.0)
                for (std::size_t k = 0; k < d; ++k)
                    total += v_[i] * v_[i] * x[k] * y[k] * inv_n * inv_sqrt_d * inv_sqrt_d;
        }
        return total;
    }

private:
    Matrix w_;
    std::vector<double> v_;
};

}  // namespace tabdistill::oracle
