#include "tabdistill/distill/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::distill {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

void check_k(const Matrix& points, std::size_t k, const char* what) {
    if (k == 0 || k > points.rows())
        throw ContractError(std::string(what) + ": need 1 <= k <= " + std::to_string(points.rows()) + ", got k = " +
                            std::to_string(k));
}

std::size_t nearest_center(std::span<const double> p, const Matrix& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(p, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Matrix plus_plus_seeding(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(k, points.cols());
    std::vector<bool> chosen(n, false);
    auto take = [&](std::size_t c, std::size_t i) {
        std::copy(points.row(i).begin(), points.row(i).end(), centers.row(c).begin());
        chosen[i] = true;
    };
    take(0, static_cast<std::size_t>(rng.below(n)));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > r) pick = i;
            }
            if (pick == n)  // rounding at the upper end
                for (std::size_t i = n; i-- > 0 && pick == n;)
                    if (d2[i] > 0.0) pick = i;
        } else {
            // all remaining points coincide with a center
            for (std::size_t i = 0; i < n && pick == n; ++i)
                if (!chosen[i]) pick = i;
        }
        take(c, pick);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
    }
    return centers;
}

// Appends the per-cluster output rows of one class.
void emit_clusters(const Matrix& x, std::span<const std::size_t> class_rows, const Matrix& class_points,
                   std::span<const std::size_t> assignment, std::size_t k, OutputVariant output, int label,
                   std::vector<double>& features, std::vector<int>& labels, std::vector<std::size_t>& sources) {
    const Matrix means = cluster_means(class_points, assignment, k);
    for (std::size_t c = 0; c < k; ++c) {
        labels.push_back(label);
        if (output == OutputVariant::as_is) {
            features.insert(features.end(), means.row(c).begin(), means.row(c).end());
            continue;
        }
        std::size_t best = kUnassigned;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < assignment.size(); ++m) {
            if (assignment[m] != c) continue;
            const double d = squared_distance(class_points.row(m), means.row(c));
            if (d < best_d) {
                best_d = d;
                best = m;
            }
        }
        if (best == kUnassigned) throw ContractError("closest-real: empty cluster");
        const std::size_t row = class_rows[best];
        features.insert(features.end(), x.row(row).begin(), x.row(row).end());
        sources.push_back(row);
    }
}

DistilledSet make_set(std::size_t cols, std::vector<double> features, std::vector<int> labels,
                      std::vector<std::size_t> sources, std::size_t num_classes, std::size_t ipc, Method method,
                      OutputVariant output, std::uint64_t seed, std::vector<std::string> warnings) {
    DistilledSet s;
    const std::size_t rows = labels.size();
    s.features = Matrix(rows, cols, std::move(features));
    s.labels = std::move(labels);
    s.num_classes = num_classes;
    s.ipc = ipc;
    s.method = method;
    s.output = output;
    s.seed = seed;
    s.source_indices = std::move(sources);
    s.warnings = std::move(warnings);
    return s;
}

void check_inputs(const Matrix& x, std::span<const int> y) {
    if (x.rows() != y.size())
        throw DimensionError("distill: " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) +
                             " rows");
}

}  // namespace

double clustering_sse(const Matrix& points, std::span<const std::size_t> assignment, const Matrix& centers) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centers.row(assignment[i]));
    return s;
}

Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k) {
    Matrix means(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto dst = means.row(assignment[i]);
        auto src = points.row(i);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] > 0)
            for (double& v : means.row(c)) v /= static_cast<double>(counts[c]);
    return means;
}

KMeansResult lloyd(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iterations) {
    check_k(points, k, "lloyd");
    if (max_iterations == 0) throw ConfigError("k-means needs at least one iteration");
    const std::size_t n = points.rows();
    KMeansResult r;
    r.centers = plus_plus_seeding(points, k, rng);
    r.assignment.assign(n, kUnassigned);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_center(points.row(i), r.centers);
            if (c != r.assignment[i]) {
                r.assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;

        std::fill(counts.begin(), counts.end(), 0);
        for (auto a : r.assignment) ++counts[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = kUnassigned;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[r.assignment[i]] < 2) continue;
                const double d = squared_distance(points.row(i), r.centers.row(r.assignment[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[r.assignment[far]];
            r.assignment[far] = c;
            counts[c] = 1;
            ++r.reseeds;
        }

        r.centers = cluster_means(points, r.assignment, k);
        const double sse = clustering_sse(points, r.assignment, r.centers);
        if (!r.sse_history.empty() && sse > r.sse_history.back() * (1.0 + 1e-9) + 1e-12)
            throw NumericalError("lloyd: SSE increased at iteration " + std::to_string(it));
        r.sse_history.push_back(sse);
        r.iterations = it;
    }
    r.sse = r.sse_history.back();
    return r;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
    if (options.restarts == 0) throw ConfigError("k-means needs at least one restart");
    const Rng base(seed);
    KMeansResult best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
        Rng rng = base.derive(r);
        KMeansResult run = lloyd(points, k, rng, options.max_iterations);
        if (r == 0 || run.sse < best.sse) best = std::move(run);
    }
    return best;
}

WardResult ward(const Matrix& points, std::size_t k) {
    check_k(points, k, "ward");
    const std::size_t n = points.rows();
    // Lance-Williams on squared Euclidean distances; d(a, b) = 2·n_a·n_b/(n_a+n_b)·|c_a − c_b|².
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = squared_distance(points.row(i), points.row(j));
    std::vector<double> size(n, 1.0);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> owner(n);
    std::iota(owner.begin(), owner.end(), std::size_t{0});

    WardResult r;
    for (std::size_t clusters = n; clusters > k; --clusters) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && d[i * n + j] < best) {
                    best = d[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        const double cost = std::sqrt(std::max(best, 0.0));
        if (!r.merge_costs.empty() && cost < r.merge_costs.back() * (1.0 - 1e-9) - 1e-12)
            throw NumericalError("ward: merge cost decreased at merge " + std::to_string(r.merge_costs.size()));
        r.merge_costs.push_back(cost);

        const double ni = size[bi], nj = size[bj];
        for (std::size_t m = 0; m < n; ++m) {
            if (!active[m] || m == bi || m == bj) continue;
            const double nm = size[m];
            const double v = ((ni + nm) * d[bi * n + m] + (nj + nm) * d[bj * n + m] - nm * best) / (ni + nj + nm);
            d[bi * n + m] = d[m * n + bi] = v;
        }
        size[bi] = ni + nj;
        active[bj] = false;
        for (auto& o : owner)
            if (o == bj) o = bi;
    }

    std::vector<std::size_t> relabel(n, kUnassigned);
    std::size_t next = 0;
    r.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (relabel[owner[i]] == kUnassigned) relabel[owner[i]] = next++;
        r.assignment[i] = relabel[owner[i]];
    }
    return r;
}

DistilledSet distill_random(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                            std::uint64_t seed) {
    check_inputs(x, y);
    const auto by_class = indices_by_class(y, num_classes);
    const Rng base(seed);
    std::vector<std::string> warnings;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::size_t> sources;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const int label = static_cast<int>(c);
        const std::size_t quota = per_class_quota(ipc, by_class[c].size(), label, warnings);
        std::vector<std::size_t> rows = by_class[c];
        Rng rng = base.derive(c);
        rng.shuffle(std::span<std::size_t>(rows));
        for (std::size_t i = 0; i < quota; ++i) {
            features.insert(features.end(), x.row(rows[i]).begin(), x.row(rows[i]).end());
            labels.push_back(label);
            sources.push_back(rows[i]);
        }
    }
    return make_set(x.cols(), std::move(features), std::move(labels), std::move(sources), num_classes, ipc,
                    Method::random, OutputVariant::as_is, seed, std::move(warnings));
}

DistilledSet distill_kmeans(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                            OutputVariant output, std::uint64_t seed, const KMeansOptions& options) {
    check_inputs(x, y);
    const auto by_class = indices_by_class(y, num_classes);
    std::vector<std::string> warnings;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::size_t> sources;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const int label = static_cast<int>(c);
        const std::size_t k = per_class_quota(ipc, by_class[c].size(), label, warnings);
        const Matrix pts = select_rows(x, by_class[c]);
        const KMeansResult km = kmeans(pts, k, mix_seed(seed, c), options);
        if (km.reseeds > 0) {
            std::string msg = "class " + std::to_string(c) + ": " + std::to_string(km.reseeds) +
                              " empty cluster(s) reseeded to far points";
            log_warning(msg);
            warnings.push_back(std::move(msg));
        }
        emit_clusters(x, by_class[c], pts, km.assignment, k, output, label, features, labels, sources);
    }
    return make_set(x.cols(), std::move(features), std::move(labels), std::move(sources), num_classes, ipc,
                    Method::kmeans, output, seed, std::move(warnings));
}

DistilledSet distill_agglomerative(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                                   std::size_t ipc, OutputVariant output) {
    check_inputs(x, y);
    const auto by_class = indices_by_class(y, num_classes);
    std::vector<std::string> warnings;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::size_t> sources;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const int label = static_cast<int>(c);
        const std::size_t k = per_class_quota(ipc, by_class[c].size(), label, warnings);
        const Matrix pts = select_rows(x, by_class[c]);
        const WardResult w = ward(pts, k);
        emit_clusters(x, by_class[c], pts, w.assignment, k, output, label, features, labels, sources);
    }
    return make_set(x.cols(), std::move(features), std::move(labels), std::move(sources), num_classes, ipc,
                    Method::agglomerative, output, 0, std::move(warnings));
}

}  // namespace tabdistill::distill
