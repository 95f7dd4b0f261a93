#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::distill {

struct KMeansOptions {
    std::size_t restarts = 5;
    std::size_t max_iterations = 300;
};

struct KMeansResult {
    Matrix centers;                      // k x cols
    std::vector<std::size_t> assignment;  // cluster of each point
    double sse = 0.0;
    std::size_t iterations = 0;
    // SSE after every mean update; non-increasing.
    std::vector<double> sse_history;
    std::size_t reseeds = 0;  // empty clusters moved to a far point
};

// One Lloyd run from k-means++ seeding. Stops when an assignment pass leaves
// every label unchanged or after `max_iterations` passes. Nearest-center ties
// go to the lower center index. An empty cluster takes the point farthest
// from its current center (among clusters with at least two members).
KMeansResult lloyd(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iterations);

// Best of `restarts` independent runs by SSE (earliest run wins ties).
// Restart r uses Rng(seed).derive(r).
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

// Within-cluster sum of squared distances to the given centers.
double clustering_sse(const Matrix& points, std::span<const std::size_t> assignment, const Matrix& centers);
// Cluster means for an assignment into k clusters (empty clusters stay zero).
Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k);

struct WardResult {
    // Cluster ids 0..k-1, numbered by smallest member index.
    std::vector<std::size_t> assignment;
    // Ward distance sqrt(2·n_a·n_b/(n_a+n_b))·|c_a − c_b| of every merge in
    // order; non-decreasing.
    std::vector<double> merge_costs;
};

// Bottom-up Ward clustering with Lance-Williams updates on squared
// distances. Pair ties go to the smallest (i, j).
WardResult ward(const Matrix& points, std::size_t k);

// Per-class uniform sample without replacement; class c uses
// Rng(seed).derive(c).
DistilledSet distill_random(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                            std::uint64_t seed);

// Per-class k-means with ipc clusters. Class c runs with seed
// mix_seed(seed, c).
DistilledSet distill_kmeans(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                            OutputVariant output, std::uint64_t seed, const KMeansOptions& options = {});

// Per-class Ward clustering; deterministic.
DistilledSet distill_agglomerative(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                                   std::size_t ipc, OutputVariant output);

}  // namespace tabdistill::distill
