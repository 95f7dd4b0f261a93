#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabdistill/eval/metrics.hpp"
#include "test_support.hpp"

using namespace tabdistill;
using namespace tabdistill::eval;
using tabdistill::testing::random_matrix;
using tabdistill::testing::WarningCapture;

namespace {

// Ranks by explicit sort: 1-based positions, averaged across runs of equal values.
std::vector<double> sort_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::vector<Observation> random_groups(Rng& rng, std::size_t groups, std::size_t competitors, bool coarse) {
    std::vector<Observation> obs;
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t c = 0; c < competitors; ++c) {
            const double v = coarse ? static_cast<double>(rng.below(4)) * 0.25 : rng.normal();
            obs.push_back({"g" + std::to_string(g), "m" + std::to_string(c), v});
        }
    rng.shuffle(std::span<Observation>(obs));
    return obs;
}

}  // namespace

TEST_CASE("relative regret examples") {
    const Baseline b{0.8, 0.6};
    CHECK(relative_regret(b, 0.8) == 0.0);
    CHECK(relative_regret(b, 0.6) == 1.0);
    CHECK(relative_regret(b, 0.75) == doctest::Approx(0.25).epsilon(1e-14));
    // unclamped on both sides
    CHECK(relative_regret(b, 0.9) < 0.0);
    CHECK(relative_regret(b, 0.4) > 1.0);
    // random beating full flips the slope; reported as-is
    CHECK(relative_regret({0.6, 0.8}, 0.7) == doctest::Approx(0.5));
    CHECK(relative_regret({0.6, 0.8}, 0.8) == 1.0);
}

TEST_CASE("relative regret is undefined when baselines coincide") {
    try {
        relative_regret({0.7, 0.7}, 0.5);
        FAIL("expected UndefinedRegretError");
    } catch (const UndefinedRegretError& e) {
        CHECK(e.full == 0.7);
        CHECK(e.random10 == 0.7);
        CHECK(std::string(e.what()).find("0.69999999999999996") != std::string::npos);
    }
}

TEST_CASE("regret context lookups") {
    RegretContext ctx;
    ctx.set("adult", "knn", {0.8, 0.6});
    CHECK(ctx.contains("adult", "knn"));
    CHECK_FALSE(ctx.contains("adult", "mlp"));
    CHECK(ctx.regret("adult", "knn", 0.6) == 1.0);
    CHECK_THROWS_AS(ctx.regret("adult", "mlp", 0.6), ContractError);
    CHECK_THROWS_AS(ctx.set("x", "knn", {1.2, 0.5}), ContractError);
}

TEST_CASE("regret is strictly decreasing and affine in accuracy") {
    Rng rng(501);
    for (int t = 0; t < 200; ++t) {
        // decreasing holds for the usual orientation A_F > A_R10
        const double u = rng.uniform(), v = rng.uniform();
        const double f = std::max(u, v), r = std::min(u, v);
        if (f == r) continue;
        const Baseline b{f, r};
        const double a1 = rng.uniform(), a2 = rng.uniform(), a3 = rng.uniform();
        const double lo = std::min(a1, a2), hi = std::max(a1, a2);
        if (lo < hi) CHECK(relative_regret(b, lo) > relative_regret(b, hi));
        // affine: the slope is the same for any pair
        const double s12 = (relative_regret(b, a2) - relative_regret(b, a1)) / (a2 - a1);
        const double s13 = (relative_regret(b, a3) - relative_regret(b, a1)) / (a3 - a1);
        CHECK(s12 == doctest::Approx(s13).epsilon(1e-6));
        CHECK(s12 == doctest::Approx(-1.0 / (f - r)).epsilon(1e-6));
    }
}

TEST_CASE("run record json round trip and bounds") {
    RunRecord r;
    r.dataset = "annulus";
    r.encoder = "ffn*";
    r.method = "kmeans";
    r.space = "latent";
    r.variant = "closest-real";
    r.representation = "encoded";
    r.ipc = 10;
    r.seed = 3;
    r.classifier = "knn";
    r.balanced_accuracy = 0.1 + 0.2;
    r.seconds = 1.5;
    const auto back = RunRecord::from_json(nlohmann::json::parse(r.to_json().dump()));
    CHECK(back == r);
    auto bad = r.to_json();
    bad["balanced_accuracy"] = 1.01;
    CHECK_THROWS_AS(RunRecord::from_json(bad), ContractError);
}

TEST_CASE("mean rank: dominant competitor and ties") {
    std::vector<Observation> obs;
    for (int g = 0; g < 3; ++g) {
        obs.push_back({"g" + std::to_string(g), "a", 0.1});
        obs.push_back({"g" + std::to_string(g), "b", 0.5});
    }
    auto t = mean_rank(obs);
    REQUIRE(t.competitors == std::vector<std::string>{"a", "b"});
    CHECK(t.mean_rank[0] == 1.0);
    CHECK(t.mean_rank[1] == 2.0);
    CHECK(t.mean_rank[0] + t.mean_rank[1] == 3.0);
    CHECK(t.median_value[0] == 0.1);

    const std::vector<Observation> tie{{"g", "a", 0.3}, {"g", "b", 0.3}};
    t = mean_rank(tie);
    CHECK(t.mean_rank[0] == 1.5);
    CHECK(t.mean_rank[1] == 1.5);
}

TEST_CASE("mean rank matches a sort oracle on hand-built groups") {
    // 3 competitors x 4 groups, with ties in groups 2 and 3
    const double v[4][3] = {{0.2, 0.5, 0.1}, {0.9, 0.3, 0.4}, {0.3, 0.3, 0.7}, {0.6, 0.6, 0.6}};
    std::vector<Observation> obs;
    std::vector<double> expect(3, 0.0);
    for (int g = 0; g < 4; ++g) {
        std::vector<double> row(v[g], v[g] + 3);
        const auto r = sort_ranks(row);
        for (int c = 0; c < 3; ++c) {
            obs.push_back({"g" + std::to_string(g), std::string(1, static_cast<char>('a' + c)), v[g][c]});
            expect[c] += r[c] / 4.0;
        }
    }
    const auto t = mean_rank(obs);
    for (int c = 0; c < 3; ++c) CHECK(t.mean_rank[c] == doctest::Approx(expect[c]).epsilon(1e-15));
    CHECK(t.median_value[0] == doctest::Approx(0.45));
}

TEST_CASE("mean rank skips incomplete groups with a warning") {
    WarningCapture w;
    const std::vector<Observation> obs{{"g1", "a", 0.1}, {"g1", "b", 0.2}, {"g2", "a", 0.1},
                                       {"g3", "a", 0.1}, {"g3", "a", 0.3}, {"g3", "b", 0.0}};
    const auto t = mean_rank(obs);
    CHECK(t.groups_used == 1);
    CHECK(t.groups_skipped == 2);
    CHECK(w.contains("g2"));
    CHECK(w.contains("g3"));
    CHECK_THROWS_AS(mean_rank(std::vector<Observation>{}), ContractError);
    CHECK_THROWS_AS(mean_rank(std::vector<Observation>{{"g2", "a", 0.1}, {"g3", "b", 0.1}}), ContractError);
}

TEST_CASE("mean rank agrees with the sort oracle on random groups") {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 2 + rng.below(5), groups = 1 + rng.below(6);
        const auto obs = random_groups(rng, groups, k, t % 2 == 0);
        std::map<std::string, std::vector<double>> rows;
        for (const auto& o : obs) {
            auto& row = rows[o.group];
            row.resize(k);
            row[static_cast<std::size_t>(std::stoi(o.competitor.substr(1)))] = o.value;
        }
        std::vector<double> expect(k, 0.0);
        for (const auto& [g, row] : rows) {
            const auto r = sort_ranks(row);
            for (std::size_t c = 0; c < k; ++c) expect[c] += r[c] / static_cast<double>(groups);
        }
        const auto table = mean_rank(obs);
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const auto idx = static_cast<std::size_t>(std::stoi(table.competitors[c].substr(1)));
            CHECK(table.mean_rank[c] == doctest::Approx(expect[idx]).epsilon(1e-12));
            total += table.mean_rank[c];
        }
        CHECK(total == doctest::Approx(static_cast<double>(k * (k + 1)) / 2.0));
    }
}

TEST_CASE("mean rank is invariant under strictly increasing transforms per group") {
    Rng rng(909);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + rng.below(5), groups = 1 + rng.below(8);
        const auto obs = random_groups(rng, groups, k, t % 3 == 0);
        auto moved = obs;
        std::map<std::string, std::pair<double, double>> transform;
        for (std::size_t g = 0; g < groups; ++g)
            transform["g" + std::to_string(g)] = {rng.uniform(0.1, 5.0), rng.uniform(-3.0, 3.0)};
        for (auto& o : moved) {
            const auto [a, b] = transform[o.group];
            o.value = a * std::exp(o.value) + b + o.value * o.value * o.value;
        }
        const auto before = mean_rank(obs), after = mean_rank(moved);
        CHECK(before.competitors == after.competitors);
        CHECK(before.mean_rank == after.mean_rank);
    }
}

TEST_CASE("pairwise win/loss examples") {
    std::vector<Observation> obs;
    for (int g = 0; g < 4; ++g) {
        obs.push_back({"g" + std::to_string(g), "i", 0.1});
        obs.push_back({"g" + std::to_string(g), "j", 0.7});
    }
    auto t = pairwise_winloss(obs);
    CHECK(t.win_ratio(0, 1) == 1.0);
    CHECK(t.win_ratio(1, 0) == 0.0);
    CHECK(t.ties(0, 1) == 0.0);

    std::vector<Observation> ties;
    for (int g = 0; g < 3; ++g)
        for (const char* c : {"a", "b", "c"}) ties.push_back({"g" + std::to_string(g), c, 0.5});
    t = pairwise_winloss(ties);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(t.win_ratio(i, j) == 0.0);
            if (i != j) CHECK(t.ties(i, j) == 3.0);
        }
    CHECK_THROWS_AS(pairwise_winloss(std::vector<Observation>{}), ContractError);
}

TEST_CASE("pairwise win/loss complementarity on random records") {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + rng.below(4), groups = 1 + rng.below(10);
        const auto obs = random_groups(rng, groups, k, t % 2 == 0);
        const auto w = pairwise_winloss(obs);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j) continue;
                const double tie_frac = w.ties(i, j) / static_cast<double>(groups);
                CHECK(w.win_ratio(i, j) + w.win_ratio(j, i) + tie_frac == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(w.win_ratio(i, j) + w.win_ratio(j, i) <= 1.0 + 1e-12);
                CHECK(w.ties(i, j) == w.ties(j, i));
            }
    }
}

TEST_CASE("feature correlation examples") {
    Matrix x(5, 3);
    const double col[5] = {1.0, 3.0, -2.0, 0.5, 4.0};
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = col[i];
        x(i, 1) = col[i];
        x(i, 2) = -col[i];
    }
    auto r = feature_correlation(x);
    CHECK(r.correlation(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.correlation(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));

    Matrix z(3, 2);
    z(0, 0) = 1;
    z(1, 0) = 2;
    z(2, 0) = 4;
    for (std::size_t i = 0; i < 3; ++i) z(i, 1) = 7.0;
    r = feature_correlation(z);
    CHECK(r.zero_variance == std::vector<bool>{false, true});
    CHECK(r.correlation(0, 1) == 0.0);
    CHECK(r.correlation(1, 1) == 1.0);
    CHECK_THROWS_AS(feature_correlation(Matrix(1, 3)), ContractError);
}

TEST_CASE("feature correlation matches the covariance formula") {
    Rng rng(4242);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + rng.below(40);
        const Matrix x = random_matrix(rng, n, 5, 3.0);
        const auto r = feature_correlation(x);
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b) {
                // sample covariance with n−1 normalization cancels in the ratio
                double ma = 0, mb = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    ma += x(i, a) / static_cast<double>(n);
                    mb += x(i, b) / static_cast<double>(n);
                }
                double cab = 0, caa = 0, cbb = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    cab += (x(i, a) - ma) * (x(i, b) - mb) / static_cast<double>(n - 1);
                    caa += (x(i, a) - ma) * (x(i, a) - ma) / static_cast<double>(n - 1);
                    cbb += (x(i, b) - mb) * (x(i, b) - mb) / static_cast<double>(n - 1);
                }
                CHECK(std::abs(r.correlation(a, b) - cab / std::sqrt(caa * cbb)) < 1e-12);
                CHECK(r.correlation(a, b) == r.correlation(b, a));
            }
    }
}

TEST_CASE("feature correlation is symmetric with unit diagonal") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(10), d = 1 + rng.below(6);
        Matrix x = random_matrix(rng, n, d);
        // make some columns constant or discrete
        for (std::size_t j = 0; j < d; ++j) {
            const auto mode = rng.below(3);
            for (std::size_t i = 0; i < n; ++i) {
                if (mode == 0) x(i, j) = 2.5;
                if (mode == 1) x(i, j) = static_cast<double>(rng.below(2));
            }
        }
        const auto r = feature_correlation(x);
        for (std::size_t a = 0; a < d; ++a) {
            CHECK(r.correlation(a, a) == 1.0);
            for (std::size_t b = 0; b < d; ++b) {
                CHECK(r.correlation(a, b) == r.correlation(b, a));
                CHECK(std::abs(r.correlation(a, b)) <= 1.0);
                CHECK(std::isfinite(r.correlation(a, b)));
            }
        }
    }
}

TEST_CASE("pooled median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(median({}), ContractError);
}
