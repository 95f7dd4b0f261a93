#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "tabdistill/data/csv.hpp"
#include "tabdistill/data/homogenizer.hpp"
#include "tabdistill/data/split.hpp"
#include "tabdistill/data/synthetic.hpp"
#include "test_support.hpp"

using namespace tabdistill;
using namespace tabdistill::data;
using tabdistill::testing::WarningCapture;

namespace {

const char* kSidecar = R"({"label": "y", "columns": {"age": {"kind": "numerical"}, "color": {"kind": "categorical"}}})";

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// One numeric column (given values) and one categorical column cycling over `cats`.
Dataset num_cat(const std::vector<Cell>& nums, std::size_t cats) {
    Dataset ds;
    ds.name = "t";
    ds.schema = {{"n", ColumnKind::numerical, {}}, {"c", ColumnKind::categorical, {}}};
    ds.label_names = {"a", "b"};
    for (std::size_t i = 0; i < nums.size(); ++i) {
        ds.rows.push_back({nums[i], Cell(std::string(1, static_cast<char>('a' + i % cats)))});
        ds.labels.push_back(static_cast<int>(i % 2));
    }
    return ds;
}

std::vector<Cell> one_to(int n) {
    std::vector<Cell> v;
    for (int i = 1; i <= n; ++i) v.emplace_back(static_cast<double>(i));
    return v;
}

}  // namespace

TEST_CASE("load_csv builds a typed dataset") {
    const auto ds = parse_dataset("t", "age,color,y\n31,red,yes\n?,blue,no\n40,,yes\n", parse_sidecar(kSidecar));
    CHECK(ds.size() == 3);
    CHECK(ds.numeric_count() == 1);
    CHECK(ds.categorical_count() == 1);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.label_names == std::vector<std::string>{"yes", "no"});
    CHECK(is_missing(ds.rows[1][0]));
    CHECK(is_missing(ds.rows[2][1]));
    CHECK(std::get<double>(ds.rows[0][0]) == 31.0);
}

TEST_CASE("load_csv: schema follows the header and quoting is honoured") {
    const auto sc = parse_sidecar(
        R"({"label": "y", "columns": [{"name": "b", "kind": "categorical", "categories": ["x, y", "z"]},
                                      {"name": "a", "kind": "numerical"}]})");
    const auto ds = parse_dataset("t", "a,y,b\r\n1.5,\"p\",\"x, y\"\r\n-2e3,q,\"z\"\r\n", sc);
    REQUIRE(ds.schema.size() == 2);
    CHECK(ds.schema[0].name == "a");
    CHECK(ds.schema[1].name == "b");
    CHECK(ds.schema[1].categories == std::vector<std::string>{"x, y", "z"});
    CHECK(std::get<std::string>(ds.rows[0][1]) == "x, y");
    CHECK(std::get<double>(ds.rows[1][0]) == -2000.0);
    const auto recs = parse_csv("a,b\n\"he said \"\"hi\"\"\",2\n");
    CHECK(recs[1][0] == "he said \"hi\"");
}

TEST_CASE("load_csv errors") {
    const auto sc = parse_sidecar(kSidecar);
    CHECK_THROWS_AS(parse_dataset("t", "age,y\n1,a\n", sc), DataError);                 // sidecar column absent
    CHECK_THROWS_AS(parse_dataset("t", "age,color,y\nabc,red,a\n", sc), DataError);     // non-numeric
    CHECK_THROWS_AS(parse_dataset("t", "age,color,y\n", sc), DataError);                // empty
    CHECK_THROWS_AS(parse_dataset("t", "", sc), DataError);
    CHECK_THROWS_AS(parse_dataset("t", "age,color,extra,y\n1,a,b,c\n", sc), DataError);  // undeclared column
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), DataError);
    CHECK_THROWS_AS(parse_sidecar("{\"columns\": {}}"), DataError);
    CHECK_THROWS_AS(parse_sidecar(R"({"label": "y", "columns": {"a": {"kind": "ordinal"}}})"), ConfigError);
}

TEST_CASE("write_csv and load_csv round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "tabdistill_test_data";
    std::filesystem::create_directories(dir);
    const Dataset ds = make_mixed(40, 2, 2, 3, 0.1, 3, 7);
    write_csv(ds, dir / "mixed.csv", dir / "mixed.json");
    const Dataset back = load_csv(dir / "mixed.csv", dir / "mixed.json");
    CHECK(back.name == "mixed");
    CHECK(back.schema == ds.schema);
    CHECK(back.rows == ds.rows);
    // labels are re-indexed by first appearance, which equals the cyclic order here
    CHECK(back.labels == ds.labels);
    std::filesystem::remove_all(dir);
}

TEST_CASE("stratified_split: 100 balanced rows") {
    std::vector<int> y(100);
    for (int i = 0; i < 100; ++i) y[static_cast<std::size_t>(i)] = i % 2;
    const auto s = stratified_split(y, {}, 3);
    CHECK(s.train.size() == 70);
    for (int k = 0; k < 2; ++k) {
        auto count = [&](const std::vector<std::size_t>& idx) {
            return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == k; });
        };
        CHECK(count(s.train) == 35);
        CHECK((count(s.validation) == 7 || count(s.validation) == 8));
        CHECK((count(s.test) == 7 || count(s.test) == 8));
    }
    const auto again = stratified_split(y, {}, 3);
    CHECK(again.train == s.train);
    CHECK(again.validation == s.validation);
    CHECK(again.test == s.test);
    CHECK(stratified_split(y, {}, 4).train != s.train);
}

TEST_CASE("stratified_split: imbalanced counts match a counting oracle") {
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) y[i] = i % 4 == 3 ? 1 : 0;  // 150 : 50
    const auto s = stratified_split(y, {}, 11);
    const auto c1 = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return y[i] == 1; });
    const auto c0 = static_cast<long>(s.train.size()) - c1;
    CHECK(std::abs(c0 - 105) <= 1);
    CHECK(std::abs(c1 - 35) <= 1);
}

TEST_CASE("stratified_split rejects tiny classes and bad ratios") {
    const std::vector<int> y{0, 0, 0, 1, 1};
    CHECK_THROWS_AS(stratified_split(y, {}, 1), ContractError);
    CHECK_THROWS_AS(stratified_split(std::vector<int>{0, 0, 0}, {0.5, 0.5, 0.5}, 1), ConfigError);
}

TEST_CASE("stratified_split is a partition with per-class ratios within one sample") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t classes = 2 + rng.below(3);
        std::vector<int> y;
        for (std::size_t k = 0; k < classes; ++k) {
            const std::size_t n = 3 + rng.below(60);
            for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(k));
        }
        rng.shuffle(std::span<int>(y));
        const auto s = stratified_split(y, {}, rng.next_u64());
        std::vector<int> seen(y.size(), 0);
        for (const auto* part : {&s.train, &s.validation, &s.test})
            for (auto i : *part) ++seen[i];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        for (std::size_t k = 0; k < classes; ++k) {
            const double n = static_cast<double>(std::count(y.begin(), y.end(), static_cast<int>(k)));
            const auto in = [&](const std::vector<std::size_t>& idx) {
                return static_cast<double>(
                    std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == static_cast<int>(k); }));
            };
            if (n >= 10) {
                CHECK(std::abs(in(s.train) - 0.70 * n) <= 1.0);
                CHECK(std::abs(in(s.validation) - 0.15 * n) <= 1.0);
                CHECK(std::abs(in(s.test) - 0.15 * n) <= 1.0);
            }
            CHECK(in(s.validation) >= 1);
            CHECK(in(s.test) >= 1);
        }
    }
}

TEST_CASE("quantile edges match the interpolated order statistics") {
    std::vector<double> v;
    for (int i = 100; i >= 1; --i) v.push_back(i);
    const auto edges = bin_edges(v, 10, BinStrategy::quantile);
    REQUIRE(edges.size() == 9);
    for (std::size_t k = 1; k <= 9; ++k) CHECK(edges[k - 1] == doctest::Approx(1.0 + 99.0 * static_cast<double>(k) / 10.0));
    const auto uni = bin_edges({0.0, 10.0, 3.0}, 5, BinStrategy::uniform);
    CHECK(uni == std::vector<double>{2.0, 4.0, 6.0, 8.0});
    // heavy ties collapse into fewer bins
    CHECK(bin_edges({1, 1, 1, 1, 2, 3, 4, 5, 6, 7}, 4, BinStrategy::quantile) == std::vector<double>{2.5, 4.75});
    CHECK_THROWS_AS(bin_edges({1, 2}, 1, BinStrategy::quantile), ConfigError);
}

TEST_CASE("fit_homogenizer dimension examples") {
    const Dataset ds = num_cat(one_to(100), 3);
    const auto all = iota(100);
    const auto h = Homogenizer::fit(ds, all, {.bins = 10});
    CHECK(h.dims() == 13);
    CHECK(h.groups()[0].size == 10);
    CHECK(h.groups()[1].categories == std::vector<std::string>{"a", "b", "c"});

    auto nums = one_to(100);
    for (std::size_t i : {3, 17, 42, 60, 99}) nums[i] = std::monostate{};
    const auto hm = Homogenizer::fit(num_cat(nums, 3), all, {.bins = 10});
    CHECK(hm.dims() == 14);
    CHECK(hm.groups()[0].missing_slot);
    CHECK_FALSE(hm.groups()[1].missing_slot);

    // missingness outside the train split does not add a slot
    const std::vector<std::size_t> train_wo{0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    CHECK(Homogenizer::fit(num_cat(nums, 3), train_wo, {.bins = 10}).dims() == 13);
}

TEST_CASE("constant numeric column yields one bin and a warning") {
    WarningCapture warnings;
    const Dataset ds = num_cat(std::vector<Cell>(20, Cell(7.0)), 2);
    const auto h = Homogenizer::fit(ds, iota(20), {.bins = 10});
    CHECK(h.groups()[0].size == 1);
    CHECK(warnings.contains("constant"));
}

TEST_CASE("encode_binary examples") {
    // bins of the numeric: (-inf,2) [2,3) [3,inf)
    Dataset ds;
    ds.name = "t";
    ds.schema = {{"n", ColumnKind::numerical, {}}, {"c", ColumnKind::categorical, {}}};
    ds.label_names = {"0", "1"};
    for (double v : {1.0, 2.0, 3.0, 4.0}) {
        ds.rows.push_back({v, Cell(std::string(v < 2.5 ? "p" : "q"))});
        ds.labels.push_back(0);
    }
    const auto h = Homogenizer::fit(ds, iota(4), {.bins = 3});
    REQUIRE(h.dims() == 5);
    CHECK(h.groups()[0].edges == std::vector<double>{2.0, 3.0});

    Dataset probe = ds;
    probe.rows = {{2.5, Cell(std::string("q"))}, {-100.0, Cell(std::string("p"))}, {1e6, Cell(std::string("q"))}};
    probe.labels = {0, 0, 0};
    const Matrix b = h.encode(probe);
    CHECK(b == Matrix{{0, 1, 0, 0, 1}, {1, 0, 0, 1, 0}, {0, 0, 1, 0, 1}});
}

TEST_CASE("encode_binary: unseen categories and schema mismatch") {
    const Dataset ds = num_cat(one_to(10), 2);
    const auto h = Homogenizer::fit(ds, iota(10), {.bins = 2});
    Dataset probe = ds;
    probe.rows = {{1.0, Cell(std::string("zzz"))}};
    probe.labels = {0};
    {
        WarningCapture warnings;
        const Matrix b = h.encode(probe);
        CHECK(b(0, h.groups()[1].offset) == 1.0);
        CHECK(warnings.contains("slot 0"));
    }
    Dataset with_missing = num_cat(one_to(10), 2);
    with_missing.rows[3][1] = std::monostate{};
    const auto hm = Homogenizer::fit(with_missing, iota(10), {.bins = 2});
    const Matrix bm = hm.encode(probe);
    const auto& g = hm.groups()[1];
    CHECK(bm(0, g.offset + g.size - 1) == 1.0);

    Dataset other = ds;
    other.schema[0].name = "renamed";
    CHECK_THROWS_AS(h.encode(other), ContractError);
}

TEST_CASE("encode popcount equals the feature count on random mixed tables") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t num = rng.below(4), cat = 1 + rng.below(3);
        const Dataset ds = make_mixed(30 + rng.below(50), num, cat, 2 + rng.below(4), 0.15 * rng.uniform(), 2,
                                      rng.next_u64());
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (rng.uniform() < 0.7) train.push_back(i);
        if (train.empty()) train.push_back(0);
        const auto h = Homogenizer::fit(ds, train, {.bins = 2 + rng.below(9)});
        std::size_t total = 0;
        for (const auto& grp : h.groups()) total += grp.size;
        CHECK(total == h.dims());
        for (std::size_t i = 1; i < h.groups().size(); ++i) CHECK(h.groups()[i].offset > h.groups()[i - 1].offset);
        WarningCapture quiet;
        const Matrix b = h.encode(ds);
        bool ok = true;
        for (std::size_t r = 0; r < b.rows(); ++r) {
            double s = 0.0;
            for (double v : b.row(r)) {
                ok = ok && (v == 0.0 || v == 1.0);
                s += v;
            }
            ok = ok && s == static_cast<double>(num + cat);
        }
        CHECK(ok);
    }
}

TEST_CASE("encode is independent of row order") {
    const Dataset ds = make_mixed(50, 3, 2, 4, 0.1, 3, 5);
    const auto h = Homogenizer::fit(ds, iota(50));
    std::vector<std::size_t> perm = iota(50);
    Rng rng(1);
    rng.shuffle(std::span<std::size_t>(perm));
    const Matrix full = h.encode(ds);
    const Matrix permuted = h.encode(ds, perm);
    CHECK(permuted == select_rows(full, perm));
}

TEST_CASE("group_argmax_decode") {
    const Dataset ds = num_cat(one_to(30), 2);
    const auto h = Homogenizer::fit(ds, iota(30), {.bins = 3});
    REQUIRE(h.dims() == 5);
    const Matrix soft{{0.1, 0.7, 0.2, 0.5, 0.5}};
    const Matrix hard = h.group_argmax_decode(soft);
    CHECK(hard == Matrix{{0, 1, 0, 1, 0}});
    CHECK(h.group_argmax_decode(hard) == hard);
    CHECK_THROWS_AS(h.group_argmax_decode(Matrix{{0.1, 0.7, 0.3, 0.5, 0.5}}), ContractError);

    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix s(4, 5);
        for (std::size_t r = 0; r < 4; ++r)
            for (const auto& g : h.groups()) {
                double t = 0.0;
                for (std::size_t k = 0; k < g.size; ++k) t += (s(r, g.offset + k) = rng.uniform() + 1e-3);
                for (std::size_t k = 0; k < g.size; ++k) s(r, g.offset + k) /= t;
            }
        const Matrix d = h.group_argmax_decode(s);
        for (std::size_t r = 0; r < 4; ++r) {
            double t = 0.0;
            for (double v : d.row(r)) t += v;
            CHECK(t == 2.0);
        }
        CHECK(h.group_argmax_decode(d) == d);
    }
}

TEST_CASE("homogenizer json round-trip") {
    const Dataset ds = make_mixed(60, 2, 2, 3, 0.2, 2, 3);
    const auto h = Homogenizer::fit(ds, iota(60));
    const auto back = Homogenizer::from_json(nlohmann::json::parse(h.to_json().dump()));
    CHECK(back == h);
    CHECK(back.encode(ds) == h.encode(ds));
}

TEST_CASE("synthetic annulus is balanced") {
    const Dataset ds = make_annulus({.rows = 200}, 1);
    CHECK(ds.size() == 200);
    CHECK(ds.class_counts() == std::vector<std::size_t>{100, 100});
    CHECK(ds.schema.size() == 8);
}
