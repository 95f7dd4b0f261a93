#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "tabdistill/data/homogenizer.hpp"
#include "tabdistill/data/split.hpp"
#include "tabdistill/data/synthetic.hpp"
#include "tabdistill/numerics/gradcheck.hpp"
#include "tabdistill/repr/autoencoder.hpp"
#include "tabdistill/repr/train.hpp"
#include "test_support.hpp"

using namespace tabdistill;
using namespace tabdistill::repr;
using data::Homogenizer;
using tabdistill::testing::random_matrix;

namespace {

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// One numeric column with 10 quantile bins and one 3-level categorical: D = 13.
struct SmallSchema {
    data::Dataset ds;
    Homogenizer h;
    Matrix binary;
};

SmallSchema small_schema(std::size_t bins = 10, std::size_t cats = 3, std::size_t rows = 100) {
    SmallSchema s;
    s.ds.name = "small";
    s.ds.schema = {{"n", data::ColumnKind::numerical, {}}, {"c", data::ColumnKind::categorical, {}}};
    s.ds.label_names = {"a", "b"};
    for (std::size_t i = 0; i < rows; ++i) {
        s.ds.rows.push_back({static_cast<double>(i + 1), data::Cell(std::string(1, static_cast<char>('a' + i % cats)))});
        s.ds.labels.push_back(static_cast<int>(i % 2));
    }
    s.h = Homogenizer::fit(s.ds, iota(rows), {.bins = bins});
    s.binary = s.h.encode(s.ds);
    return s;
}

EncoderConfig tiny(EncoderArch arch) {
    EncoderConfig c;
    c.arch = arch;
    c.latent = 3;
    c.embedding = arch == EncoderArch::gnn ? 3 : 2;
    c.ffn_width = 4;
    c.ffn_depth = 1;
    c.gnn_layers = 2;
    c.tf_blocks = 1;
    c.tf_heads = 2;
    c.tf_head_dim = 2;
    c.tf_mlp = 3;
    c.decoder_hidden = 4;
    c.head_hidden = 3;
    return c;
}

// Symbolic parameter count per architecture, including biases.
std::size_t expected_count(const EncoderConfig& c, std::size_t D, std::size_t features, std::size_t classes) {
    const std::size_t m = c.embedding, d = c.latent, W = c.ffn_width;
    std::size_t n = D * m;
    switch (c.arch) {
        case EncoderArch::ffn: n += features * m * W + W + c.ffn_depth * (W * W + W) + W * d + d; break;
        case EncoderArch::gnn: n += c.gnn_layers * (2 * d * d + d); break;
        case EncoderArch::tf: {
            const std::size_t inner = c.tf_heads * c.tf_head_dim;
            n += m + c.tf_blocks * (4 * inner * m + 2 * m * c.tf_mlp + c.tf_mlp + m);
            if (m != d) n += m * d + d;
            break;
        }
    }
    n += d * c.decoder_hidden + c.decoder_hidden + c.decoder_hidden * D + D;
    if (classes) n += d * c.head_hidden + c.head_hidden + c.head_hidden * classes + classes;
    return n;
}

double nearest_centroid_balanced_accuracy(const Matrix& z, const std::vector<int>& y, const Matrix& zq,
                                          const std::vector<int>& yq) {
    Matrix centers(2, z.cols());
    std::vector<double> counts(2, 0.0);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        counts[static_cast<std::size_t>(y[i])] += 1.0;
        for (std::size_t j = 0; j < z.cols(); ++j) centers(static_cast<std::size_t>(y[i]), j) += z(i, j);
    }
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < z.cols(); ++j) centers(k, j) /= counts[k];
    std::vector<double> hit(2, 0.0), tot(2, 0.0);
    for (std::size_t i = 0; i < zq.rows(); ++i) {
        const double d0 = squared_distance(zq.row(i), centers.row(0));
        const double d1 = squared_distance(zq.row(i), centers.row(1));
        const int pred = d1 < d0 ? 1 : 0;
        tot[static_cast<std::size_t>(yq[i])] += 1.0;
        hit[static_cast<std::size_t>(yq[i])] += pred == yq[i];
    }
    return 0.5 * (hit[0] / tot[0] + hit[1] / tot[1]);
}

}  // namespace

TEST_CASE("init_autoencoder: ffn shapes follow the architecture formula") {
    const auto s = small_schema();
    REQUIRE(s.h.dims() == 13);
    EncoderConfig c;
    c.embedding = 4;
    c.ffn_width = 8;
    c.ffn_depth = 1;
    const auto ae = Autoencoder::init(c, s.h, 1);
    const auto& p = ae.params();
    CHECK(p.at("embed").shape_string() == "(13x4)");
    CHECK(p.at("ffn.in.w").shape_string() == "(8x8)");
    CHECK(p.at("ffn.in.b").shape_string() == "(1x8)");
    CHECK(p.at("ffn.hidden0.w").shape_string() == "(8x8)");
    CHECK(p.at("ffn.out.w").shape_string() == "(8x16)");
    CHECK(p.at("dec.out.w").shape_string() == "(100x13)");
    CHECK(ae.parameter_count() == expected_count(c, 13, 2, 0));
    for (auto arch : {EncoderArch::gnn, EncoderArch::tf}) {
        EncoderConfig other;
        other.arch = arch;
        CHECK(Autoencoder::init(other, s.h, 1).parameter_count() == expected_count(other, 13, 2, 0));
    }
    auto with_head = ae;
    with_head.attach_head(3, 5);
    CHECK(with_head.parameter_count() == expected_count(c, 13, 2, 3));
}

TEST_CASE("init_autoencoder: determinism and gnn width rule") {
    const auto s = small_schema();
    EncoderConfig c;
    CHECK(Autoencoder::init(c, s.h, 7).params() == Autoencoder::init(c, s.h, 7).params());
    CHECK_FALSE(Autoencoder::init(c, s.h, 7).params() == Autoencoder::init(c, s.h, 8).params());
    c.arch = EncoderArch::gnn;
    CHECK_NOTHROW(Autoencoder::init(c, s.h, 1));
    c.embedding = 8;
    CHECK_THROWS_AS(Autoencoder::init(c, s.h, 1), ConfigError);
}

TEST_CASE("gnn is smaller than an ffn with W >= 2d on the same schema") {
    const auto s = small_schema();
    EncoderConfig gnn;
    gnn.arch = EncoderArch::gnn;
    EncoderConfig ffn;
    for (std::size_t width : {2 * ffn.latent, std::size_t{100}})
        for (std::size_t layers : {1, 2, 3}) {
            ffn.ffn_width = width;
            gnn.gnn_layers = layers;
            CHECK(Autoencoder::init(gnn, s.h, 1).parameter_count() < Autoencoder::init(ffn, s.h, 1).parameter_count());
        }
}

TEST_CASE("encode shapes, row equivariance and popcount contract") {
    const auto s = small_schema();
    std::vector<std::size_t> perm = iota(s.binary.rows());
    Rng rng(3);
    rng.shuffle(std::span<std::size_t>(perm));
    for (auto arch : {EncoderArch::ffn, EncoderArch::gnn, EncoderArch::tf}) {
        EncoderConfig c;
        c.arch = arch;
        const auto ae = Autoencoder::init(c, s.h, 2);
        const Matrix z = ae.encode(s.binary);
        CHECK(z.rows() == s.binary.rows());
        CHECK(z.cols() == 16);
        const Matrix zp = ae.encode(select_rows(s.binary, perm));
        CHECK(max_abs_diff(zp, select_rows(z, perm)) < 1e-12);
        Matrix bad = s.binary;
        bad(0, 0) = 1.0 - bad(0, 0);
        CHECK_THROWS_AS(ae.encode(bad), ContractError);
    }
}

TEST_CASE("tf encoder with zero attention matches a hand-stepped block") {
    const auto s = small_schema(3, 2, 12);
    EncoderConfig c;
    c.arch = EncoderArch::tf;
    c.tf_blocks = 1;
    c.tf_heads = 1;
    c.tf_head_dim = 3;
    c.tf_mlp = 5;
    c.embedding = c.latent = 4;
    auto ae = Autoencoder::init(c, s.h, 4);
    for (const char* name : {"tf.block0.q.w", "tf.block0.k.w", "tf.block0.v.w", "tf.block0.o.w"})
        ae.params().at(name).fill(0.0);
    const Matrix z = ae.encode(s.binary);
    const Matrix& cls = ae.params().at("tf.cls");
    const Matrix& w1 = ae.params().at("tf.block0.mlp1.w");
    const Matrix& b1 = ae.params().at("tf.block0.mlp1.b");
    const Matrix& w2 = ae.params().at("tf.block0.mlp2.w");
    const Matrix& b2 = ae.params().at("tf.block0.mlp2.b");
    std::vector<double> expect(4);
    for (std::size_t j = 0; j < 4; ++j) {
        double v = cls(0, j) + b2(0, j);
        for (std::size_t k = 0; k < 5; ++k) {
            double hk = b1(0, k);
            for (std::size_t i = 0; i < 4; ++i) hk += cls(0, i) * w1(i, k);
            v += std::max(0.0, hk) * w2(k, j);
        }
        expect[j] = v;
    }
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t j = 0; j < 4; ++j) CHECK(z(r, j) == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("decode produces per-group distributions") {
    const auto s = small_schema(4, 3, 40);
    REQUIRE(s.h.groups()[0].size == 4);
    EncoderConfig c;
    auto ae = Autoencoder::init(c, s.h, 5);
    Rng rng(8);
    const Matrix z = random_matrix(rng, 6, 16, 3.0);
    const Matrix soft = ae.decode(z);
    for (std::size_t r = 0; r < soft.rows(); ++r)
        for (const auto& g : s.h.groups()) {
            double t = 0.0;
            for (std::size_t k = 0; k < g.size; ++k) t += soft(r, g.offset + k);
            CHECK(t == doctest::Approx(1.0).epsilon(1e-9));
        }

    // shifting every logit of one group by a constant leaves its probabilities unchanged
    auto shifted = ae;
    for (std::size_t k = 0; k < 4; ++k) shifted.params().at("dec.out.b")(0, k) += 2.5;
    CHECK(max_abs_diff(shifted.decode(z), soft) < 1e-12);

    ae.params().at("dec.out.w").fill(0.0);
    ae.params().at("dec.out.b").fill(0.0);
    const Matrix flat = ae.decode(z);
    for (std::size_t k = 0; k < 4; ++k) CHECK(flat(0, k) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("group softmax stays in the simplex on random logits") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ad::GroupSpan> groups;
        std::size_t D = 0;
        const std::size_t count = 1 + rng.below(5);
        for (std::size_t g = 0; g < count; ++g) {
            const std::size_t size = 1 + rng.below(6);
            groups.push_back({D, size});
            D += size;
        }
        ad::Graph gr;
        const Matrix logits = random_matrix(rng, 3, D, 1.0 + 30.0 * rng.uniform());
        const Matrix p = ad::group_softmax(gr.constant(logits), groups).value();
        bool ok = p.all_finite();
        for (std::size_t r = 0; r < 3; ++r)
            for (const auto& g : groups) {
                double t = 0.0;
                for (std::size_t k = 0; k < g.size; ++k) {
                    const double v = p(r, g.offset + k);
                    ok = ok && v >= 0.0 && v <= 1.0;
                    t += v;
                }
                ok = ok && std::abs(t - 1.0) < 1e-12;
            }
        CHECK(ok);
    }
}

TEST_CASE("recon_loss examples") {
    const auto s = small_schema(4, 3, 40);
    const Matrix& b = s.binary;
    CHECK(recon_loss(b, b, s.h) == 0.0);
    Matrix uniform(b.rows(), b.cols());
    for (const auto& g : s.h.groups())
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t k = 0; k < g.size; ++k) uniform(r, g.offset + k) = 1.0 / static_cast<double>(g.size);
    CHECK(recon_loss(b, uniform, s.h) == doctest::Approx(1.0).epsilon(1e-14));

    // bits-based oracle: (1/(c+r)) Σ (1/log2|g|)·(−log2 p_true)
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix soft(b.rows(), b.cols());
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (const auto& g : s.h.groups()) {
                double t = 0.0;
                for (std::size_t k = 0; k < g.size; ++k) t += (soft(r, g.offset + k) = rng.uniform() + 1e-3);
                for (std::size_t k = 0; k < g.size; ++k) soft(r, g.offset + k) /= t;
            }
        double oracle = 0.0;
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (const auto& g : s.h.groups())
                for (std::size_t k = 0; k < g.size; ++k)
                    if (b(r, g.offset + k) == 1.0)
                        oracle += -std::log2(soft(r, g.offset + k)) / std::log2(static_cast<double>(g.size)) / 2.0;
        oracle /= static_cast<double>(b.rows());
        const double got = recon_loss(b, soft, s.h);
        CHECK(got >= 0.0);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
    }
    Matrix zero_true = uniform;
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t k = 0; k < b.cols(); ++k) zero_true(r, k) = b(r, k) == 1.0 ? 0.0 : zero_true(r, k);
    CHECK(std::isfinite(recon_loss(b, zero_true, s.h)));
}

TEST_CASE("reconstruction objective gradients match finite differences for every encoder") {
    const auto s = small_schema(4, 3, 30);
    REQUIRE(s.h.dims() <= 12);
    const Matrix b = select_rows(s.binary, std::vector<std::size_t>{0, 7, 15, 22});
    const std::vector<int> y{0, 1, 1, 0};
    for (auto arch : {EncoderArch::ffn, EncoderArch::gnn, EncoderArch::tf}) {
        CAPTURE(to_string(arch));
        auto ae = Autoencoder::init(tiny(arch), s.h, 11);
        const GraphObjective eq1 = [&](ad::Graph& g, const ad::BoundParams& p) {
            return recon_loss_graph(ae.decode_logits_graph(g, p, ae.encode_graph(g, p, b)), b, s.h);
        };
        const auto rep = grad_check(eq1, ae.params(), {.step = 1e-5, .tolerance = 1e-4});
        for (const auto& e : rep.entries) CHECK_MESSAGE(e.passed, e.name << " rel err " << e.max_rel_error);

        ae.attach_head(2, 3);
        const GraphObjective eq2 = [&](ad::Graph& g, const ad::BoundParams& p) {
            const auto z = ae.encode_graph(g, p, b);
            const auto rec = recon_loss_graph(ae.decode_logits_graph(g, p, z), b, s.h);
            return ad::add(rec, ad::scale(ad::softmax_cross_entropy(ae.head_logits_graph(g, p, z), y), 0.5));
        };
        const auto rep2 = grad_check(eq2, ae.params(), {.step = 1e-5, .tolerance = 1e-4});
        for (const auto& e : rep2.entries) CHECK_MESSAGE(e.passed, e.name << " rel err " << e.max_rel_error);
    }
}

TEST_CASE("train_unsupervised improves, is deterministic, and zero epochs is a no-op") {
    const auto ds = data::make_mixed(200, 3, 2, 4, 0.05, 2, 21);
    const auto split = data::stratified_split(ds, {}, 1);
    const auto h = Homogenizer::fit(ds, split.train);
    const Matrix tr = h.encode(ds, split.train), va = h.encode(ds, split.validation);
    EncoderConfig c;
    c.ffn_width = 32;
    TrainConfig t;
    t.epochs = 50;
    t.batch_size = 32;
    t.seed = 5;

    auto ae = Autoencoder::init(c, h, 3);
    const auto before = ae.params();
    auto zero = t;
    zero.epochs = 0;
    train_unsupervised(ae, tr, va, zero);
    CHECK(ae.params() == before);

    const auto res = train_unsupervised(ae, tr, va, t);
    REQUIRE(res.train_loss.size() >= 2);
    CHECK(res.train_loss.back() < res.train_loss.front());
    CHECK(res.val_loss[res.best_epoch] == *std::min_element(res.val_loss.begin(), res.val_loss.end()));
    CHECK(reconstruction_objective(ae, va) == doctest::Approx(res.val_loss[res.best_epoch]).epsilon(1e-12));

    auto again = Autoencoder::init(c, h, 3);
    const auto res2 = train_unsupervised(again, tr, va, t);
    CHECK(res2.train_loss == res.train_loss);
    CHECK(again.params() == ae.params());
}

TEST_CASE("fine-tuning with alpha 0 leaves encoder updates equal to pure reconstruction") {
    const auto ds = data::make_mixed(120, 2, 2, 3, 0.0, 2, 4);
    const auto split = data::stratified_split(ds, {}, 2);
    const auto h = Homogenizer::fit(ds, split.train);
    const Matrix tr = h.encode(ds, split.train), va = h.encode(ds, split.validation);
    const auto ytr = data::take_labels(ds.labels, split.train), yva = data::take_labels(ds.labels, split.validation);
    EncoderConfig c;
    c.ffn_width = 16;
    TrainConfig t;
    t.epochs = 5;
    t.batch_size = 16;
    t.alpha = 0.0;
    auto plain = Autoencoder::init(c, h, 9);
    auto sft = plain;
    train_unsupervised(plain, tr, va, t);
    fine_tune_supervised(sft, tr, ytr, va, yva, 2, t);
    for (const auto& [name, value] : plain.params()) CHECK_MESSAGE(sft.params().at(name) == value, name);
}

TEST_CASE("fine-tuning separates blobs in latent space and keeps reconstruction low") {
    const Matrix centers{{-3.0, -3.0}, {3.0, 3.0}};
    const auto ds = data::make_blobs(150, centers, 1.0, 12);
    const auto split = data::stratified_split(ds, {}, 3);
    const auto h = Homogenizer::fit(ds, split.train);
    const Matrix tr = h.encode(ds, split.train), va = h.encode(ds, split.validation), te = h.encode(ds, split.test);
    const auto ytr = data::take_labels(ds.labels, split.train);
    const auto yva = data::take_labels(ds.labels, split.validation);
    const auto yte = data::take_labels(ds.labels, split.test);
    EncoderConfig c;
    c.ffn_width = 32;
    TrainConfig t;
    t.epochs = 60;
    t.batch_size = 32;
    t.learning_rate = 3e-3;
    auto ae = Autoencoder::init(c, h, 1);
    train_unsupervised(ae, tr, va, t);
    const double recon_before = reconstruction_objective(ae, va);
    fine_tune_supervised(ae, tr, ytr, va, yva, 2, t);
    const double recon_after = reconstruction_objective(ae, va);
    CHECK(recon_after <= 1.25 * recon_before);
    const double bacc = nearest_centroid_balanced_accuracy(ae.encode(tr), ytr, ae.encode(te), yte);
    CHECK(bacc >= 0.95);
}

TEST_CASE("autoencoder checkpoints round-trip bit-exactly") {
    const auto s = small_schema();
    for (auto arch : {EncoderArch::ffn, EncoderArch::gnn, EncoderArch::tf}) {
        EncoderConfig c;
        c.arch = arch;
        auto ae = Autoencoder::init(c, s.h, 3);
        ae.attach_head(2, 4);
        const auto path = std::filesystem::temp_directory_path() / "tabdistill_ae_roundtrip.json";
        ae.save(path);
        const auto back = Autoencoder::load(path);
        std::filesystem::remove(path);
        CHECK(back.params() == ae.params());
        CHECK(back.config() == ae.config());
        CHECK(back.num_classes() == 2);
        CHECK(back.encode(s.binary) == ae.encode(s.binary));
    }
}
