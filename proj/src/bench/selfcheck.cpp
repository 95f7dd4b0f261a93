#include "tabdistill/bench/selfcheck.hpp"

#include <algorithm>

#include "tabdistill/data/homogenizer.hpp"
#include "tabdistill/data/split.hpp"
#include "tabdistill/data/synthetic.hpp"
#include "tabdistill/distill/gm.hpp"
#include "tabdistill/distill/kip.hpp"
#include "tabdistill/numerics/gradcheck.hpp"
#include "tabdistill/repr/autoencoder.hpp"

namespace tabdistill::bench {

namespace {

constexpr std::size_t kMaxChecked = 20;

SelfCheckResult run(const std::string& name, const GraphObjective& obj, const ParamMap& params, double tolerance,
                    double step) {
    GradCheckOptions opt;
    opt.step = step;
    opt.tolerance = tolerance;
    opt.max_entries = std::max<std::size_t>(1, kMaxChecked / params.size());
    const auto rep = grad_check(obj, params, opt);
    SelfCheckResult r{name, 0, rep.max_rel_error, tolerance, rep.passed};
    for (const auto& e : rep.entries) r.checked += e.checked;
    return r;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

std::vector<SelfCheckResult> gradient_self_check(std::uint64_t seed) {
    std::vector<SelfCheckResult> out;

    // Autoencoder objectives on a small mixed table.
    const auto ds = data::make_mixed(40, 2, 1, 3, 0.0, 2, seed);
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto h = data::Homogenizer::fit(ds, all, {.bins = 3, .strategy = data::BinStrategy::quantile});
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    const Matrix b = h.encode(ds, rows);
    const auto y = data::take_labels(ds.labels, rows);

    repr::EncoderConfig cfg;
    cfg.latent = 3;
    cfg.embedding = 3;
    cfg.ffn_width = 4;
    cfg.decoder_hidden = 4;
    cfg.head_hidden = 4;
    auto ae = repr::Autoencoder::init(cfg, h, mix_seed(seed, 1));
    const GraphObjective recon = [&](ad::Graph& g, const ad::BoundParams& p) {
        return repr::recon_loss_graph(ae.decode_logits_graph(g, p, ae.encode_graph(g, p, b)), b, h);
    };
    out.push_back(run("reconstruction", recon, ae.params(), 1e-4, 1e-5));

    ae.attach_head(2, mix_seed(seed, 2));
    const GraphObjective sft = [&](ad::Graph& g, const ad::BoundParams& p) {
        const auto z = ae.encode_graph(g, p, b);
        const auto rec = repr::recon_loss_graph(ae.decode_logits_graph(g, p, z), b, h);
        return ad::add(rec, ad::scale(ad::softmax_cross_entropy(ae.head_logits_graph(g, p, z), y), 0.5));
    };
    out.push_back(run("supervised fine-tuning", sft, ae.params(), 1e-4, 1e-5));

    // KIP: 3 support rows in 2-D plus their labels (9 entries).
    Rng rng(mix_seed(seed, 3));
    const Matrix x = random_matrix(rng, 10, 2);
    std::vector<int> yk(10);
    for (std::size_t i = 0; i < 10; ++i) yk[i] = static_cast<int>(i % 2);
    const Matrix targets = distill::kip_targets(yk, 2);
    ParamMap kp;
    kp.add("xbar", random_matrix(rng, 3, 2));
    kp.add("ybar", Matrix{{-1}, {1}, {1}});
    const GraphObjective kip = [&](ad::Graph&, const ad::BoundParams& p) {
        return distill::kip_loss(p["xbar"], p["ybar"], x, targets, 1e-2);
    };
    out.push_back(run("kip", kip, kp, 1e-3, 1e-6));

    // Gradient matching: 4 synthetic rows of width 4 (16 entries).
    const Matrix s = random_matrix(rng, 12, 4);
    std::vector<int> ys(12);
    for (std::size_t i = 0; i < 12; ++i) ys[i] = static_cast<int>(i % 2);
    Rng init(mix_seed(seed, 4));
    const ParamMap theta = distill::init_backbone(4, 6, 2, 2, init);
    const GradientMap real = distill::backbone_gradients(theta, s, ys);
    const std::vector<int> yr{0, 0, 1, 1};
    ParamMap gp;
    gp.add("r", random_matrix(rng, 4, 4));
    const GraphObjective gm = [&](ad::Graph& g, const ad::BoundParams& p) {
        return distill::gradient_distance_graph(g, real, distill::backbone_gradients_graph(g, theta, p["r"], yr));
    };
    out.push_back(run("gradient matching", gm, gp, 1e-4, 1e-6));
    return out;
}

}  // namespace tabdistill::bench
