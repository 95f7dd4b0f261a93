#include "tabdistill/repr/autoencoder.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "tabdistill/data/csv.hpp"
#include "tabdistill/numerics/errors.hpp"

namespace tabdistill::repr {

namespace {

constexpr int kCheckpointVersion = 1;

// PyTorch-style fan-in uniform U(−1/√fan_in, 1/√fan_in) for weight and bias.
void add_linear(ParamMap& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                bool bias = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(in, out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    p.add(name + ".w", std::move(w));
    if (!bias) return;
    Matrix b(1, out);
    for (double& v : b.data()) v = rng.uniform(-bound, bound);
    p.add(name + ".b", std::move(b));
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

ad::Var linear(const ad::BoundParams& p, const std::string& name, ad::Var x) {
    ad::Var y = ad::matmul(x, p[name + ".w"]);
    return p.contains(name + ".b") ? ad::add_bias(y, p[name + ".b"]) : y;
}

ad::Var dropout(ad::Graph& g, ad::Var x, double rate, Rng* rng) {
    if (rng == nullptr || rate <= 0.0) return x;
    Matrix mask(x.rows(), x.cols());
    const double keep = 1.0 / (1.0 - rate);
    for (double& v : mask.data()) v = rng->uniform() < rate ? 0.0 : keep;
    return ad::mul(x, g.constant(std::move(mask)));
}

std::string layer(const char* prefix, std::size_t i) { return std::string(prefix) + std::to_string(i); }

}  // namespace

const char* to_string(EncoderArch arch) noexcept {
    switch (arch) {
        case EncoderArch::ffn: return "ffn";
        case EncoderArch::gnn: return "gnn";
        case EncoderArch::tf: return "tf";
    }
    return "?";
}

EncoderArch parse_encoder_arch(const std::string& text) {
    if (text == "ffn") return EncoderArch::ffn;
    if (text == "gnn") return EncoderArch::gnn;
    if (text == "tf") return EncoderArch::tf;
    throw ConfigError("unknown encoder architecture '" + text + "' (expected ffn, gnn or tf)");
}

void EncoderConfig::validate() const {
    if (latent == 0 || embedding == 0 || decoder_hidden == 0 || head_hidden == 0)
        throw ConfigError("encoder widths must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    switch (arch) {
        case EncoderArch::ffn:
            if (ffn_width == 0) throw ConfigError("ffn width must be at least 1");
            break;
        case EncoderArch::gnn:
            if (gnn_layers == 0) throw ConfigError("gnn needs at least one layer");
            if (embedding != latent)
                throw ConfigError("gnn requires the column embedding width (" + std::to_string(embedding) +
                                  ") to equal the latent width (" + std::to_string(latent) + ")");
            break;
        case EncoderArch::tf:
            if (tf_blocks == 0 || tf_heads == 0 || tf_head_dim == 0 || tf_mlp == 0)
                throw ConfigError("tf blocks, heads, head width and mlp width must be at least 1");
            break;
    }
}

nlohmann::json EncoderConfig::to_json() const {
    return {{"arch", to_string(arch)},       {"latent", latent},         {"embedding", embedding},
            {"ffn_width", ffn_width},        {"ffn_depth", ffn_depth},   {"dropout", dropout},
            {"gnn_layers", gnn_layers},      {"tf_blocks", tf_blocks},   {"tf_heads", tf_heads},
            {"tf_head_dim", tf_head_dim},    {"tf_mlp", tf_mlp},         {"decoder_hidden", decoder_hidden},
            {"head_hidden", head_hidden}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
    EncoderConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    if (j.contains("arch")) c.arch = parse_encoder_arch(j.at("arch").get<std::string>());
    get("latent", c.latent);
    get("embedding", c.embedding);
    get("ffn_width", c.ffn_width);
    get("ffn_depth", c.ffn_depth);
    get("dropout", c.dropout);
    get("gnn_layers", c.gnn_layers);
    get("tf_blocks", c.tf_blocks);
    get("tf_heads", c.tf_heads);
    get("tf_head_dim", c.tf_head_dim);
    get("tf_mlp", c.tf_mlp);
    get("decoder_hidden", c.decoder_hidden);
    get("head_hidden", c.head_hidden);
    for (const auto& [key, value] : j.items()) {
        static const char* known[] = {"arch",     "latent",      "embedding", "ffn_width",      "ffn_depth",
                                      "dropout",  "gnn_layers",  "tf_blocks", "tf_heads",       "tf_head_dim",
                                      "tf_mlp",   "decoder_hidden", "head_hidden"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown encoder config key '" + key + "'");
    }
    c.validate();
    return c;
}

Autoencoder Autoencoder::init(const EncoderConfig& config, const data::Homogenizer& homogenizer,
                              std::uint64_t seed) {
    config.validate();
    if (homogenizer.dims() == 0) throw ContractError("init_autoencoder: homogenizer is not fitted");
    Autoencoder ae;
    ae.config_ = config;
    ae.homogenizer_ = homogenizer;
    Rng rng(seed);
    const std::size_t D = homogenizer.dims(), m = config.embedding, d = config.latent;
    const std::size_t features = homogenizer.num_groups();
    ParamMap& p = ae.params_;
    p.add("embed", normal_matrix(D, m, rng));

    switch (config.arch) {
        case EncoderArch::ffn:
            add_linear(p, "ffn.in", features * m, config.ffn_width, rng);
            for (std::size_t h = 0; h < config.ffn_depth; ++h)
                add_linear(p, layer("ffn.hidden", h), config.ffn_width, config.ffn_width, rng);
            add_linear(p, "ffn.out", config.ffn_width, d, rng);
            break;
        case EncoderArch::gnn:
            for (std::size_t h = 0; h < config.gnn_layers; ++h) add_linear(p, layer("gnn.layer", h), 2 * d, d, rng);
            break;
        case EncoderArch::tf: {
            p.add("tf.cls", normal_matrix(1, m, rng));
            const std::size_t inner = config.tf_heads * config.tf_head_dim;
            for (std::size_t b = 0; b < config.tf_blocks; ++b) {
                const std::string base = layer("tf.block", b);
                add_linear(p, base + ".q", m, inner, rng, false);
                add_linear(p, base + ".k", m, inner, rng, false);
                add_linear(p, base + ".v", m, inner, rng, false);
                add_linear(p, base + ".o", inner, m, rng, false);
                add_linear(p, base + ".mlp1", m, config.tf_mlp, rng);
                add_linear(p, base + ".mlp2", config.tf_mlp, m, rng);
            }
            if (m != d) add_linear(p, "tf.proj", m, d, rng);
            break;
        }
    }
    add_linear(p, "dec.hidden", d, config.decoder_hidden, rng);
    add_linear(p, "dec.out", config.decoder_hidden, D, rng);
    return ae;
}

void Autoencoder::attach_head(std::size_t classes, std::uint64_t seed) {
    if (classes < 2) throw ContractError("classifier head needs at least 2 classes");
    if (has_head()) throw ContractError("classifier head already attached");
    Rng rng(seed);
    add_linear(params_, "head.hidden", config_.latent, config_.head_hidden, rng);
    add_linear(params_, "head.out", config_.head_hidden, classes, rng);
    num_classes_ = classes;
}

std::vector<std::vector<std::size_t>> Autoencoder::active_slots(const Matrix& binary) const {
    if (binary.cols() != input_dims())
        throw DimensionError("encode: input width " + std::to_string(binary.cols()) + ", expected " +
                             std::to_string(input_dims()));
    const auto& groups = homogenizer_.groups();
    std::vector<std::vector<std::size_t>> slots(binary.rows(), std::vector<std::size_t>(groups.size()));
    for (std::size_t r = 0; r < binary.rows(); ++r) {
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& g = groups[gi];
            std::size_t hot = 0, count = 0;
            for (std::size_t s = 0; s < g.size; ++s) {
                const double v = binary(r, g.offset + s);
                if (v == 1.0) {
                    hot = g.offset + s;
                    ++count;
                } else if (v != 0.0) {
                    count = 2;
                }
            }
            if (count != 1)
                throw ContractError("encode: row " + std::to_string(r) + " is not one-hot in feature '" + g.name +
                                    "' (expected exactly c+r ones per row)");
            slots[r][gi] = hot;
        }
    }
    return slots;
}

ad::Var Autoencoder::encode_graph(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary,
                                  Rng* dropout_rng) const {
    switch (config_.arch) {
        case EncoderArch::ffn: return encode_ffn(g, p, binary, dropout_rng);
        case EncoderArch::gnn: return encode_gnn(g, p, binary);
        case EncoderArch::tf: return encode_tf(g, p, binary);
    }
    throw ContractError("unreachable encoder architecture");
}

ad::Var Autoencoder::encode_ffn(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary, Rng* rng) const {
    const auto slots = active_slots(binary);
    const std::size_t features = homogenizer_.num_groups();
    std::vector<ad::Var> parts;
    parts.reserve(features);
    for (std::size_t gi = 0; gi < features; ++gi) {
        std::vector<std::size_t> idx(binary.rows());
        for (std::size_t r = 0; r < binary.rows(); ++r) idx[r] = slots[r][gi];
        parts.push_back(ad::gather_rows(p["embed"], std::move(idx)));
    }
    ad::Var x = ad::concat_cols(parts);
    x = dropout(g, ad::relu(linear(p, "ffn.in", x)), config_.dropout, rng);
    for (std::size_t h = 0; h < config_.ffn_depth; ++h)
        x = dropout(g, ad::relu(linear(p, layer("ffn.hidden", h), x)), config_.dropout, rng);
    return linear(p, "ffn.out", x);
}

// Bipartite message passing between row vertices z (zero-initialized) and
// column vertices w (the embeddings). Layer h updates rows from the mean of
// their active columns, then columns from the mean of their connected rows,
// with μ_h(self, agg) = ReLU([self ‖ agg]·W_h + b_h). The last layer emits
// the row codes without ReLU and skips the column update.
ad::Var Autoencoder::encode_gnn(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary) const {
    active_slots(binary);  // validates one-hot structure
    const std::size_t n = binary.rows(), D = input_dims(), d = config_.latent;
    const double per_row = static_cast<double>(homogenizer_.num_groups());
    std::vector<double> col_scale(D, 0.0);
    for (std::size_t i = 0; i < D; ++i) {
        double c = 0.0;
        for (std::size_t r = 0; r < n; ++r) c += binary(r, i);
        col_scale[i] = c > 0.0 ? 1.0 / c : 0.0;
    }
    const ad::Var b = g.constant(binary);
    const ad::Var bt = g.constant(transpose(binary));
    ad::Var z = g.constant(Matrix(n, d));
    ad::Var w = p["embed"];
    for (std::size_t h = 0; h < config_.gnn_layers; ++h) {
        const std::string name = layer("gnn.layer", h);
        const bool last = h + 1 == config_.gnn_layers;
        const ad::Var row_agg = ad::scale(ad::matmul(b, w), 1.0 / per_row);
        const std::array<ad::Var, 2> zin{z, row_agg};
        z = linear(p, name, ad::concat_cols(zin));
        if (last) break;
        z = ad::relu(z);
        const ad::Var col_agg = ad::scale_rows(ad::matmul(bt, z), col_scale);
        const std::array<ad::Var, 2> win{w, col_agg};
        w = ad::relu(linear(p, name, ad::concat_cols(win)));
    }
    return z;
}

// Token sequence per row: [cls, embeddings of the active slots]. Each block
// adds multi-head attention (per-head width d_qkv, no biases) to its input,
// then adds a ReLU MLP. The cls token after the last block is the output,
// projected to d when m != d.
ad::Var Autoencoder::encode_tf(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary) const {
    (void)g;
    const auto slots = active_slots(binary);
    const std::size_t n = binary.rows(), D = input_dims();
    const std::size_t tokens = homogenizer_.num_groups() + 1;
    std::vector<std::size_t> idx;
    idx.reserve(n * tokens);
    std::vector<std::size_t> cls_rows(n);
    for (std::size_t r = 0; r < n; ++r) {
        cls_rows[r] = r * tokens;
        idx.push_back(D);  // cls sits after the D column embeddings
        idx.insert(idx.end(), slots[r].begin(), slots[r].end());
    }
    const ad::Var table = ad::concat_rows(p["embed"], p["tf.cls"]);
    ad::Var x = ad::gather_rows(table, std::move(idx));
    for (std::size_t b = 0; b < config_.tf_blocks; ++b) {
        const std::string base = layer("tf.block", b);
        const ad::Var att = ad::grouped_attention(linear(p, base + ".q", x), linear(p, base + ".k", x),
                                                  linear(p, base + ".v", x), tokens, config_.tf_heads,
                                                  config_.tf_head_dim);
        x = ad::add(x, linear(p, base + ".o", att));
        x = ad::add(x, linear(p, base + ".mlp2", ad::relu(linear(p, base + ".mlp1", x))));
    }
    ad::Var out = ad::gather_rows(x, std::move(cls_rows));
    if (p.contains("tf.proj.w")) out = linear(p, "tf.proj", out);
    return out;
}

ad::Var Autoencoder::decode_logits_graph(ad::Graph&, const ad::BoundParams& p, ad::Var latent) const {
    if (latent.cols() != config_.latent)
        throw DimensionError("decode: latent width " + std::to_string(latent.cols()) + ", expected " +
                             std::to_string(config_.latent));
    return linear(p, "dec.out", ad::relu(linear(p, "dec.hidden", latent)));
}

ad::Var Autoencoder::head_logits_graph(ad::Graph&, const ad::BoundParams& p, ad::Var latent) const {
    if (!has_head()) throw ContractError("autoencoder has no classifier head");
    return linear(p, "head.out", ad::relu(linear(p, "head.hidden", latent)));
}

Matrix Autoencoder::encode(const Matrix& binary) const {
    ad::Graph g;
    const auto p = g.bind(params_);
    return encode_graph(g, p, binary).value();
}

Matrix Autoencoder::decode_logits(const Matrix& latent) const {
    ad::Graph g;
    const auto p = g.bind(params_);
    return decode_logits_graph(g, p, g.constant(latent)).value();
}

Matrix Autoencoder::decode(const Matrix& latent) const {
    ad::Graph g;
    const auto p = g.bind(params_);
    const auto spans = homogenizer_.spans();
    return ad::group_softmax(decode_logits_graph(g, p, g.constant(latent)), spans).value();
}

Matrix Autoencoder::classify_logits(const Matrix& binary) const {
    ad::Graph g;
    const auto p = g.bind(params_);
    return head_logits_graph(g, p, encode_graph(g, p, binary)).value();
}

nlohmann::json Autoencoder::to_json() const {
    nlohmann::json j;
    j["format"] = "tabdistill-autoencoder";
    j["version"] = kCheckpointVersion;
    j["config"] = config_.to_json();
    j["homogenizer"] = homogenizer_.to_json();
    j["num_classes"] = num_classes_;
    j["params"] = nlohmann::json::array();
    for (const auto& [name, m] : params_)
        j["params"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}});
    return j;
}

Autoencoder Autoencoder::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabdistill-autoencoder") throw ContractError("not an autoencoder checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw ContractError("unsupported autoencoder checkpoint version");
    Autoencoder ae;
    ae.config_ = EncoderConfig::from_json(j.at("config"));
    ae.homogenizer_ = data::Homogenizer::from_json(j.at("homogenizer"));
    ae.num_classes_ = j.at("num_classes").get<std::size_t>();
    for (const auto& e : j.at("params"))
        ae.params_.add(e.at("name").get<std::string>(),
                       Matrix(e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>(),
                              e.at("data").get<std::vector<double>>()));
    // layout check against a fresh initialization
    Autoencoder ref = init(ae.config_, ae.homogenizer_, 0);
    if (ae.num_classes_ > 0) ref.attach_head(ae.num_classes_, 0);
    if (!ref.params_.same_layout(ae.params_)) throw ContractError("autoencoder checkpoint has an unexpected layout");
    return ae;
}

void Autoencoder::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data::DataError("cannot write '" + path.string() + "'");
    out << to_json().dump() << '\n';
}

Autoencoder Autoencoder::load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(data::read_text_file(path)));
}

std::vector<double> recon_weights(const data::Homogenizer& h) {
    std::vector<double> w;
    for (const auto& g : h.groups()) w.push_back(g.size > 1 ? 1.0 / std::log(static_cast<double>(g.size)) : 0.0);
    return w;
}

double recon_loss(const Matrix& binary, const Matrix& soft, const data::Homogenizer& h) {
    if (!binary.same_shape(soft) || binary.cols() != h.dims())
        throw DimensionError("recon_loss: shapes " + binary.shape_string() + " and " + soft.shape_string());
    if (binary.rows() == 0) throw ContractError("recon_loss: no rows");
    const auto weights = recon_weights(h);
    double total = 0.0;
    for (std::size_t r = 0; r < binary.rows(); ++r) {
        double row = 0.0;
        for (std::size_t gi = 0; gi < h.groups().size(); ++gi) {
            const auto& g = h.groups()[gi];
            for (std::size_t s = 0; s < g.size; ++s)
                if (binary(r, g.offset + s) == 1.0)
                    row += weights[gi] * -std::log(std::max(soft(r, g.offset + s), 1e-12));
        }
        total += row / static_cast<double>(h.num_groups());
    }
    return total / static_cast<double>(binary.rows());
}

ad::Var recon_loss_graph(ad::Var logits, const Matrix& binary, const data::Homogenizer& h) {
    const auto spans = h.spans();
    const auto weights = recon_weights(h);
    return ad::grouped_cross_entropy(logits, binary, spans, weights, 1e-12);
}

}  // namespace tabdistill::repr
