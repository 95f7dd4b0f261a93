#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabdistill/data/homogenizer.hpp"
#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/params.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::repr {

enum class EncoderArch { ffn, gnn, tf };

const char* to_string(EncoderArch arch) noexcept;
EncoderArch parse_encoder_arch(const std::string& text);

struct EncoderConfig {
    EncoderArch arch = EncoderArch::ffn;
    std::size_t latent = 16;     // d
    std::size_t embedding = 16;  // m (column embedding width)
    // FFN: input layer (c+r)m -> W, `ffn_depth` hidden W -> W layers, output W -> d.
    std::size_t ffn_width = 100;
    std::size_t ffn_depth = 1;
    double dropout = 0.0;  // FFN hidden activations, training only
    // GNN: message-passing layers; requires embedding == latent.
    std::size_t gnn_layers = 3;
    // TF: blocks, heads, per-head width, block MLP width.
    std::size_t tf_blocks = 2;
    std::size_t tf_heads = 4;
    std::size_t tf_head_dim = 8;
    std::size_t tf_mlp = 128;
    // Decoder d -> hidden -> D and SFT head d -> hidden -> L.
    std::size_t decoder_hidden = 100;
    std::size_t head_hidden = 100;

    // Throws ConfigError for zero widths/depths or gnn with m != d.
    void validate() const;

    nlohmann::json to_json() const;
    static EncoderConfig from_json(const nlohmann::json& j);
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Column-embedding autoencoder: embeddings C (D x m), encoder φ, decoder ψ
// and an optional classifier head f. Parameters live in one ParamMap whose
// entries are named "<component>.<layer>.<w|b>".
class Autoencoder {
public:
    static Autoencoder init(const EncoderConfig& config, const data::Homogenizer& homogenizer,
                            std::uint64_t seed);

    const EncoderConfig& config() const noexcept { return config_; }
    const data::Homogenizer& homogenizer() const noexcept { return homogenizer_; }
    std::size_t input_dims() const noexcept { return homogenizer_.dims(); }
    std::size_t latent_dims() const noexcept { return config_.latent; }

    ParamMap& params() noexcept { return params_; }
    const ParamMap& params() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.total_elements(); }

    bool has_head() const noexcept { return num_classes_ > 0; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    // Adds a freshly initialized classifier head with `classes` outputs.
    void attach_head(std::size_t classes, std::uint64_t seed);

    // Latent codes (rows x d) of a binary matrix with one hot slot per group.
    // The GNN treats the whole input as one bipartite graph.
    Matrix encode(const Matrix& binary) const;
    // Group-wise softmax probabilities (rows x D).
    Matrix decode(const Matrix& latent) const;
    Matrix decode_logits(const Matrix& latent) const;
    // Head logits (rows x L) for binary input.
    Matrix classify_logits(const Matrix& binary) const;

    // Graph builders over bound parameters. `dropout_rng` enables dropout.
    ad::Var encode_graph(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary,
                         Rng* dropout_rng = nullptr) const;
    ad::Var decode_logits_graph(ad::Graph& g, const ad::BoundParams& p, ad::Var latent) const;
    ad::Var head_logits_graph(ad::Graph& g, const ad::BoundParams& p, ad::Var latent) const;

    // Hot slot (absolute column) of each group for each row; throws
    // ContractError when a row does not have exactly one hot slot per group.
    std::vector<std::vector<std::size_t>> active_slots(const Matrix& binary) const;

    nlohmann::json to_json() const;
    static Autoencoder from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static Autoencoder load(const std::filesystem::path& path);

private:
    EncoderConfig config_;
    data::Homogenizer homogenizer_;
    ParamMap params_;
    std::size_t num_classes_ = 0;

    ad::Var encode_ffn(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary, Rng* rng) const;
    ad::Var encode_gnn(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary) const;
    ad::Var encode_tf(ad::Graph& g, const ad::BoundParams& p, const Matrix& binary) const;
};

// Per-group reconstruction weights 1/ln|group| (0 for single-slot groups).
// With natural-log cross-entropy this equals the bits-based weighting
// (1/log2|group|)·CE_bits.
std::vector<double> recon_weights(const data::Homogenizer& h);

// Mean over rows of (1/(c+r)) Σ_g w_g·CE(b_g, b̂_g), true-slot probability
// floored at 1e-12. `soft` holds probabilities.
double recon_loss(const Matrix& binary, const Matrix& soft, const data::Homogenizer& h);

// Graph form from decoder logits.
ad::Var recon_loss_graph(ad::Var logits, const Matrix& binary, const data::Homogenizer& h);

}  // namespace tabdistill::repr
