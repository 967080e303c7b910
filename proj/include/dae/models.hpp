#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dae/autodiff.hpp"
#include "dae/tensor.hpp"

namespace dae {

enum class Activation { Tanh, Relu };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected stack: layer_dims = {input, hidden..., output}.
struct MlpConfig {
    std::vector<std::size_t> layer_dims;
    Activation hidden = Activation::Tanh;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::vector<std::size_t> hidden_widths() const;
    void validate() const;

    friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

struct Linear {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
};

enum class DropoutMode { Train, Eval };

/// Inverted dropout applied after every hidden activation of a decoder.
struct DropoutSpec {
    double p = 0.0;
    DropoutMode mode = DropoutMode::Eval;
    std::uint64_t seed = 0;

    bool active() const noexcept { return mode == DropoutMode::Train && p > 0.0; }
};

/// Keep/scale mask of `n` units: 0 with probability p, 1/(1-p) otherwise.
std::vector<double> dropout_mask(std::size_t n, double p, std::uint64_t seed);
Tensor apply_dropout(const Tensor& activations, double p, std::uint64_t seed, DropoutMode mode);
Var apply_dropout(Var activations, double p, std::uint64_t seed, DropoutMode mode);

class Mlp {
public:
    Mlp() = default;
    Mlp(MlpConfig config, std::vector<Linear> layers);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
    static Mlp init(MlpConfig config, std::mt19937_64& rng);

    const MlpConfig& config() const noexcept { return config_; }
    const std::vector<Linear>& layers() const noexcept { return layers_; }
    std::vector<Linear>& layers() noexcept { return layers_; }

    /// Linear/activation alternation with an identity output layer.
    Var forward(Graph& g, Var x, const DropoutSpec& dropout = {});
    /// Every layer followed by the hidden activation (used as a VAE trunk).
    Var forward_activated(Graph& g, Var x, const DropoutSpec& dropout = {});

    Tensor predict(const Tensor& x) const;
    Tensor predict_activated(const Tensor& x) const;

    std::vector<Tensor*> parameters();
    void set_requires_grad(bool flag);

private:
    Var run(Graph& g, Var x, bool activate_last, const DropoutSpec& dropout);
    Tensor run(const Tensor& x, bool activate_last) const;

    MlpConfig config_;
    std::vector<Linear> layers_;
};

/// mu and log-variance layers on top of the encoder trunk.
struct VaeHead {
    Linear mu;
    Linear logvar;
};

struct VaeEncoding {
    Var mu;
    Var logvar;
    Var z;
};

/// z = mu + exp(logvar / 2) * noise, differentiable in mu and logvar.
VaeEncoding vae_reparameterize(Graph& g, Var mu, Var logvar, const Tensor& noise);

struct LossTerms {
    Var total;
    Var recon;
    Var reg;
};

/// recon = mean squared error over all entries; reg = KL(q || N(0, I)) summed
/// over latent dims and averaged over the batch; total = recon + beta * reg.
LossTerms vae_loss(Var x, Var x_hat, Var mu, Var logvar, double beta);

/// Closed-form KL(N(mu, diag exp(logvar)) || N(0, I)) per row, summed over dims.
std::vector<double> gaussian_kl_rows(const Tensor& mu, const Tensor& logvar);

struct Codebook {
    Tensor entries;  // [K x d_z]

    std::size_t size() const noexcept { return entries.rows(); }
    std::size_t dim() const noexcept { return entries.cols(); }
    /// Entries uniform on [-1, 1]^d.
    static Codebook init(std::size_t k, std::size_t dim, std::mt19937_64& rng);
};

struct Quantized {
    std::vector<std::size_t> indices;
    Tensor z_q;
};

/// Nearest entry per row (Euclidean), ties to the lowest index.
Quantized vq_quantize(const Codebook& codebook, const Tensor& z);

struct VqBottleneck {
    std::vector<std::size_t> indices;
    Var z_q;         // straight-through: value of the codes, gradient flows to z
    Var codes;       // gathered codebook rows, gradient flows to the codebook
};

VqBottleneck vq_bottleneck(Var z, Var codebook_entries);

/// mean_i ||sg(z_i) - q_i||^2 + beta * mean_i ||z_i - sg(q_i)||^2.
Var vq_loss(Var z, Var codes, double beta_commit);

enum class ModelKind { Ae, Vae, Vq };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
    ModelKind kind = ModelKind::Vae;
    MlpConfig encoder{{10, 128, 128, 2}, Activation::Tanh};
    MlpConfig decoder{{2, 128, 128, 10}, Activation::Tanh};
    std::size_t codebook_size = 64;
    double beta_kl = 1.0;
    double beta_commit = 0.25;

    std::size_t latent_dim() const { return encoder.output_dim(); }
    void validate() const;
};

/// Parameter group names used by stage schedules.
inline constexpr std::string_view kEncoderGroup = "encoder";
inline constexpr std::string_view kDecoderGroup = "decoder";
inline constexpr std::string_view kCodebookGroup = "codebook";

struct ForwardOptions {
    DropoutSpec decoder_dropout;
    bool sample_latent = true;  // VAE: reparameterized sample vs posterior mean
    std::uint64_t noise_seed = 0;
};

/// Encoder (+ VAE head or codebook) and decoder.
class Model {
public:
    Model() = default;
    static Model init(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    ModelConfig& config() noexcept { return config_; }
    ModelKind kind() const noexcept { return config_.kind; }

    Mlp& encoder() noexcept { return encoder_; }
    const Mlp& encoder() const noexcept { return encoder_; }
    Mlp& decoder() noexcept { return decoder_; }
    const Mlp& decoder() const noexcept { return decoder_; }
    std::optional<VaeHead>& head() noexcept { return head_; }
    const std::optional<VaeHead>& head() const noexcept { return head_; }
    std::optional<Codebook>& codebook() noexcept { return codebook_; }
    const std::optional<Codebook>& codebook() const noexcept { return codebook_; }

    /// Replaces the decoder (config echo updated). Latent/output widths must match.
    void replace_decoder(Mlp decoder);

    std::vector<std::string> group_names() const;
    bool has_group(std::string_view name) const;
    std::vector<Tensor*> group(std::string_view name);
    std::vector<Tensor*> parameters();

    /// Training objective on one batch; records into g.
    LossTerms loss(Graph& g, const Tensor& batch, const ForwardOptions& options);

    /// Pre-quantization encoder output (VAE: posterior mean).
    Tensor encode(const Tensor& x) const;
    /// Latent used by the decoder at evaluation: encode() for AE/VAE, tau(encode()) for VQ.
    Tensor latent(const Tensor& x) const;
    Tensor decode(const Tensor& z) const;
    Tensor reconstruct(const Tensor& x) const { return decode(latent(x)); }

    /// FNV-1a over the raw bytes of every tensor in the group.
    std::uint64_t checksum(std::string_view group_name);

private:
    ModelConfig config_;
    Mlp encoder_;
    std::optional<VaeHead> head_;
    Mlp decoder_;
    std::optional<Codebook> codebook_;
};

/// Copy of `reference` with each hidden width w replaced by ceil(w / 2).
MlpConfig halved_width(const MlpConfig& reference);

}  // namespace dae
