#include "dae/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "dae/errors.hpp"
#include "dae/random.hpp"

namespace dae {

std::string_view activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::vector<std::size_t> MlpConfig::hidden_widths() const {
    if (layer_dims.size() <= 2) return {};
    return {layer_dims.begin() + 1, layer_dims.end() - 1};
}

void MlpConfig::validate() const {
    if (layer_dims.size() < 2) throw ContractError("an MLP needs at least input and output widths");
    for (auto w : layer_dims) {
        if (w == 0) throw ContractError("MLP widths must be positive");
    }
}

MlpConfig halved_width(const MlpConfig& reference) {
    MlpConfig out = reference;
    for (std::size_t i = 1; i + 1 < out.layer_dims.size(); ++i) out.layer_dims[i] = (out.layer_dims[i] + 1) / 2;
    return out;
}

// --- dropout ---------------------------------------------------------------

std::vector<double> dropout_mask(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout probability must lie in [0, 1)");
    std::vector<double> mask(n, 1.0);
    if (p == 0.0) return mask;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& m : mask) m = uniform(rng) < p ? 0.0 : keep_scale;
    return mask;
}

Tensor apply_dropout(const Tensor& activations, double p, std::uint64_t seed, DropoutMode mode) {
    if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout probability must lie in [0, 1)");
    if (mode == DropoutMode::Eval || p == 0.0) return activations;
    auto mask = dropout_mask(activations.size(), p, seed);
    std::vector<double> out(activations.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = activations[i] * mask[i];
    return Tensor(activations.shape(), std::move(out));
}

Var apply_dropout(Var activations, double p, std::uint64_t seed, DropoutMode mode) {
    if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout probability must lie in [0, 1)");
    if (mode == DropoutMode::Eval || p == 0.0) return activations;
    const auto& shape = activations.shape();
    auto mask = activations.graph->constant(Tensor(shape, dropout_mask(shape_size(shape), p, seed)));
    return mul(activations, mask);
}

namespace {

Linear init_linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    std::vector<double> w(out * in);
    std::vector<double> b(out);
    for (auto& v : w) v = uniform(rng);
    for (auto& v : b) v = uniform(rng);
    return {Tensor::matrix(out, in, std::move(w), true), Tensor({out}, std::move(b), true)};
}

Tensor activate(const Tensor& x, Activation a) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a == Activation::Tanh ? std::tanh(x[i]) : (x[i] > 0.0 ? x[i] : 0.0);
    }
    return Tensor(x.shape(), std::move(out));
}

Var activate(Var x, Activation a) { return a == Activation::Tanh ? tanh(x) : relu(x); }

}  // namespace

// --- Mlp -------------------------------------------------------------------

Mlp::Mlp(MlpConfig config, std::vector<Linear> layers) : config_(std::move(config)), layers_(std::move(layers)) {
    config_.validate();
    if (layers_.size() + 1 != config_.layer_dims.size()) throw DimensionError("layer count does not match config");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weight.shape() != Shape{config_.layer_dims[i + 1], config_.layer_dims[i]} ||
            l.bias.shape() != Shape{config_.layer_dims[i + 1]}) {
            throw DimensionError("layer " + std::to_string(i) + " has shape " + shape_string(l.weight.shape()) +
                                 " inconsistent with config");
        }
    }
}

Mlp Mlp::init(MlpConfig config, std::mt19937_64& rng) {
    config.validate();
    std::vector<Linear> layers;
    for (std::size_t i = 0; i + 1 < config.layer_dims.size(); ++i) {
        layers.push_back(init_linear(config.layer_dims[i], config.layer_dims[i + 1], rng));
    }
    return Mlp(std::move(config), std::move(layers));
}

Var Mlp::run(Graph& g, Var x, bool activate_last, const DropoutSpec& dropout) {
    if (x.value().rank() != 2 || x.value().cols() != config_.input_dim()) {
        throw ContractError("MLP expects input width " + std::to_string(config_.input_dim()) + ", got " +
                            shape_string(x.shape()));
    }
    Var h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = linear(g.parameter(layers_[i].weight), g.parameter(layers_[i].bias), h);
        const bool last = i + 1 == layers_.size();
        if (!last || activate_last) {
            h = activate(h, config_.hidden);
            if (dropout.active() && !last) h = apply_dropout(h, dropout.p, derive_seed(dropout.seed, i), dropout.mode);
        }
    }
    return h;
}

Tensor Mlp::run(const Tensor& x, bool activate_last) const {
    if (x.rank() != 2 || x.cols() != config_.input_dim()) {
        throw ContractError("MLP expects input width " + std::to_string(config_.input_dim()) + ", got " +
                            shape_string(x.shape()));
    }
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = forward_linear(layers_[i].weight, layers_[i].bias, h);
        if (i + 1 < layers_.size() || activate_last) h = activate(h, config_.hidden);
    }
    return h;
}

Var Mlp::forward(Graph& g, Var x, const DropoutSpec& dropout) { return run(g, x, false, dropout); }
Var Mlp::forward_activated(Graph& g, Var x, const DropoutSpec& dropout) { return run(g, x, true, dropout); }
Tensor Mlp::predict(const Tensor& x) const { return run(x, false); }
Tensor Mlp::predict_activated(const Tensor& x) const { return run(x, true); }

std::vector<Tensor*> Mlp::parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

void Mlp::set_requires_grad(bool flag) {
    for (auto* p : parameters()) p->set_requires_grad(flag);
}

// --- VAE -------------------------------------------------------------------

VaeEncoding vae_reparameterize(Graph& g, Var mu, Var logvar, const Tensor& noise) {
    if (mu.shape() != logvar.shape() || noise.shape() != mu.shape()) {
        throw ContractError("vae: mu " + shape_string(mu.shape()) + ", logvar " + shape_string(logvar.shape()) +
                            " and noise " + shape_string(noise.shape()) + " must share a shape");
    }
    Var std_dev = exp(scale(logvar, 0.5));
    Var z = add(mu, mul(std_dev, g.constant(noise)));
    return {mu, logvar, z};
}

LossTerms vae_loss(Var x, Var x_hat, Var mu, Var logvar, double beta) {
    if (!(beta >= 0.0)) throw ContractError("vae_loss: beta must be non-negative");
    if (x.shape() != x_hat.shape()) {
        throw DimensionError("vae_loss: x " + shape_string(x.shape()) + " vs x_hat " + shape_string(x_hat.shape()));
    }
    if (mu.shape() != logvar.shape()) throw DimensionError("vae_loss: mu and logvar shapes differ");
    const double batch = static_cast<double>(mu.value().rows());
    try {
        Var recon = mean(squared_error(x_hat, x));
        // 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar) / batch
        Var inner = sub(add(mul(mu, mu), exp(logvar)), shift(logvar, 1.0));
        Var kl = scale(sum(inner), 0.5 / batch);
        return {add(recon, scale(kl, beta)), recon, kl};
    } catch (const NumericError& e) {
        throw NumericError(std::string("vae_loss: ") + e.what());
    }
}

std::vector<double> gaussian_kl_rows(const Tensor& mu, const Tensor& logvar) {
    if (mu.shape() != logvar.shape()) throw DimensionError("gaussian_kl_rows: shape mismatch");
    std::vector<double> out(mu.rows(), 0.0);
    for (std::size_t i = 0; i < mu.rows(); ++i) {
        for (std::size_t j = 0; j < mu.cols(); ++j) {
            const double m = mu(i, j);
            const double lv = logvar(i, j);
            out[i] += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
        }
    }
    return out;
}

// --- VQ --------------------------------------------------------------------

Codebook Codebook::init(std::size_t k, std::size_t dim, std::mt19937_64& rng) {
    if (k == 0 || dim == 0) throw ContractError("codebook size and dimension must be positive");
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<double> entries(k * dim);
    for (auto& v : entries) v = uniform(rng);
    return {Tensor::matrix(k, dim, std::move(entries), true)};
}

Quantized vq_quantize(const Codebook& codebook, const Tensor& z) {
    if (codebook.entries.rank() != 2 || codebook.size() == 0) throw ContractError("vq_quantize: empty codebook");
    if (z.rank() != 2 || z.cols() != codebook.dim()) {
        throw DimensionError("vq_quantize: latent " + shape_string(z.shape()) + " vs codebook " +
                             shape_string(codebook.entries.shape()));
    }
    const auto n = z.rows();
    const auto d = z.cols();
    const auto k = codebook.size();
    Quantized out{std::vector<std::size_t>(n), Tensor::zeros({n, d})};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            double dist = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = z(i, j) - codebook.entries(c, j);
                dist += diff * diff;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        out.indices[i] = best;
        for (std::size_t j = 0; j < d; ++j) out.z_q(i, j) = codebook.entries(best, j);
    }
    return out;
}

VqBottleneck vq_bottleneck(Var z, Var codebook_entries) {
    Codebook view{Tensor(codebook_entries.shape(), codebook_entries.value().values())};
    auto q = vq_quantize(view, z.value());
    Var codes = gather_rows(codebook_entries, q.indices);
    Var z_q = straight_through(z, std::move(q.z_q));
    return {std::move(q.indices), z_q, codes};
}

Var vq_loss(Var z, Var codes, double beta_commit) {
    if (z.shape() != codes.shape()) {
        throw DimensionError("vq_loss: latent " + shape_string(z.shape()) + " vs codes " + shape_string(codes.shape()));
    }
    const double batch = static_cast<double>(z.value().rows());
    Var codebook_term = sum(squared_error(detach(z), codes));
    Var commitment = sum(squared_error(z, detach(codes)));
    return scale(add(codebook_term, scale(commitment, beta_commit)), 1.0 / batch);
}

// --- Model -----------------------------------------------------------------

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Ae: return "ae";
        case ModelKind::Vae: return "vae";
        case ModelKind::Vq: return "vq";
    }
    return "ae";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "ae") return ModelKind::Ae;
    if (name == "vae") return ModelKind::Vae;
    if (name == "vq") return ModelKind::Vq;
    throw ContractError("unknown model kind '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    encoder.validate();
    decoder.validate();
    if (kind == ModelKind::Vae && encoder.layer_dims.size() < 3) {
        throw ContractError("a VAE encoder needs at least one hidden layer before its heads");
    }
    if (encoder.output_dim() != decoder.input_dim()) {
        throw DimensionError("encoder output " + std::to_string(encoder.output_dim()) + " != decoder input " +
                             std::to_string(decoder.input_dim()));
    }
    if (encoder.input_dim() != decoder.output_dim()) {
        throw DimensionError("encoder input " + std::to_string(encoder.input_dim()) + " != decoder output " +
                             std::to_string(decoder.output_dim()));
    }
    if (kind == ModelKind::Vq && codebook_size == 0) throw ContractError("codebook_size must be positive");
    if (!(beta_kl >= 0.0) || !(beta_commit >= 0.0)) throw ContractError("loss weights must be non-negative");
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Model m;
    m.config_ = config;
    std::mt19937_64 rng(seed);
    if (config.kind == ModelKind::Vae) {
        MlpConfig trunk = config.encoder;
        trunk.layer_dims.pop_back();
        m.encoder_ = Mlp::init(trunk, rng);
        const auto hidden = trunk.output_dim();
        const auto dz = config.latent_dim();
        m.head_ = VaeHead{init_linear(hidden, dz, rng), init_linear(hidden, dz, rng)};
    } else {
        m.encoder_ = Mlp::init(config.encoder, rng);
    }
    m.decoder_ = Mlp::init(config.decoder, rng);
    if (config.kind == ModelKind::Vq) m.codebook_ = Codebook::init(config.codebook_size, config.latent_dim(), rng);
    return m;
}

void Model::replace_decoder(Mlp decoder) {
    const auto& c = decoder.config();
    if (c.input_dim() != config_.latent_dim() || c.output_dim() != config_.encoder.input_dim()) {
        throw DimensionError("replacement decoder widths do not match the model");
    }
    config_.decoder = c;
    decoder_ = std::move(decoder);
}

std::vector<std::string> Model::group_names() const {
    std::vector<std::string> names{std::string(kEncoderGroup), std::string(kDecoderGroup)};
    if (codebook_) names.emplace_back(kCodebookGroup);
    return names;
}

bool Model::has_group(std::string_view name) const {
    return name == kEncoderGroup || name == kDecoderGroup || (name == kCodebookGroup && codebook_.has_value());
}

std::vector<Tensor*> Model::group(std::string_view name) {
    if (!has_group(name)) throw ContractError("model has no parameter group '" + std::string(name) + "'");
    if (name == kDecoderGroup) return decoder_.parameters();
    if (name == kCodebookGroup) return {&codebook_->entries};
    auto params = encoder_.parameters();
    if (head_) {
        for (auto* t : {&head_->mu.weight, &head_->mu.bias, &head_->logvar.weight, &head_->logvar.bias}) {
            params.push_back(t);
        }
    }
    return params;
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> all;
    for (const auto& name : group_names()) {
        auto g = group(name);
        all.insert(all.end(), g.begin(), g.end());
    }
    return all;
}

LossTerms Model::loss(Graph& g, const Tensor& batch, const ForwardOptions& options) {
    Var x = g.constant(batch);
    switch (config_.kind) {
        case ModelKind::Ae: {
            Var z = encoder_.forward(g, x);
            Var x_hat = decoder_.forward(g, z, options.decoder_dropout);
            Var recon = mean(squared_error(x_hat, x));
            Var reg = g.constant(Tensor::scalar(0.0));
            return {recon, recon, reg};
        }
        case ModelKind::Vae: {
            Var h = encoder_.forward_activated(g, x);
            Var mu = linear(g.parameter(head_->mu.weight), g.parameter(head_->mu.bias), h);
            Var logvar = linear(g.parameter(head_->logvar.weight), g.parameter(head_->logvar.bias), h);
            Tensor noise = Tensor::zeros(mu.shape());
            if (options.sample_latent) {
                std::mt19937_64 rng(options.noise_seed);
                std::normal_distribution<double> normal(0.0, 1.0);
                for (auto& v : noise.values()) v = normal(rng);
            }
            auto enc = vae_reparameterize(g, mu, logvar, noise);
            Var x_hat = decoder_.forward(g, enc.z, options.decoder_dropout);
            return vae_loss(x, x_hat, enc.mu, enc.logvar, config_.beta_kl);
        }
        case ModelKind::Vq: {
            Var z = encoder_.forward(g, x);
            auto vq = vq_bottleneck(z, g.parameter(codebook_->entries));
            Var x_hat = decoder_.forward(g, vq.z_q, options.decoder_dropout);
            Var recon = mean(squared_error(x_hat, x));
            Var reg = vq_loss(z, vq.codes, config_.beta_commit);
            return {add(recon, reg), recon, reg};
        }
    }
    throw ContractError("unknown model kind");
}

Tensor Model::encode(const Tensor& x) const {
    if (config_.kind == ModelKind::Vae) {
        Tensor h = encoder_.predict_activated(x);
        return forward_linear(head_->mu.weight, head_->mu.bias, h);
    }
    return encoder_.predict(x);
}

Tensor Model::latent(const Tensor& x) const {
    Tensor z = encode(x);
    if (codebook_) return vq_quantize(*codebook_, z).z_q;
    return z;
}

Tensor Model::decode(const Tensor& z) const { return decoder_.predict(z); }

std::uint64_t Model::checksum(std::string_view group_name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Tensor* t : group(group_name)) {
        for (double v : t->values()) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace dae
