#include "dae/checkpoint.hpp"

#include <fstream>

#include "dae/errors.hpp"
#include "dae/io.hpp"

namespace dae {
namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>(), true);
}

json linear_to_json(const Linear& l) { return json{{"weight", tensor_to_json(l.weight)}, {"bias", tensor_to_json(l.bias)}}; }

Linear linear_from_json(const json& j) { return {tensor_from_json(j.at("weight")), tensor_from_json(j.at("bias"))}; }

json mlp_to_json(const Mlp& m) {
    json layers = json::array();
    for (const auto& l : m.layers()) layers.push_back(linear_to_json(l));
    return json{{"config", mlp_config_to_json(m.config())}, {"layers", layers}};
}

Mlp mlp_from_json(const json& j) {
    std::vector<Linear> layers;
    for (const auto& l : j.at("layers")) layers.push_back(linear_from_json(l));
    return Mlp(mlp_config_from_json(j.at("config")), std::move(layers));
}

}  // namespace

json mlp_config_to_json(const MlpConfig& config) {
    return json{{"layer_dims", config.layer_dims}, {"activation", activation_name(config.hidden)}};
}

MlpConfig mlp_config_from_json(const json& j) {
    MlpConfig c;
    c.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    c.hidden = parse_activation(j.value("activation", std::string("tanh")));
    return c;
}

json model_config_to_json(const ModelConfig& config) {
    return json{{"kind", model_kind_name(config.kind)},
                {"encoder", mlp_config_to_json(config.encoder)},
                {"decoder", mlp_config_to_json(config.decoder)},
                {"codebook_size", config.codebook_size},
                {"beta_kl", config.beta_kl},
                {"beta_commit", config.beta_commit}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.encoder = mlp_config_from_json(j.at("encoder"));
    c.decoder = mlp_config_from_json(j.at("decoder"));
    c.codebook_size = j.at("codebook_size").get<std::size_t>();
    c.beta_kl = j.at("beta_kl").get<double>();
    c.beta_commit = j.at("beta_commit").get<double>();
    return c;
}

json model_to_json(const Model& model) {
    json j{{"format", "dae-checkpoint-v1"},
           {"config", model_config_to_json(model.config())},
           {"encoder", mlp_to_json(model.encoder())},
           {"decoder", mlp_to_json(model.decoder())}};
    if (model.head()) j["vae_head"] = {{"mu", linear_to_json(model.head()->mu)}, {"logvar", linear_to_json(model.head()->logvar)}};
    if (model.codebook()) j["codebook"] = tensor_to_json(model.codebook()->entries);
    return j;
}

Model model_from_json(const json& j) {
    try {
        auto config = model_config_from_json(j.at("config"));
        Model m = Model::init(config, 0);
        m.encoder() = mlp_from_json(j.at("encoder"));
        m.decoder() = mlp_from_json(j.at("decoder"));
        if (config.kind == ModelKind::Vae) {
            const auto& h = j.at("vae_head");
            m.head() = VaeHead{linear_from_json(h.at("mu")), linear_from_json(h.at("logvar"))};
        }
        if (config.kind == ModelKind::Vq) m.codebook() = Codebook{tensor_from_json(j.at("codebook"))};
        return m;
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint", e.what());
    }
}

void save_model(const Model& model, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(model).dump(1) + "\n");
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("checkpoint", "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint", e.what());
    }
    return model_from_json(j);
}

}  // namespace dae
