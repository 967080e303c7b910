#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "dae/models.hpp"

namespace dae {

nlohmann::json mlp_config_to_json(const MlpConfig& config);
MlpConfig mlp_config_from_json(const nlohmann::json& j);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Config echo plus flat per-layer parameter arrays. Doubles are written in
/// shortest round-trip decimal form, so load(save(m)) is bit-exact.
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace dae
