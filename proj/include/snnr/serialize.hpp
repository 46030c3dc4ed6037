#pragma once

// JSON forms of the configuration types and the checkpoint container.
//
// Checkpoint layout (format "snnr-checkpoint", version 1):
//   {
//     "format": "snnr-checkpoint", "version": 1,
//     "network": <NetworkConfig>,
//     "params": [ {"weight_shape": [...], "weight": [...], "bias": [...]}, ... ],
//     "clean_accuracy": <number or null>, "eval_seed": <uint>,
//     "meta": { free-form provenance }
//   }
// `params` has one entry per layer; pooling layers store {}. Weights are flat
// row-major arrays whose length matches the shape implied by the network.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "snnr/attacks.hpp"
#include "snnr/snn.hpp"
#include "snnr/training.hpp"

namespace snnr {

using Json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "snnr-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Throws ConfigError if `j` is not an object or holds a key outside `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context);

Json to_json(const LifParams& p);
Json to_json(const LayerSpec& s);
Json to_json(const NetworkConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const AttackConfig& c);

// Parsers fill in defaults for absent keys and reject unknown ones.
LifParams lif_params_from_json(const Json& j);
LayerSpec layer_spec_from_json(const Json& j);
NetworkConfig network_config_from_json(const Json& j);
TrainConfig train_config_from_json(const Json& j);
AttackConfig attack_config_from_json(const Json& j);

struct Checkpoint {
    Network net;
    std::optional<double> clean_accuracy;
    std::uint64_t eval_seed = 0;
    Json meta = Json::object();
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace snnr
