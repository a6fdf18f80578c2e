// Parameter checkpoints: JSON document with a format tag, version, network
// dimensions and every tensor with its shape. Doubles are written in
// shortest round-trip form, so save/load is bit-exact.
#ifndef ACCORD_CHECKPOINT_HPP
#define ACCORD_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "accord/nn.hpp"

namespace accord {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const nn::NetParams<double>& params);
nn::NetParams<double> checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const nn::NetParams<double>& params);
nn::NetParams<double> load_checkpoint(const std::filesystem::path& path);

}  // namespace accord

#endif  // ACCORD_CHECKPOINT_HPP
