#pragma once

#include "wipe/nn/dense.hpp"
#include "wipe/nn/tcn.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace wipe {

inline constexpr int checkpoint_schema_version = 1;

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint document:
// {
//   "schema_version": 1,
//   "model": "<vae|traj_decoder|ft_feedback>",
//   "norm_stats_ref": "<file name of the NormStats JSON the model expects>",
//   "config": { model-specific hyperparameters },
//   "layers": [ { "name", "kind": "dense"|"tcn", "shape", "activation",
//                 "dropout", "dilation" (tcn only), "weights", "bias" } ]
// }
// Weights are flat row-major arrays; dense shape is [out, in], tcn shape is
// [out, in, kernel_len].
nlohmann::json layer_json(const std::string& name, const DenseLayer<double>& l, double dropout);
nlohmann::json layer_json(const std::string& name, const TcnLayer<double>& l, double dropout);

DenseLayer<double> dense_from_json(const nlohmann::json& j);
TcnLayer<double> tcn_from_json(const nlohmann::json& j);

// Layer entry by name; throws CheckpointError if absent.
const nlohmann::json& find_layer(const nlohmann::json& doc, const std::string& name);

nlohmann::json checkpoint_header(const std::string& model, const std::string& norm_stats_ref);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace wipe
