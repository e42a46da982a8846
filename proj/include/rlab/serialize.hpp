#pragma once

// JSON forms of the configuration types.
//
//   loss       {"family": "GCE", "q": 0.5}            keys: family, a, q, mix, alpha_reg
//   noise      {"k": 10, "kind": "symmetric", "eta": 0.4, "group_size": 0}
//              {"k": 3, "kind": "matrix", "rows": [[...], ...]}
//   transform  {"kind": "scale", "tau": 2.0, "expected_margin_abs": 4.37}
//   model      {"layer_sizes": [20, 64, 10], "activation": "relu", "init_seed": 1}
//   train      {"epochs", "batch_size", "lr", "momentum", "weight_decay",
//               "schedule": "constant"|"cosine", "shuffle_seed"}

#include <string>

#include "json.hpp"
#include "rlab/curriculum.hpp"
#include "rlab/loss.hpp"
#include "rlab/noise.hpp"
#include "rlab/trainer.hpp"

namespace rlab {

nlohmann::json to_json(const LossSpec& loss);
/// Throws ParseError on unknown families or mistyped keys and
/// ConstructionError on constraint violations.
LossSpec loss_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NoiseSpec& noise);
NoiseSpec noise_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WeightTransform& t);
WeightTransform transform_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& t);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Parses `text` as JSON, or, when it does not start with '{', reads the
/// named file. Throws ParseError.
nlohmann::json json_arg(const std::string& text);

}  // namespace rlab
