#include "rlab/serialize.hpp"

#include <fstream>
#include <sstream>

#include "rlab/errors.hpp"

namespace rlab {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(std::string(what) + ": unknown key '" + key + "'");
  }
}

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw ParseError(std::string("key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const LossSpec& loss) {
  json j{{"family", std::string(family_name(loss.family()))}};
  const auto& p = loss.params();
  if (p.a) j["a"] = *p.a;
  if (p.q) j["q"] = *p.q;
  if (p.mix) j["mix"] = *p.mix;
  if (p.alpha_reg) j["alpha_reg"] = *p.alpha_reg;
  return j;
}

LossSpec loss_spec_from_json(const json& j) {
  require_object(j, "loss");
  reject_unknown(j, {"family", "a", "q", "mix", "alpha_reg"}, "loss");
  const std::string name = guarded("loss", [&] { return j.at("family").get<std::string>(); });
  const auto family = parse_family(name);
  if (!family) throw ParseError("loss: unknown family '" + name + "'");
  LossParams p;
  p.a = opt_number(j, "a");
  p.q = opt_number(j, "q");
  p.mix = opt_number(j, "mix");
  p.alpha_reg = opt_number(j, "alpha_reg");
  return LossSpec::make(*family, p);
}

json to_json(const NoiseSpec& noise) {
  if (noise.kind() == NoiseKind::Matrix)
    return json{{"k", noise.k()}, {"kind", "matrix"}, {"rows", noise.matrix()}};
  return json{{"k", noise.k()},
              {"kind", noise_kind_name(noise.kind())},
              {"eta", noise.eta()},
              {"group_size", noise.group_size()}};
}

NoiseSpec noise_spec_from_json(const json& j) {
  require_object(j, "noise");
  return guarded("noise", [&] {
    const auto k = j.at("k").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "matrix") {
      auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
      if (rows.size() != k) throw ParseError("noise: rows must have k entries");
      return NoiseSpec::from_matrix(std::move(rows));
    }
    const double eta = j.value("eta", 0.0);
    if (kind == "symmetric") return NoiseSpec::symmetric(k, eta);
    if (kind == "asymmetric")
      return NoiseSpec::circular_asymmetric(k, eta, j.value("group_size", k));
    if (kind == "none") return NoiseSpec::none(k);
    throw ParseError("noise: unknown kind '" + kind + "'");
  });
}

json to_json(const WeightTransform& t) {
  if (t.is_identity()) return json{{"kind", "identity"}};
  return json{{"kind", transform_kind_name(t.kind())},
              {"tau", t.tau()},
              {"expected_margin_abs", t.expected_margin_abs()}};
}

WeightTransform transform_from_json(const json& j) {
  require_object(j, "transform");
  return guarded("transform", [&] {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "identity") return WeightTransform::identity();
    const double tau = j.at("tau").get<double>();
    const double e = j.at("expected_margin_abs").get<double>();
    if (kind == "shift") return WeightTransform::shift(tau, e);
    if (kind == "scale") return WeightTransform::scale(tau, e);
    throw ParseError("transform: unknown kind '" + kind + "'");
  });
}

json to_json(const ModelConfig& m) {
  return json{{"layer_sizes", m.layer_sizes}, {"activation", "relu"}, {"init_seed", m.init_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  require_object(j, "model");
  return guarded("model", [&] {
    ModelConfig m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (j.value("activation", std::string("relu")) != "relu")
      throw ParseError("model: only relu activation is supported");
    m.init_seed = j.value("init_seed", std::uint64_t{0});
    m.validate();
    return m;
  });
}

json to_json(const TrainConfig& t) {
  return json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"lr", t.lr},
              {"momentum", t.momentum},
              {"weight_decay", t.weight_decay},
              {"schedule", t.schedule == Schedule::Cosine ? "cosine" : "constant"},
              {"shuffle_seed", t.shuffle_seed}};
}

TrainConfig train_config_from_json(const json& j) {
  require_object(j, "train");
  return guarded("train", [&] {
    TrainConfig t;
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.lr = j.value("lr", t.lr);
    t.momentum = j.value("momentum", t.momentum);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    const auto sched = j.value("schedule", std::string("cosine"));
    if (sched == "cosine") {
      t.schedule = Schedule::Cosine;
    } else if (sched == "constant") {
      t.schedule = Schedule::Constant;
    } else {
      throw ParseError("train: unknown schedule '" + sched + "'");
    }
    t.shuffle_seed = j.value("shuffle_seed", t.shuffle_seed);
    t.validate();
    return t;
  });
}

json json_arg(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  std::string body;
  if (first != std::string::npos && text[first] == '{') {
    body = text;
  } else {
    std::ifstream is(text);
    if (!is) throw ParseError("cannot open '" + text + "' (and it is not inline JSON)");
    std::ostringstream ss;
    ss << is.rdbuf();
    body = ss.str();
  }
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace rlab
