#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rlab/errors.hpp"
#include "rlab/serialize.hpp"

using namespace rlab;
using nlohmann::json;

TEST(LossJson, RoundTrip) {
  for (const auto& l : {LossSpec::ce(), LossSpec::make(LossFamily::AUL, {.a = 2.0, .q = 0.3}),
                        LossSpec::make(LossFamily::NCE_MAE, {.mix = 0.25}), LossSpec::make(LossFamily::MSE),
                        LossSpec::make(LossFamily::CE_GLS, {.alpha_reg = -0.5})})
    EXPECT_EQ(loss_spec_from_json(to_json(l)), l);
  EXPECT_EQ(to_json(LossSpec::make(LossFamily::GCE, {.q = 0.5})), (json{{"family", "GCE"}, {"q", 0.5}}));
}

TEST(LossJson, Errors) {
  EXPECT_THROW(loss_spec_from_json(json{{"family", "XYZ"}}), ParseError);
  EXPECT_THROW(loss_spec_from_json(json{{"q", 0.5}}), ParseError);
  EXPECT_THROW(loss_spec_from_json(json{{"family", "GCE"}, {"q", "half"}}), ParseError);
  EXPECT_THROW(loss_spec_from_json(json{{"family", "GCE"}, {"beta", 1}}), ParseError);
  EXPECT_THROW(loss_spec_from_json(json{{"family", "GCE"}, {"q", 2.0}}), ConstructionError);
  EXPECT_THROW(loss_spec_from_json(json::array()), ParseError);
}

TEST(NoiseJson, RoundTrip) {
  const auto sym = NoiseSpec::symmetric(10, 0.4);
  const auto asym = NoiseSpec::circular_asymmetric(10, 0.2, 5);
  const auto mat = NoiseSpec::from_matrix({{0.7, 0.3}, {0.1, 0.9}});
  for (const auto& s : {sym, asym, mat}) {
    const auto back = noise_spec_from_json(to_json(s));
    EXPECT_EQ(back.matrix(), s.matrix());
    EXPECT_EQ(back.kind(), s.kind());
  }
  EXPECT_EQ(to_json(mat)["kind"], "matrix");
  EXPECT_EQ(noise_spec_from_json(json{{"k", 3}, {"kind", "none"}}).at(1, 1), 1.0);
  EXPECT_THROW(noise_spec_from_json(json{{"k", 3}, {"kind", "weird"}}), ParseError);
  EXPECT_THROW(noise_spec_from_json(json{{"kind", "symmetric"}}), ParseError);
  EXPECT_THROW(noise_spec_from_json(json{{"k", 3}, {"kind", "symmetric"}, {"eta", 1.5}}), DomainError);
}

TEST(TransformJson, RoundTrip) {
  for (const auto& t : {WeightTransform::identity(), WeightTransform::scale(2, 4.3), WeightTransform::shift(1, 2.6)})
    EXPECT_EQ(transform_from_json(to_json(t)), t);
  EXPECT_THROW(transform_from_json(json{{"kind", "scale"}, {"tau", 2}}), ParseError);
}

TEST(ConfigJson, RoundTrip) {
  const ModelConfig m{{20, 64, 10}, 5};
  const auto mb = model_config_from_json(to_json(m));
  EXPECT_EQ(mb.layer_sizes, m.layer_sizes);
  EXPECT_EQ(mb.init_seed, 5u);
  EXPECT_THROW(model_config_from_json(json{{"layer_sizes", {3, 4}}, {"activation", "tanh"}}), ParseError);

  TrainConfig t;
  t.epochs = 7;
  t.lr = 0.05;
  t.schedule = Schedule::Constant;
  t.weight_decay = 1e-4;
  t.shuffle_seed = 99;
  const auto tb = train_config_from_json(to_json(t));
  EXPECT_EQ(to_json(tb), to_json(t));
  EXPECT_THROW(train_config_from_json(json{{"schedule", "step"}}), ParseError);
  EXPECT_THROW(train_config_from_json(json{{"lr", -1.0}}), DomainError);
  EXPECT_EQ(train_config_from_json(json::object()).epochs, 50u);
}

TEST(JsonArg, InlineAndFile) {
  EXPECT_EQ(json_arg(R"({"a": 1})")["a"], 1);
  const auto p = std::filesystem::temp_directory_path() / "rlab_json_arg.json";
  std::ofstream(p) << R"({"b": [1, 2]})";
  EXPECT_EQ(json_arg(p.string())["b"][1], 2);
  std::filesystem::remove(p);
  EXPECT_THROW(json_arg("/nonexistent/x.json"), ParseError);
  EXPECT_THROW(json_arg("{not json"), ParseError);
}
