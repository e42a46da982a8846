#pragma once

// A small ReLU MLP with analytic backprop and SGD (momentum, weight decay,
// constant or cosine schedule).
//
// Standard-form losses are trained through the factorized gradient: the sample
// weight is evaluated from the current margin, frozen, normalized to unit max,
// and multiplied onto -grad delta_y. Regularized losses use their exact score
// gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rlab/curriculum.hpp"
#include "rlab/dataset.hpp"
#include "rlab/dynamics.hpp"
#include "rlab/loss.hpp"

namespace rlab {

struct ModelConfig {
  std::vector<std::size_t> layer_sizes;  // [d, h1, ..., k]
  std::uint64_t init_seed = 0;

  void validate() const;
};

enum class Schedule { Constant, Cosine };

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  Schedule schedule = Schedule::Cosine;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct Layer {
  Matrix weight;           // out x in
  Eigen::VectorXd bias;    // out
};

struct TrainState {
  std::vector<Layer> layers;
  std::vector<Layer> velocity;  // momentum buffers, same shapes
  std::size_t step = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(layers.back().weight.rows()); }
};

/// He-normal weights, zero biases; the last layer is rescaled so scores on
/// standard-normal inputs have unit standard deviation.
TrainState init_model(const ModelConfig& cfg);

/// Scores for a batch (rows are samples). Throws DomainError on a feature
/// dimension mismatch.
Matrix forward(const TrainState& state, const Matrix& features);

/// Learning rate for 1-based `step` of `total_steps`:
/// constant lr, or lr (1 + cos(pi step / total)) / 2.
double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t total_steps);

/// Loss plus weight transform, with the unit-max scale precomputed.
class Objective {
 public:
  /// Throws DomainError when a non-identity transform is paired with a
  /// regularized family.
  Objective(LossSpec loss, WeightTransform transform = {});

  const LossSpec& loss() const { return loss_; }
  const WeightTransform& transform() const { return transform_; }
  /// 1 / max w for standard-form families, 1 otherwise.
  double weight_scale() const { return weight_scale_; }

  /// d(objective)/d scores for one sample; record.weight is ||grad||_1 / 2.
  SampleRecord score_gradient(std::span<const double> scores, Label y, bool is_noisy,
                              std::span<double> grad_out) const;

 private:
  LossSpec loss_;
  WeightTransform transform_;
  double weight_scale_ = 1.0;
};

/// Gradient of the batch-mean objective w.r.t. every parameter (no weight decay).
std::vector<Layer> parameter_gradients(const TrainState& state, const Matrix& features,
                                       std::span<const Label> labels, const Objective& obj,
                                       std::vector<SampleRecord>* records = nullptr,
                                       const std::vector<bool>* noisy = nullptr);

/// One SGD step. Returns the per-sample records of the batch.
std::vector<SampleRecord> train_step(TrainState& state, const Matrix& features,
                                     std::span<const Label> labels,
                                     const std::vector<bool>& noisy, const Objective& obj,
                                     double lr, const TrainConfig& cfg);

struct TrainHooks {
  std::function<void(std::size_t step, double lr, std::span<const SampleRecord>)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Evaluates the model on the training set (margins against noisy labels)
/// and the test set (clean labels) and fills everything but the accumulators.
EpochRecord evaluate(const TrainState& state, const NoisyDataset& train, const NoisyDataset& test,
                     std::size_t epoch);

/// Full training run. Epoch 0 of the log is the initial model.
DynamicsLog run(const NoisyDataset& train, const NoisyDataset& test, const Objective& obj,
                const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                const TrainHooks& hooks = {});

}  // namespace rlab
