#include "rlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/margin.hpp"
#include "rlab/serialize.hpp"

namespace rlab {

void ModelConfig::validate() const {
  if (layer_sizes.size() < 2) throw DomainError("model: need at least input and output sizes");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw DomainError("model: layer sizes must be positive");
  if (layer_sizes.back() < 2) throw DomainError("model: need at least two classes");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw DomainError("train: batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("train: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("train: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw DomainError("train: weight_decay must be >= 0");
}

TrainState init_model(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 gen(cfg.init_seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  TrainState st;
  for (std::size_t l = 0; l + 1 < cfg.layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(cfg.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(cfg.layer_sizes[l + 1]);
    Layer layer{Matrix(out, in), Eigen::VectorXd::Zero(out)};
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = std_dev * unit(gen);
    st.velocity.push_back({Matrix::Zero(out, in), Eigen::VectorXd::Zero(out)});
    st.layers.push_back(std::move(layer));
  }

  // Calibrate the score scale on standard-normal inputs.
  constexpr Eigen::Index kProbe = 4096;
  Matrix probe(kProbe, static_cast<Eigen::Index>(cfg.layer_sizes.front()));
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = unit(gen);
  const Matrix scores = forward(st, probe);
  const double mean = scores.mean();
  const double var = (scores.array() - mean).square().mean();
  if (var > 0.0) st.layers.back().weight /= std::sqrt(var);
  return st;
}

namespace {

struct Activations {
  std::vector<Matrix> inputs;  // input to each layer (post-ReLU of the previous one)
  Matrix scores;
};

Activations forward_cached(const TrainState& st, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != st.input_dim())
    throw DomainError("forward: feature dimension " + std::to_string(x.cols()) +
                      " does not match model input " + std::to_string(st.input_dim()));
  Activations act;
  act.inputs.reserve(st.layers.size());
  Matrix h = x;
  for (std::size_t l = 0; l < st.layers.size(); ++l) {
    const auto& layer = st.layers[l];
    Matrix z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    act.inputs.push_back(std::move(h));
    if (l + 1 < st.layers.size()) {
      h = z.cwiseMax(0.0);
    } else {
      act.scores = std::move(z);
    }
  }
  return act;
}

std::size_t argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index best = 0;
  m.row(r).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

}  // namespace

Matrix forward(const TrainState& state, const Matrix& features) {
  return forward_cached(state, features).scores;
}

double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (cfg.schedule == Schedule::Constant || total_steps == 0) return cfg.lr;
  const double t = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

Objective::Objective(LossSpec loss, WeightTransform transform)
    : loss_(std::move(loss)), transform_(transform) {
  if (!loss_.standard_form() && !transform_.is_identity())
    throw DomainError("weight transform '" + transform_.describe() + "' requires a standard-form loss, got " +
                      std::string(family_name(loss_.family())));
  if (loss_.standard_form()) weight_scale_ = normalize_to_unit_max(loss_).scale;
}

SampleRecord Objective::score_gradient(std::span<const double> scores, Label y, bool is_noisy,
                                       std::span<double> grad_out) const {
  SampleRecord rec;
  rec.is_noisy = is_noisy;
  if (loss_.standard_form()) {
    const MarginView mv = margin(scores, y);
    const double w = weight_scale_ * transformed_weight(loss_, transform_, mv.margin);
    for (std::size_t j = 0; j < scores.size(); ++j) grad_out[j] = -w * mv.grad_margin[j];
    rec.margin = mv.margin;
    rec.weight = w;
    return rec;
  }
  const LossEval ev = eval(loss_, scores, y);
  double l1 = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    grad_out[j] = ev.grad[j];
    l1 += std::abs(ev.grad[j]);
  }
  rec.margin = ev.margin;
  rec.weight = 0.5 * l1;
  return rec;
}

std::vector<Layer> parameter_gradients(const TrainState& state, const Matrix& features,
                                       std::span<const Label> labels, const Objective& obj,
                                       std::vector<SampleRecord>* records,
                                       const std::vector<bool>* noisy) {
  const auto batch = static_cast<Eigen::Index>(labels.size());
  if (batch == 0 || features.rows() != batch)
    throw DomainError("parameter_gradients: batch must be nonempty and match features");
  Activations act = forward_cached(state, features);
  const auto k = act.scores.cols();

  Matrix g(batch, k);
  if (records) records->clear();
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (labels[b] >= static_cast<std::size_t>(k)) throw DomainError("label out of range");
    std::span<const double> s(act.scores.row(b).data(), static_cast<std::size_t>(k));
    std::span<double> out(g.row(b).data(), static_cast<std::size_t>(k));
    const bool is_noisy = noisy ? (*noisy)[b] : false;
    const SampleRecord r = obj.score_gradient(s, labels[b], is_noisy, out);
    if (records) records->push_back(r);
  }
  g /= static_cast<double>(batch);

  std::vector<Layer> grads(state.layers.size());
  for (std::size_t l = state.layers.size(); l-- > 0;) {
    const Matrix& in = act.inputs[l];
    grads[l].weight = g.transpose() * in;
    grads[l].bias = g.colwise().sum().transpose();
    if (l > 0) {
      Matrix upstream = g * state.layers[l].weight;
      // ReLU mask: the input to layer l is max(z, 0), so it is positive exactly where z > 0.
      g = (in.array() > 0.0).select(upstream, 0.0);
    }
  }
  return grads;
}

std::vector<SampleRecord> train_step(TrainState& state, const Matrix& features,
                                     std::span<const Label> labels,
                                     const std::vector<bool>& noisy, const Objective& obj,
                                     double lr, const TrainConfig& cfg) {
  std::vector<SampleRecord> records;
  const auto grads = parameter_gradients(state, features, labels, obj, &records, &noisy);
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    auto& p = state.layers[l];
    auto& v = state.velocity[l];
    v.weight = cfg.momentum * v.weight + grads[l].weight + cfg.weight_decay * p.weight;
    v.bias = cfg.momentum * v.bias + grads[l].bias + cfg.weight_decay * p.bias;
    p.weight -= lr * v.weight;
    p.bias -= lr * v.bias;
  }
  ++state.step;
  return records;
}

EpochRecord evaluate(const TrainState& state, const NoisyDataset& train, const NoisyDataset& test,
                     std::size_t epoch) {
  EpochRecord rec;
  rec.epoch = epoch;
  const Matrix scores = forward(state, train.features);
  const auto k = static_cast<std::size_t>(scores.cols());
  std::vector<double> margins(train.size());
  std::size_t hit_noisy = 0, hit_clean = 0;
  double sum_clean = 0.0, sum_noisy = 0.0;
  std::size_t n_noisy = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::size_t pred = argmax_row(scores, r);
    hit_noisy += pred == train.noisy_labels[i];
    hit_clean += pred == train.clean_labels[i];
    std::span<const double> s(scores.row(r).data(), k);
    margins[i] = s[train.noisy_labels[i]] - log_sum_exp_excluding(s, train.noisy_labels[i]);
    if (train.noise_mask[i]) {
      sum_noisy += margins[i];
      ++n_noisy;
    } else {
      sum_clean += margins[i];
    }
  }
  const std::size_t n_clean = train.size() - n_noisy;
  const double n = static_cast<double>(std::max<std::size_t>(train.size(), 1));
  rec.train_acc_noisy = static_cast<double>(hit_noisy) / n;
  rec.train_acc_clean = static_cast<double>(hit_clean) / n;
  if (n_clean) rec.mean_margin_clean = sum_clean / static_cast<double>(n_clean);
  if (n_noisy) rec.mean_margin_noisy = sum_noisy / static_cast<double>(n_noisy);
  std::tie(rec.margin_hist_clean, rec.margin_hist_noisy) = margin_histogram(margins, train.noise_mask);

  if (test.size() > 0) {
    const Matrix ts = forward(state, test.features);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
      hit += argmax_row(ts, static_cast<Eigen::Index>(i)) == test.clean_labels[i];
    rec.test_acc = static_cast<double>(hit) / static_cast<double>(test.size());
  }
  return rec;
}

DynamicsLog run(const NoisyDataset& train, const NoisyDataset& test, const Objective& obj,
                const ModelConfig& model_cfg, const TrainConfig& cfg, const TrainHooks& hooks) {
  model_cfg.validate();
  cfg.validate();
  train.validate();
  if (train.size() == 0) throw DomainError("run: empty training set");
  if (model_cfg.layer_sizes.front() != train.dim())
    throw DomainError("run: model input size does not match feature dimension");
  if (model_cfg.layer_sizes.back() != train.num_classes)
    throw DomainError("run: model output size does not match class count");

  DynamicsLog log;
  log.config_echo = {{"loss", to_json(obj.loss())},
                     {"transform", to_json(obj.transform())},
                     {"model", to_json(model_cfg)},
                     {"train", to_json(cfg)},
                     {"train_size", train.size()},
                     {"test_size", test.size()}};

  TrainState state = init_model(model_cfg);
  AlphaAccumulator alpha;
  SnrAccumulator snr;

  const std::size_t n = train.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = batches * cfg.epochs;

  auto finish_epoch = [&](EpochRecord rec, double lr) {
    rec.alpha_t = alpha.value();
    rec.snr_cumulative = snr.value();
    rec.lr = lr;
    if (hooks.on_epoch) hooks.on_epoch(rec);
    log.per_epoch.push_back(std::move(rec));
  };
  finish_epoch(evaluate(state, train, test, 0), learning_rate(cfg, 0, total));

  std::mt19937_64 shuffler(cfg.shuffle_seed);
  std::vector<std::size_t> order(n);
  Matrix xb;
  std::vector<Label> yb;
  std::vector<bool> nb;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffler);
    double lr = cfg.lr;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      xb.resize(static_cast<Eigen::Index>(len), train.features.cols());
      yb.resize(len);
      nb.resize(len);
      for (std::size_t b = 0; b < len; ++b) {
        const std::size_t i = order[start + b];
        xb.row(static_cast<Eigen::Index>(b)) = train.features.row(static_cast<Eigen::Index>(i));
        yb[b] = train.noisy_labels[i];
        nb[b] = train.noise_mask[i];
      }
      lr = learning_rate(cfg, state.step + 1, total);
      const auto records = train_step(state, xb, yb, nb, obj, lr, cfg);
      alpha.add(records, lr);
      snr.add(records, lr);
      if (hooks.on_step) hooks.on_step(state.step, lr, records);
    }
    finish_epoch(evaluate(state, train, test, epoch), lr);
  }

  const EpochRecord& last = log.per_epoch.back();
  auto& f = log.final;
  f.test_acc = last.test_acc;
  f.train_acc_noisy = last.train_acc_noisy;
  f.train_acc_clean = last.train_acc_clean;
  f.alpha_t = alpha.value();
  f.snr = snr.value();
  f.noise_rate = train.noise_rate();
  f.steps = state.step;
  for (const auto& e : log.per_epoch) {
    if (e.epoch == 0 || e.test_acc > f.best_test_acc) {
      f.best_test_acc = e.test_acc;
      f.best_epoch = e.epoch;
    }
  }
  return log;
}

}  // namespace rlab
