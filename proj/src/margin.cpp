#include "rlab/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rlab/errors.hpp"

namespace rlab {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw DomainError("log_sum_exp: empty vector");
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double log_sum_exp_excluding(std::span<const double> v, std::size_t skip) {
  if (v.size() < 2) throw DomainError("log_sum_exp_excluding: need at least two entries");
  if (skip >= v.size()) throw DomainError("log_sum_exp_excluding: index out of range");
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (i != skip) hi = std::max(hi, v[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (i != skip) acc += std::exp(v[i] - hi);
  return hi + std::log(acc);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> log_softmax(std::span<const double> s) {
  const double lse = log_sum_exp(s);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> s) {
  auto out = log_softmax(s);
  for (double& x : out) x = std::exp(x);
  return out;
}

void validate_scores(std::span<const double> s) {
  if (s.size() < 2) throw DomainError("score vector needs k >= 2 classes");
  for (double x : s)
    if (!std::isfinite(x)) throw DomainError("score vector has a non-finite entry");
}

MarginView margin(std::span<const double> s, std::size_t label) {
  validate_scores(s);
  if (label >= s.size())
    throw DomainError("margin: label " + std::to_string(label) + " out of range for k=" +
                      std::to_string(s.size()));
  const double rest = log_sum_exp_excluding(s, label);
  MarginView mv;
  mv.label = label;
  mv.margin = s[label] - rest;
  mv.prob = sigmoid(mv.margin);
  // d delta_y / d s_j = -exp(s_j - rest) = -p_j / (1 - p_y) for j != y.
  mv.grad_margin.resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    mv.grad_margin[j] = (j == label) ? 1.0 : -std::exp(s[j] - rest);
  return mv;
}

void InitMarginModel::validate() const {
  if (k < 2) throw DomainError("InitMarginModel: k must be >= 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("InitMarginModel: sigma must be > 0");
  if (!std::isfinite(mu)) throw DomainError("InitMarginModel: mu must be finite");
}

double expected_init_margin(const InitMarginModel& m) {
  m.validate();
  const double km1 = static_cast<double>(m.k - 1);
  const double var = m.sigma * m.sigma;
  // mu enters as  mu - log E[sum e^{s_i}]  and cancels against the log-normal mean.
  return -std::log(km1) - var / 2.0 + std::expm1(var) / (2.0 * km1);
}

MarginMoments simulate_init_margin(const InitMarginModel& m, std::size_t n_samples,
                                   std::uint64_t seed) {
  m.validate();
  if (n_samples == 0) throw DomainError("simulate_init_margin: n_samples must be >= 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> draw(m.mu, m.sigma);
  std::vector<double> s(m.k);
  // Welford keeps the variance stable for n up to 1e7.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t n = 1; n <= n_samples; ++n) {
    for (double& x : s) x = draw(gen);
    const double d = s[0] - log_sum_exp_excluding(s, 0);
    const double step = d - mean;
    mean += step / static_cast<double>(n);
    m2 += step * (d - mean);
  }
  const double var = n_samples > 1 ? m2 / static_cast<double>(n_samples - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace rlab
