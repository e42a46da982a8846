#pragma once

// Softmax / class-score margin math.
//
// The margin of label y is  delta_y = s_y - log sum_{i != y} exp(s_i),  so that
// p_y = softmax(s)[y] = sigmoid(delta_y). Every loss in loss.hpp is expressed
// through it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rlab {

/// log sum_i exp(v_i) with max-shift. Throws DomainError on empty input.
double log_sum_exp(std::span<const double> v);

/// log sum_{i != skip} exp(v_i). Requires v.size() >= 2.
double log_sum_exp_excluding(std::span<const double> v, std::size_t skip);

/// Overflow-free logistic function.
double sigmoid(double x);

std::vector<double> softmax(std::span<const double> s);
std::vector<double> log_softmax(std::span<const double> s);

/// Checks the ScoreVector invariants (k >= 2, all finite); throws DomainError.
void validate_scores(std::span<const double> s);

struct MarginView {
  std::size_t label = 0;
  double margin = 0.0;                // delta_y
  double prob = 0.5;                  // p_y = sigmoid(delta_y)
  std::vector<double> grad_margin;    // d delta_y / d s, dense, L1 norm 2
};

/// Margin of `label` under scores `s`. The reduction skips index `label`
/// rather than subtracting exp(s_y) from the full sum.
MarginView margin(std::span<const double> s, std::size_t label);

/// i.i.d. N(mu, sigma^2) class scores at initialization.
struct InitMarginModel {
  std::size_t k = 10;
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const;
};

/// Second-order (log-normal moment) approximation of E[delta_y] under the
/// model. Independent of mu.
double expected_init_margin(const InitMarginModel& m);

struct MarginMoments {
  double mean = 0.0;
  double std = 0.0;
};

/// Monte Carlo estimate of E[delta_y] and its spread. Deterministic in `seed`.
MarginMoments simulate_init_margin(const InitMarginModel& m, std::size_t n_samples,
                                   std::uint64_t seed);

}  // namespace rlab
