#pragma once

// Finite-difference verification of every loss family's analytic score
// gradient, plus the factorization  grad L == -w * grad delta_y  for
// standard-form families.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rlab/loss.hpp"

namespace rlab {

/// Central-difference gradient of f at s.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> s, double h = 1e-5);

struct GradCheckOptions {
  std::vector<LossSpec> losses;
  std::size_t trials = 50;                // random (s, y) per class count
  std::uint64_t seed = 0;
  std::vector<std::size_t> class_counts{2, 10, 100};
  double score_std = 3.0;
  double h = 1e-5;
  double fd_tolerance = 1e-5;             // relative, floor 1
  double factorization_tolerance = 1e-10; // relative, floor 1
};

struct GradCheckResult {
  LossSpec loss;
  std::size_t cases = 0;
  double max_fd_error = 0.0;
  std::optional<double> max_factorization_error;
  bool passed = false;
};

using GradientFn = std::function<LossEval(const LossSpec&, std::span<const double>, std::size_t)>;

/// One representative spec per family.
std::vector<LossSpec> default_gradcheck_losses();

/// `analytic` defaults to rlab::eval; tests substitute faulty versions.
std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& opts,
                                           const GradientFn& analytic = {});

}  // namespace rlab
