#pragma once

// Label-noise models: T[y][i] = P(noisy = i | clean = y).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rlab/dataset.hpp"

namespace rlab {

enum class NoiseKind { Symmetric, Asymmetric, Matrix };

class NoiseSpec {
 public:
  /// Diagonal 1 - eta, off-diagonal eta / (k - 1).
  static NoiseSpec symmetric(std::size_t k, double eta);
  /// Each consecutive group of `group_size` classes is a ring; class c moves to
  /// the next class in its ring with probability eta.
  static NoiseSpec circular_asymmetric(std::size_t k, double eta, std::size_t group_size);
  /// Rows must be length k, entries in [0, 1], sums within 1e-12 of one.
  static NoiseSpec from_matrix(std::vector<std::vector<double>> rows);
  static NoiseSpec none(std::size_t k) { return symmetric(k, 0.0); }

  std::size_t k() const { return k_; }
  NoiseKind kind() const { return kind_; }
  double eta() const { return eta_; }
  std::size_t group_size() const { return group_size_; }
  const std::vector<std::vector<double>>& matrix() const { return rows_; }
  double at(std::size_t clean, std::size_t noisy) const { return rows_[clean][noisy]; }

 private:
  NoiseSpec() = default;
  std::size_t k_ = 0;
  NoiseKind kind_ = NoiseKind::Matrix;
  double eta_ = 0.0;
  std::size_t group_size_ = 0;
  std::vector<std::vector<double>> rows_;
};

std::string noise_kind_name(NoiseKind k);

struct NoisyLabels {
  std::vector<Label> noisy;
  std::vector<bool> mask;
};

/// Resamples every label independently from its row. Deterministic in `seed`.
NoisyLabels apply_noise(const std::vector<Label>& labels, const NoiseSpec& spec,
                        std::uint64_t seed);

/// Applies noise to a dataset's clean labels, replacing its noisy labels.
NoisyDataset corrupt(NoisyDataset ds, const NoiseSpec& spec, std::uint64_t seed);

struct EmpiricalTransition {
  std::vector<std::vector<double>> matrix;
  std::vector<bool> unsupported;  // rows with no clean samples (left uniform)
};

EmpiricalTransition empirical_transition(const std::vector<Label>& clean,
                                         const std::vector<Label>& noisy, std::size_t k);

}  // namespace rlab
