#pragma once

// Synthetic Gaussian-blob classification data and its CSV file format:
//   f0,...,f{d-1},y_clean,y_noisy
// one row per sample, features with 17 significant digits.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace rlab {

using Label = std::size_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NoisyDataset {
  Matrix features;                 // n x d
  std::vector<Label> clean_labels;
  std::vector<Label> noisy_labels;
  std::vector<bool> noise_mask;    // clean != noisy
  std::size_t num_classes = 0;

  std::size_t size() const { return clean_labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws DomainError when shapes, label ranges or the mask disagree.
  void validate() const;
  /// Replaces the noisy labels and recomputes the mask.
  void set_noisy_labels(std::vector<Label> noisy);
  double noise_rate() const;

  friend bool operator==(const NoisyDataset& a, const NoisyDataset& b);
};

struct BlobConfig {
  std::size_t k = 10;
  std::size_t d = 20;
  std::size_t n_per_class = 500;
  double center_scale = 3.0;
  double spread = 1.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Centers ~ N(0, center_scale^2 I), points ~ N(center, spread^2 I), labels
/// balanced and interleaved by class. Noisy labels equal clean labels.
NoisyDataset make_blobs(const BlobConfig& cfg);

/// Stratified by clean label; each class contributes round(n_c * test_fraction)
/// samples to the test side. Original order is kept within each side.
std::pair<NoisyDataset, NoisyDataset> split(const NoisyDataset& ds, double test_fraction,
                                            std::uint64_t seed);

/// Rows selected by index, in the given order.
NoisyDataset subset(const NoisyDataset& ds, const std::vector<std::size_t>& rows);

void write_dataset_csv(std::ostream& os, const NoisyDataset& ds);
/// Throws ParseError (with 1-based line number) on malformed input. The class
/// count is the larger of `min_classes` and max label + 1.
NoisyDataset read_dataset_csv(std::istream& is, std::size_t min_classes = 0);

void save_dataset(const std::filesystem::path& path, const NoisyDataset& ds);
NoisyDataset load_dataset(const std::filesystem::path& path, std::size_t min_classes = 0);

}  // namespace rlab
