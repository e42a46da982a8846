#pragma once

// Training-dynamics instrumentation: learning-rate weighted gradient scale
// (alpha_t), clean/noisy weight ratio (snr), margin histograms and the
// per-epoch log.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace rlab {

/// What the trainer reports for every sample of every step.
struct SampleRecord {
  double margin = 0.0;
  double weight = 0.0;  // effective weight, ||grad_s L||_1 / 2
  bool is_noisy = false;
};

/// Running alpha_t = sum_t lr_t * sum_b 2 w_b  /  sum_t lr_t |B_t|.
class AlphaAccumulator {
 public:
  /// Throws DomainError on negative weights or learning rate.
  void add(std::span<const SampleRecord> batch, double lr);
  double value() const { return denominator_ > 0 ? numerator_ / denominator_ : 0.0; }
  double numerator() const { return numerator_; }
  double denominator() const { return denominator_; }

 private:
  double numerator_ = 0.0;
  double denominator_ = 0.0;
};

/// Learning-rate weighted mean weight of clean over noisy samples.
class SnrAccumulator {
 public:
  void add(std::span<const SampleRecord> batch, double lr);
  std::optional<double> mean_clean() const;
  std::optional<double> mean_noisy() const;
  /// Absent when either group has no samples or the noisy mean is zero.
  std::optional<double> value() const;

 private:
  double clean_num_ = 0.0, clean_den_ = 0.0;
  double noisy_num_ = 0.0, noisy_den_ = 0.0;
};

struct MarginHistogram {
  static constexpr std::size_t kBins = 80;
  static constexpr double kLo = -20.0;
  static constexpr double kHi = 20.0;
  static constexpr double kWidth = (kHi - kLo) / kBins;

  std::array<std::uint64_t, kBins> counts{};
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;

  static double edge(std::size_t i) { return kLo + kWidth * static_cast<double>(i); }

  /// Bins are [lo, hi); values >= kHi count as overflow. NaN throws DomainError.
  void add(double m);
  std::uint64_t total() const;

  friend bool operator==(const MarginHistogram&, const MarginHistogram&) = default;
};

/// Histograms of the clean (mask false) and noisy (mask true) margins.
std::pair<MarginHistogram, MarginHistogram> margin_histogram(std::span<const double> margins,
                                                             const std::vector<bool>& mask);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_acc_noisy = 0.0;  // against the (possibly corrupted) training labels
  double train_acc_clean = 0.0;  // against the ground-truth training labels
  double test_acc = 0.0;
  double alpha_t = 0.0;
  std::optional<double> snr_cumulative;
  std::optional<double> mean_margin_clean;
  std::optional<double> mean_margin_noisy;
  double lr = 0.0;  // learning rate of the last step in the epoch
  MarginHistogram margin_hist_clean;
  MarginHistogram margin_hist_noisy;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct RunSummary {
  double test_acc = 0.0;
  double train_acc_noisy = 0.0;
  double train_acc_clean = 0.0;
  double best_test_acc = 0.0;
  std::size_t best_epoch = 0;
  double alpha_t = 0.0;
  std::optional<double> snr;
  double noise_rate = 0.0;  // fraction of corrupted training labels
  std::size_t steps = 0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct DynamicsLog {
  std::vector<EpochRecord> per_epoch;  // entry 0 is the initial state
  nlohmann::json config_echo;
  RunSummary final;

  friend bool operator==(const DynamicsLog&, const DynamicsLog&) = default;
};

/// Final test accuracy of the noisy run minus that of the clean run.
/// Negative means the noise cost accuracy. Throws DomainError on empty logs.
double diff(const DynamicsLog& noisy_run, const DynamicsLog& clean_run);

/// Long format: epoch,bin_lo,bin_hi,clean_count,noisy_count. Each epoch has the 80
/// regular bins followed by an underflow row (-inf, lo) and an overflow row (hi, inf).
void write_histogram_csv(std::ostream& os, const DynamicsLog& log);

struct HistogramRow {
  std::size_t epoch = 0;
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  std::uint64_t clean_count = 0;
  std::uint64_t noisy_count = 0;
};

/// Throws ParseError on malformed input.
std::vector<HistogramRow> read_histogram_csv(std::istream& is);

nlohmann::json to_json(const DynamicsLog& log);
/// Throws ParseError when required fields are missing or mistyped.
DynamicsLog dynamics_log_from_json(const nlohmann::json& j);

}  // namespace rlab
