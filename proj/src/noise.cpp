#include "rlab/noise.hpp"

#include <cmath>
#include <random>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw DomainError("noise rate eta must be in [0, 1)");
}

}  // namespace

std::string noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Symmetric:
      return "symmetric";
    case NoiseKind::Asymmetric:
      return "asymmetric";
    default:
      return "matrix";
  }
}

NoiseSpec NoiseSpec::symmetric(std::size_t k, double eta) {
  if (k < 2) throw DomainError("symmetric noise: k must be >= 2");
  check_eta(eta);
  NoiseSpec s;
  s.k_ = k;
  s.kind_ = NoiseKind::Symmetric;
  s.eta_ = eta;
  const double off = eta / static_cast<double>(k - 1);
  s.rows_.assign(k, std::vector<double>(k, off));
  for (std::size_t y = 0; y < k; ++y) s.rows_[y][y] = 1.0 - eta;
  return s;
}

NoiseSpec NoiseSpec::circular_asymmetric(std::size_t k, double eta, std::size_t group_size) {
  if (k < 2) throw DomainError("asymmetric noise: k must be >= 2");
  check_eta(eta);
  if (group_size < 2 || k % group_size != 0)
    throw DomainError("asymmetric noise: group_size " + std::to_string(group_size) +
                      " must be >= 2 and divide k=" + std::to_string(k));
  NoiseSpec s;
  s.k_ = k;
  s.kind_ = NoiseKind::Asymmetric;
  s.eta_ = eta;
  s.group_size_ = group_size;
  s.rows_.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t y = 0; y < k; ++y) {
    const std::size_t base = y - y % group_size;
    const std::size_t next = base + (y - base + 1) % group_size;
    s.rows_[y][y] = 1.0 - eta;
    s.rows_[y][next] += eta;
  }
  return s;
}

NoiseSpec NoiseSpec::from_matrix(std::vector<std::vector<double>> rows) {
  const std::size_t k = rows.size();
  if (k < 2) throw DomainError("noise matrix: k must be >= 2");
  for (std::size_t y = 0; y < k; ++y) {
    if (rows[y].size() != k) throw DomainError("noise matrix: row " + std::to_string(y) + " length");
    double sum = 0.0;
    for (double v : rows[y]) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("noise matrix: entries must be in [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw DomainError("noise matrix: row " + std::to_string(y) + " does not sum to 1");
  }
  NoiseSpec s;
  s.k_ = k;
  s.kind_ = NoiseKind::Matrix;
  s.rows_ = std::move(rows);
  double off = 0.0;
  for (std::size_t y = 0; y < k; ++y) off += 1.0 - s.rows_[y][y];
  s.eta_ = off / static_cast<double>(k);
  return s;
}

NoisyLabels apply_noise(const std::vector<Label>& labels, const NoiseSpec& spec,
                        std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NoisyLabels out;
  out.noisy.resize(labels.size());
  out.mask.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label y = labels[i];
    if (y >= spec.k()) throw DomainError("apply_noise: label out of range");
    const auto& row = spec.matrix()[y];
    // Inverse CDF; falls back to the last supported class on round-off.
    const double u = unit(gen);
    double acc = 0.0;
    Label pick = y;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] <= 0.0) continue;
      pick = j;
      acc += row[j];
      if (u < acc) break;
    }
    out.noisy[i] = pick;
    out.mask[i] = pick != y;
  }
  return out;
}

NoisyDataset corrupt(NoisyDataset ds, const NoiseSpec& spec, std::uint64_t seed) {
  if (spec.k() != ds.num_classes) throw DomainError("corrupt: noise spec k does not match dataset");
  auto nl = apply_noise(ds.clean_labels, spec, seed);
  ds.set_noisy_labels(std::move(nl.noisy));
  return ds;
}

EmpiricalTransition empirical_transition(const std::vector<Label>& clean,
                                         const std::vector<Label>& noisy, std::size_t k) {
  if (clean.size() != noisy.size()) throw DomainError("empirical_transition: length mismatch");
  if (k == 0) throw DomainError("empirical_transition: k must be >= 1");
  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i] >= k || noisy[i] >= k) throw DomainError("empirical_transition: label out of range");
    counts[clean[i]][noisy[i]] += 1.0;
  }
  EmpiricalTransition t;
  t.unsupported.assign(k, false);
  for (std::size_t y = 0; y < k; ++y) {
    double total = 0.0;
    for (double c : counts[y]) total += c;
    if (total == 0.0) {
      t.unsupported[y] = true;
      counts[y].assign(k, 1.0 / static_cast<double>(k));
    } else {
      for (double& c : counts[y]) c /= total;
    }
  }
  t.matrix = std::move(counts);
  return t;
}

}  // namespace rlab
