#include "rlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "rlab/errors.hpp"

namespace rlab {

void NoisyDataset::validate() const {
  const std::size_t n = clean_labels.size();
  if (static_cast<std::size_t>(features.rows()) != n || noisy_labels.size() != n ||
      noise_mask.size() != n)
    throw DomainError("dataset: inconsistent sample counts");
  for (std::size_t i = 0; i < n; ++i) {
    if (clean_labels[i] >= num_classes || noisy_labels[i] >= num_classes)
      throw DomainError("dataset: label out of range at row " + std::to_string(i));
    if (noise_mask[i] != (clean_labels[i] != noisy_labels[i]))
      throw DomainError("dataset: noise mask disagrees with labels at row " + std::to_string(i));
  }
}

void NoisyDataset::set_noisy_labels(std::vector<Label> noisy) {
  if (noisy.size() != clean_labels.size()) throw DomainError("set_noisy_labels: length mismatch");
  noisy_labels = std::move(noisy);
  noise_mask.resize(noisy_labels.size());
  for (std::size_t i = 0; i < noisy_labels.size(); ++i)
    noise_mask[i] = noisy_labels[i] != clean_labels[i];
}

double NoisyDataset::noise_rate() const {
  if (noise_mask.empty()) return 0.0;
  return static_cast<double>(std::count(noise_mask.begin(), noise_mask.end(), true)) /
         static_cast<double>(noise_mask.size());
}

bool operator==(const NoisyDataset& a, const NoisyDataset& b) {
  return a.num_classes == b.num_classes && a.features.rows() == b.features.rows() &&
         a.features.cols() == b.features.cols() && a.features == b.features &&
         a.clean_labels == b.clean_labels && a.noisy_labels == b.noisy_labels &&
         a.noise_mask == b.noise_mask;
}

void BlobConfig::validate() const {
  if (k < 2) throw DomainError("blobs: k must be >= 2");
  if (d < 1) throw DomainError("blobs: d must be >= 1");
  if (n_per_class < 1) throw DomainError("blobs: n_per_class must be >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw DomainError("blobs: spread must be > 0");
  if (!(center_scale >= 0.0) || !std::isfinite(center_scale))
    throw DomainError("blobs: center_scale must be >= 0");
}

NoisyDataset make_blobs(const BlobConfig& cfg) {
  cfg.validate();
  std::mt19937_64 gen(cfg.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  Matrix centers(cfg.k, cfg.d);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = cfg.center_scale * unit(gen);

  const std::size_t n = cfg.k * cfg.n_per_class;
  NoisyDataset ds;
  ds.num_classes = cfg.k;
  ds.features.resize(n, cfg.d);
  ds.clean_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label c = i % cfg.k;
    ds.clean_labels[i] = c;
    for (std::size_t j = 0; j < cfg.d; ++j)
      ds.features(i, j) = centers(c, j) + cfg.spread * unit(gen);
  }
  ds.noisy_labels = ds.clean_labels;
  ds.noise_mask.assign(n, false);
  return ds;
}

NoisyDataset subset(const NoisyDataset& ds, const std::vector<std::size_t>& rows) {
  NoisyDataset out;
  out.num_classes = ds.num_classes;
  out.features.resize(rows.size(), ds.features.cols());
  out.clean_labels.reserve(rows.size());
  out.noisy_labels.reserve(rows.size());
  out.noise_mask.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    if (i >= ds.size()) throw DomainError("subset: row index out of range");
    out.features.row(r) = ds.features.row(i);
    out.clean_labels.push_back(ds.clean_labels[i]);
    out.noisy_labels.push_back(ds.noisy_labels[i]);
    out.noise_mask.push_back(ds.noise_mask[i]);
  }
  return out;
}

std::pair<NoisyDataset, NoisyDataset> split(const NoisyDataset& ds, double test_fraction,
                                            std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw DomainError("split: test_fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.clean_labels[i]).push_back(i);

  std::mt19937_64 gen(seed);
  std::vector<bool> to_test(ds.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    const auto n_test =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    if (n_test == 0 || n_test == idx.size())
      throw DomainError("split: class " + std::to_string(c) + " with " +
                        std::to_string(idx.size()) + " samples cannot be split at fraction " +
                        std::to_string(test_fraction));
    std::shuffle(idx.begin(), idx.end(), gen);
    for (std::size_t j = 0; j < n_test; ++j) to_test[idx[j]] = true;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < ds.size(); ++i) (to_test[i] ? test_rows : train_rows).push_back(i);
  return {subset(ds, train_rows), subset(ds, test_rows)};
}

void write_dataset_csv(std::ostream& os, const NoisyDataset& ds) {
  const std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) os << 'f' << j << ',';
  os << "y_clean,y_noisy\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", ds.features(i, j));
      os << buf;
    }
    os << ds.clean_labels[i] << ',' << ds.noisy_labels[i] << '\n';
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(std::string_view f, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
    throw ParseError("bad feature value '" + std::string(f) + "'", line_no);
  return v;
}

Label parse_label(std::string_view f, std::size_t line_no) {
  unsigned long long v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
    throw ParseError("bad label '" + std::string(f) + "'", line_no);
  return static_cast<Label>(v);
}

}  // namespace

NoisyDataset read_dataset_csv(std::istream& is, std::size_t min_classes) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line.empty()) throw ParseError("empty file: missing header", 1);

  const auto header = split_fields(line);
  if (header.size() < 3 || header[header.size() - 2] != "y_clean" || header.back() != "y_noisy")
    throw ParseError("header must be f0,...,f{d-1},y_clean,y_noisy", line_no);
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "f" + std::to_string(j))
      throw ParseError("header column " + std::to_string(j) + " should be f" + std::to_string(j),
                       line_no);

  std::vector<double> values;
  std::vector<Label> clean, noisy;
  while (next()) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != d + 2)
      throw ParseError("expected " + std::to_string(d + 2) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_real(fields[j], line_no));
    clean.push_back(parse_label(fields[d], line_no));
    noisy.push_back(parse_label(fields[d + 1], line_no));
  }
  if (clean.empty()) throw ParseError("no data rows", line_no);

  NoisyDataset ds;
  ds.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(clean.size()),
                                         static_cast<Eigen::Index>(d));
  std::size_t k = min_classes;
  for (std::size_t i = 0; i < clean.size(); ++i) k = std::max({k, clean[i] + 1, noisy[i] + 1});
  ds.num_classes = k;
  ds.clean_labels = std::move(clean);
  ds.set_noisy_labels(std::move(noisy));
  return ds;
}

void save_dataset(const std::filesystem::path& path, const NoisyDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_dataset_csv(os, ds);
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

NoisyDataset load_dataset(const std::filesystem::path& path, std::size_t min_classes) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(is, min_classes);
}

}  // namespace rlab
