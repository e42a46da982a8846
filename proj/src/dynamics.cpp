#include "rlab/dynamics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "rlab/errors.hpp"

namespace rlab {

using nlohmann::json;

void AlphaAccumulator::add(std::span<const SampleRecord> batch, double lr) {
  if (!(lr >= 0.0)) throw DomainError("alpha: learning rate must be >= 0");
  double sum = 0.0;
  for (const auto& r : batch) {
    if (!(r.weight >= 0.0)) throw DomainError("alpha: weights must be >= 0");
    sum += 2.0 * r.weight;  // ||grad_s delta_y||_1 == 2
  }
  numerator_ += lr * sum;
  denominator_ += lr * static_cast<double>(batch.size());
}

void SnrAccumulator::add(std::span<const SampleRecord> batch, double lr) {
  if (!(lr >= 0.0)) throw DomainError("snr: learning rate must be >= 0");
  for (const auto& r : batch) {
    if (!(r.weight >= 0.0)) throw DomainError("snr: weights must be >= 0");
    if (r.is_noisy) {
      noisy_num_ += lr * r.weight;
      noisy_den_ += lr;
    } else {
      clean_num_ += lr * r.weight;
      clean_den_ += lr;
    }
  }
}

std::optional<double> SnrAccumulator::mean_clean() const {
  if (clean_den_ <= 0.0) return std::nullopt;
  return clean_num_ / clean_den_;
}

std::optional<double> SnrAccumulator::mean_noisy() const {
  if (noisy_den_ <= 0.0) return std::nullopt;
  return noisy_num_ / noisy_den_;
}

std::optional<double> SnrAccumulator::value() const {
  const auto c = mean_clean(), n = mean_noisy();
  if (!c || !n || *n <= 0.0) return std::nullopt;
  return *c / *n;
}

void MarginHistogram::add(double m) {
  if (std::isnan(m)) throw DomainError("margin histogram: NaN margin");
  if (m < kLo) {
    ++underflow;
  } else if (m >= kHi) {
    ++overflow;
  } else {
    auto bin = static_cast<std::size_t>((m - kLo) / kWidth);
    if (bin >= kBins) bin = kBins - 1;
    ++counts[bin];
  }
}

std::uint64_t MarginHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) + underflow + overflow;
}

std::pair<MarginHistogram, MarginHistogram> margin_histogram(std::span<const double> margins,
                                                             const std::vector<bool>& mask) {
  if (margins.size() != mask.size()) throw DomainError("margin_histogram: length mismatch");
  std::pair<MarginHistogram, MarginHistogram> out;
  for (std::size_t i = 0; i < margins.size(); ++i)
    (mask[i] ? out.second : out.first).add(margins[i]);
  return out;
}

double diff(const DynamicsLog& noisy_run, const DynamicsLog& clean_run) {
  if (noisy_run.per_epoch.empty() || clean_run.per_epoch.empty())
    throw DomainError("diff: both logs must be complete");
  return noisy_run.final.test_acc - clean_run.final.test_acc;
}

void write_histogram_csv(std::ostream& os, const DynamicsLog& log) {
  os << "epoch,bin_lo,bin_hi,clean_count,noisy_count\n";
  char buf[128];
  for (const auto& e : log.per_epoch) {
    for (std::size_t b = 0; b < MarginHistogram::kBins; ++b) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%llu,%llu\n", e.epoch,
                    MarginHistogram::edge(b), MarginHistogram::edge(b + 1),
                    static_cast<unsigned long long>(e.margin_hist_clean.counts[b]),
                    static_cast<unsigned long long>(e.margin_hist_noisy.counts[b]));
      os << buf;
    }
    // Out-of-range samples go in two open-ended rows so that counts are conserved.
    std::snprintf(buf, sizeof buf, "%zu,-inf,%.17g,%llu,%llu\n", e.epoch, MarginHistogram::kLo,
                  static_cast<unsigned long long>(e.margin_hist_clean.underflow),
                  static_cast<unsigned long long>(e.margin_hist_noisy.underflow));
    os << buf;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,inf,%llu,%llu\n", e.epoch, MarginHistogram::kHi,
                  static_cast<unsigned long long>(e.margin_hist_clean.overflow),
                  static_cast<unsigned long long>(e.margin_hist_noisy.overflow));
    os << buf;
  }
}

namespace {

template <typename T>
T parse_field(std::string_view f, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
    throw ParseError("bad field '" + std::string(f) + "'", line_no);
  return v;
}

json hist_to_json(const MarginHistogram& h) {
  return json{{"lo", MarginHistogram::kLo},
              {"hi", MarginHistogram::kHi},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow}};
}

MarginHistogram hist_from_json(const json& j) {
  MarginHistogram h;
  const auto& c = j.at("counts");
  if (!c.is_array() || c.size() != MarginHistogram::kBins)
    throw ParseError("histogram must have 80 counts");
  for (std::size_t i = 0; i < MarginHistogram::kBins; ++i) h.counts[i] = c[i].get<std::uint64_t>();
  h.underflow = j.at("underflow").get<std::uint64_t>();
  h.overflow = j.at("overflow").get<std::uint64_t>();
  return h;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::vector<HistogramRow> read_histogram_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("empty histogram file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epoch,bin_lo,bin_hi,clean_count,noisy_count")
    throw ParseError("unexpected histogram header", line_no);
  std::vector<HistogramRow> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::array<std::string_view, 5> f;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto comma = rest.find(',');
      if ((i < 4) == (comma == std::string_view::npos))
        throw ParseError("expected 5 fields", line_no);
      f[i] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    rows.push_back({parse_field<std::size_t>(f[0], line_no), parse_field<double>(f[1], line_no),
                    parse_field<double>(f[2], line_no), parse_field<std::uint64_t>(f[3], line_no),
                    parse_field<std::uint64_t>(f[4], line_no)});
  }
  return rows;
}

json to_json(const DynamicsLog& log) {
  json epochs = json::array();
  for (const auto& e : log.per_epoch) {
    epochs.push_back(json{{"epoch", e.epoch},
                          {"train_acc_noisy", e.train_acc_noisy},
                          {"train_acc_clean", e.train_acc_clean},
                          {"test_acc", e.test_acc},
                          {"alpha_t", e.alpha_t},
                          {"snr_cumulative", opt(e.snr_cumulative)},
                          {"mean_margin_clean", opt(e.mean_margin_clean)},
                          {"mean_margin_noisy", opt(e.mean_margin_noisy)},
                          {"lr", e.lr},
                          {"margin_hist_clean", hist_to_json(e.margin_hist_clean)},
                          {"margin_hist_noisy", hist_to_json(e.margin_hist_noisy)}});
  }
  const auto& f = log.final;
  json fin{{"test_acc", f.test_acc},
           {"train_acc_noisy", f.train_acc_noisy},
           {"train_acc_clean", f.train_acc_clean},
           {"best_test_acc", f.best_test_acc},
           {"best_epoch", f.best_epoch},
           {"alpha_t", f.alpha_t},
           {"snr", opt(f.snr)},
           {"noise_rate", f.noise_rate},
           {"steps", f.steps}};
  return json{{"config_echo", log.config_echo}, {"per_epoch", epochs}, {"final", fin}};
}

DynamicsLog dynamics_log_from_json(const json& j) {
  try {
    DynamicsLog log;
    log.config_echo = j.value("config_echo", json::object());
    for (const auto& e : j.at("per_epoch")) {
      EpochRecord r;
      r.epoch = e.at("epoch").get<std::size_t>();
      r.train_acc_noisy = e.at("train_acc_noisy").get<double>();
      r.train_acc_clean = e.at("train_acc_clean").get<double>();
      r.test_acc = e.at("test_acc").get<double>();
      r.alpha_t = e.at("alpha_t").get<double>();
      r.snr_cumulative = opt_from(e, "snr_cumulative");
      r.mean_margin_clean = opt_from(e, "mean_margin_clean");
      r.mean_margin_noisy = opt_from(e, "mean_margin_noisy");
      r.lr = e.value("lr", 0.0);
      r.margin_hist_clean = hist_from_json(e.at("margin_hist_clean"));
      r.margin_hist_noisy = hist_from_json(e.at("margin_hist_noisy"));
      log.per_epoch.push_back(r);
    }
    const auto& f = j.at("final");
    log.final.test_acc = f.at("test_acc").get<double>();
    log.final.train_acc_noisy = f.at("train_acc_noisy").get<double>();
    log.final.train_acc_clean = f.at("train_acc_clean").get<double>();
    log.final.best_test_acc = f.at("best_test_acc").get<double>();
    log.final.best_epoch = f.at("best_epoch").get<std::size_t>();
    log.final.alpha_t = f.at("alpha_t").get<double>();
    log.final.snr = opt_from(f, "snr");
    log.final.noise_rate = f.at("noise_rate").get<double>();
    log.final.steps = f.at("steps").get<std::size_t>();
    return log;
  } catch (const json::exception& e) {
    throw ParseError(std::string("dynamics log: ") + e.what());
  }
}

}  // namespace rlab
