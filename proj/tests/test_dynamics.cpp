#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rlab/dynamics.hpp"
#include "rlab/errors.hpp"
#include "rlab/noise.hpp"
#include "rlab/trainer.hpp"

using namespace rlab;

namespace {

struct Batch {
  std::vector<SampleRecord> records;
  double lr;
};

std::vector<Batch> random_history(std::mt19937_64& g, std::size_t batches) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Batch> h;
  for (std::size_t b = 0; b < batches; ++b) {
    Batch batch{{}, 0.01 + u(g)};
    const std::size_t n = 1 + g() % 20;
    for (std::size_t i = 0; i < n; ++i) batch.records.push_back({u(g) * 10 - 5, u(g), u(g) < 0.3});
    h.push_back(batch);
  }
  return h;
}

}  // namespace

TEST(Alpha, Examples) {
  AlphaAccumulator a;
  const std::vector<SampleRecord> b{{0, 0.5, false}, {0, 0.5, false}};
  a.add(b, 0.1);
  EXPECT_NEAR(a.numerator(), 0.2, 1e-15);
  EXPECT_NEAR(a.denominator(), 0.2, 1e-15);
  EXPECT_NEAR(a.value(), 1.0, 1e-15);
  AlphaAccumulator z;
  z.add(std::vector<SampleRecord>{{0, 0, false}, {0, 0, true}}, 0.3);
  EXPECT_EQ(z.value(), 0.0);
  EXPECT_EQ(AlphaAccumulator{}.value(), 0.0);
}

TEST(Alpha, RejectsNegativeInputs) {
  AlphaAccumulator a;
  EXPECT_THROW(a.add(std::vector<SampleRecord>{{0, -0.1, false}}, 0.1), DomainError);
  EXPECT_THROW(a.add(std::vector<SampleRecord>{{0, 0.1, false}}, -0.1), DomainError);
}

TEST(Alpha, StreamingEqualsWholeHistoryOracle) {
  std::mt19937_64 g(1);
  const auto h = random_history(g, 200);
  AlphaAccumulator a;
  long double num = 0, den = 0;
  for (const auto& b : h) {
    a.add(b.records, b.lr);
    long double wbar = 0;
    for (const auto& r : b.records) wbar += 2 * r.weight;
    wbar /= b.records.size();
    // lr-weighted mean of per-batch 2*mean(w), weighted by batch size
    num += b.lr * b.records.size() * wbar;
    den += b.lr * b.records.size();
  }
  EXPECT_NEAR(a.value(), double(num / den), 1e-12 * a.value());
}

TEST(Alpha, InvariantUnderLearningRateRescaling) {
  std::mt19937_64 g(2);
  const auto h = random_history(g, 50);
  AlphaAccumulator a, b;
  for (const auto& x : h) {
    a.add(x.records, x.lr);
    b.add(x.records, 37.0 * x.lr);
  }
  EXPECT_NEAR(a.value(), b.value(), 1e-12 * a.value());
}

TEST(Snr, Examples) {
  SnrAccumulator s;
  s.add(std::vector<SampleRecord>{{0, 0.4, false}, {0, 0.6, false}, {0, 0.25, true}}, 0.1);
  EXPECT_NEAR(*s.value(), 2.0, 1e-15);
  SnrAccumulator eq;
  eq.add(std::vector<SampleRecord>{{0, 0.3, false}, {0, 0.3, true}}, 0.5);
  EXPECT_NEAR(*eq.value(), 1.0, 1e-15);
  SnrAccumulator clean_only;
  clean_only.add(std::vector<SampleRecord>{{0, 0.3, false}}, 0.5);
  EXPECT_FALSE(clean_only.value().has_value());
  EXPECT_TRUE(clean_only.mean_clean().has_value());
}

TEST(Snr, StreamingOracleAndWeightRescaling) {
  std::mt19937_64 g(3);
  const auto h = random_history(g, 100);
  SnrAccumulator s, scaled;
  long double cn = 0, cd = 0, nn = 0, nd = 0;
  for (const auto& b : h) {
    s.add(b.records, b.lr);
    auto r2 = b.records;
    for (auto& r : r2) r.weight *= 3.5;
    scaled.add(r2, b.lr);
    for (const auto& r : b.records) {
      (r.is_noisy ? nn : cn) += b.lr * r.weight;
      (r.is_noisy ? nd : cd) += b.lr;
    }
  }
  const double ref = double((cn / cd) / (nn / nd));
  EXPECT_NEAR(*s.value(), ref, 1e-12 * ref);
  EXPECT_NEAR(*scaled.value(), *s.value(), 1e-12 * ref);
}

TEST(Histogram, Binning) {
  MarginHistogram h;
  h.add(0.0);
  h.add(0.0);
  EXPECT_EQ(h.counts[40], 2u);
  EXPECT_EQ(h.total(), 2u);
  h.add(25.0);
  h.add(20.0);
  h.add(-20.0);
  h.add(-20.5);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_EQ(h.underflow, 1u);
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_EQ(MarginHistogram::edge(0), -20.0);
  EXPECT_EQ(MarginHistogram::edge(80), 20.0);
  EXPECT_THROW(h.add(NAN), DomainError);
}

TEST(Histogram, SplitAndConservation) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> n(0.0, 12.0);
  std::vector<double> m(1000);
  std::vector<bool> mask(1000);
  std::size_t noisy = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = n(g);
    mask[i] = g() % 3 == 0;
    noisy += mask[i];
  }
  const auto [c, z] = margin_histogram(m, mask);
  EXPECT_EQ(c.total(), 1000 - noisy);
  EXPECT_EQ(z.total(), noisy);
  const auto [all_c, none] = margin_histogram(std::vector<double>(5, 0.0), std::vector<bool>(5, false));
  EXPECT_EQ(all_c.counts[40], 5u);
  EXPECT_EQ(none.total(), 0u);
  EXPECT_THROW(margin_histogram(m, std::vector<bool>(3)), DomainError);
}

TEST(Diff, SignConvention) {
  DynamicsLog clean, noisy;
  clean.per_epoch.emplace_back();
  noisy.per_epoch.emplace_back();
  clean.final.test_acc = 0.90;
  noisy.final.test_acc = 0.58;
  EXPECT_NEAR(diff(noisy, clean), -0.32, 1e-15);
  EXPECT_EQ(diff(clean, clean), 0.0);
  EXPECT_GT(diff(clean, noisy), 0.0);
  EXPECT_THROW(diff(DynamicsLog{}, clean), DomainError);
}

namespace {
DynamicsLog small_run() {
  auto ds = make_blobs({.k = 3, .d = 3, .n_per_class = 30, .seed = 2});
  ds = corrupt(ds, NoiseSpec::symmetric(3, 0.3), 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 20;
  return run(ds, ds, Objective(LossSpec::mae()), {{3, 8, 3}, 1}, cfg);
}
}  // namespace

TEST(DynamicsLog, JsonRoundTripIsExact) {
  const auto log = small_run();
  const auto j = to_json(log);
  const auto back = dynamics_log_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_TRUE(back == log);
  EXPECT_EQ(j["per_epoch"].size(), 4u);
  EXPECT_EQ(j["per_epoch"][0]["margin_hist_clean"]["counts"].size(), 80u);
  for (const auto& e : log.per_epoch) {
    EXPECT_GE(e.alpha_t, 0.0);
    EXPECT_GE(e.test_acc, 0.0);
    EXPECT_LE(e.test_acc, 1.0);
  }
  EXPECT_THROW(dynamics_log_from_json(nlohmann::json::object()), ParseError);
}

TEST(DynamicsLog, HistogramCsvRoundTrip) {
  const auto log = small_run();
  std::stringstream ss;
  write_histogram_csv(ss, log);
  const auto rows = read_histogram_csv(ss);
  ASSERT_EQ(rows.size(), log.per_epoch.size() * 82);
  for (std::size_t e = 0; e < log.per_epoch.size(); ++e) {
    const auto& rec = log.per_epoch[e];
    std::uint64_t clean = 0, noisy = 0;
    for (std::size_t b = 0; b < 82; ++b) {
      const auto& r = rows[e * 82 + b];
      EXPECT_EQ(r.epoch, e);
      if (b < 80) {
        EXPECT_EQ(r.bin_lo, MarginHistogram::edge(b));
        EXPECT_EQ(r.clean_count, rec.margin_hist_clean.counts[b]);
        EXPECT_EQ(r.noisy_count, rec.margin_hist_noisy.counts[b]);
      }
      clean += r.clean_count;
      noisy += r.noisy_count;
    }
    EXPECT_EQ(rows[e * 82 + 80].bin_lo, -INFINITY);
    EXPECT_EQ(rows[e * 82 + 80].clean_count, rec.margin_hist_clean.underflow);
    EXPECT_EQ(rows[e * 82 + 81].bin_hi, INFINITY);
    EXPECT_EQ(rows[e * 82 + 81].noisy_count, rec.margin_hist_noisy.overflow);
    EXPECT_EQ(clean, rec.margin_hist_clean.total());
    EXPECT_EQ(noisy, rec.margin_hist_noisy.total());
  }
}

TEST(DynamicsLog, HistogramCsvErrors) {
  std::istringstream empty("");
  EXPECT_THROW(read_histogram_csv(empty), ParseError);
  std::istringstream bad("epoch,bin_lo,bin_hi,clean_count,noisy_count\n0,1,2,3\n");
  try {
    read_histogram_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
