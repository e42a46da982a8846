#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rlab/errors.hpp"
#include "rlab/margin.hpp"

using namespace rlab;

TEST(LogSumExp, Examples) {
  EXPECT_NEAR(log_sum_exp(std::vector<double>{0, 0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_sum_exp(std::vector<double>{1000, 1000}), 1000 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sum_exp(std::vector<double>{-1000, -1000}), -1000 + std::log(2.0), 1e-12);
  // exact value from a direct sum at low magnitude
  EXPECT_NEAR(log_sum_exp(std::vector<double>{1, 0, 0}), 1.551444713932051, 1e-12);
}

TEST(LogSumExp, EmptyIsDomainError) {
  EXPECT_THROW(log_sum_exp(std::vector<double>{}), DomainError);
}

TEST(Margin, TwoClassSymmetricPoint) {
  const auto m = margin(std::vector<double>{0, 0}, 0);
  EXPECT_EQ(m.label, 0u);
  EXPECT_DOUBLE_EQ(m.margin, 0.0);
  EXPECT_DOUBLE_EQ(m.prob, 0.5);
  EXPECT_DOUBLE_EQ(m.grad_margin[0], 1.0);
  EXPECT_DOUBLE_EQ(m.grad_margin[1], -1.0);
}

TEST(Margin, ThreeClassPoints) {
  const auto m = margin(std::vector<double>{0, 0, 0}, 0);
  EXPECT_NEAR(m.margin, -std::log(2.0), 1e-15);
  EXPECT_NEAR(m.grad_margin[1], -0.5, 1e-15);
  EXPECT_NEAR(m.grad_margin[2], -0.5, 1e-15);
  EXPECT_NEAR(std::abs(m.grad_margin[0]) + std::abs(m.grad_margin[1]) + std::abs(m.grad_margin[2]),
              2.0, 1e-15);
  EXPECT_NEAR(margin(std::vector<double>{1, 0, 0}, 0).margin, 0.30685281944005466, 1e-15);
}

TEST(Margin, LabelOutOfRange) {
  EXPECT_THROW(margin(std::vector<double>{0, 0}, 2), DomainError);
}

TEST(Margin, RejectsNonFiniteAndTinyVectors) {
  EXPECT_THROW(margin(std::vector<double>{0.0, NAN}, 0), DomainError);
  EXPECT_THROW(margin(std::vector<double>{0.0}, 0), DomainError);
}

TEST(Margin, ConfidentLabelKeepsPrecision) {
  // p_y -> 1: excluding y from the reduction keeps 1 - p_y accurate.
  const auto m = margin(std::vector<double>{40, 0, 0}, 0);
  EXPECT_NEAR(m.margin, 40 - std::log(2.0), 1e-12);
  EXPECT_NEAR(m.grad_margin[1], -0.5, 1e-15);
}

TEST(MarginProperties, RandomIdentities) {
  std::mt19937_64 g(1234);
  for (std::size_t k : {2u, 3u, 10u, 100u}) {
    for (int t = 0; t < 250; ++t) {
      const auto s = oracle::random_scores(g, k);
      const std::size_t y = g() % k;
      const auto m = margin(s, y);
      ASSERT_EQ(m.grad_margin[y], 1.0);
      double l1 = 0;
      for (double v : m.grad_margin) l1 += std::abs(v);
      EXPECT_LE(std::abs(l1 - 2.0), 1e-9);
      EXPECT_NEAR(m.margin, static_cast<double>(oracle::margin(s, y)), 1e-12 * std::max(1.0, std::abs(m.margin)));
      EXPECT_LE(std::abs(sigmoid(m.margin) - static_cast<double>(oracle::softmax(s)[y])), 1e-12);
      EXPECT_LE(std::abs(m.prob - sigmoid(m.margin)), 1e-12);

      const double c = std::uniform_real_distribution<double>(-100, 100)(g);
      auto shifted = s;
      for (double& v : shifted) v += c;
      EXPECT_LE(std::abs(margin(shifted, y).margin - m.margin), 1e-9);
    }
  }
}

TEST(MarginProperties, GradientMatchesFiniteDifferences) {
  std::mt19937_64 g(99);
  const double h = 1e-5;
  for (std::size_t k : {2u, 3u, 10u, 100u}) {
    for (int t = 0; t < 20; ++t) {
      auto s = oracle::random_scores(g, k);
      const std::size_t y = g() % k;
      const auto m = margin(s, y);
      for (std::size_t j = 0; j < k; ++j) {
        const double keep = s[j];
        s[j] = keep + h;
        const double up = margin(s, y).margin;
        s[j] = keep - h;
        const double dn = margin(s, y).margin;
        s[j] = keep;
        EXPECT_NEAR(m.grad_margin[j], (up - dn) / (2 * h), 1e-6);
      }
    }
  }
}

TEST(ExpectedInitMargin, Examples) {
  EXPECT_NEAR(expected_init_margin({10, 0.0, 1.0}), -2.6017644757551617, 1e-12);
  EXPECT_NEAR(expected_init_margin({100, 0.0, 1.0}), -5.086441659081767, 1e-12);
  EXPECT_NEAR(expected_init_margin({2, 0.0, 1e-8}), 0.0, 1e-12);
}

TEST(ExpectedInitMargin, IndependentOfMu) {
  for (std::size_t k : {2u, 10u, 100u}) {
    const double ref = expected_init_margin({k, 0.0, 1.3});
    EXPECT_EQ(expected_init_margin({k, -3.0, 1.3}), ref);
    EXPECT_EQ(expected_init_margin({k, 3.0, 1.3}), ref);
  }
}

TEST(ExpectedInitMargin, InvalidModel) {
  EXPECT_THROW(expected_init_margin({1, 0.0, 1.0}), DomainError);
  EXPECT_THROW(expected_init_margin({10, 0.0, 0.0}), DomainError);
  EXPECT_THROW(expected_init_margin({10, 0.0, -1.0}), DomainError);
}

TEST(SimulateInitMargin, CloseToBruteForceReference) {
  // Reference from an independent 10^7-sample NumPy run (k=10, sigma=1).
  const double reference = -2.616565;
  const auto mc = simulate_init_margin({10, 0.0, 1.0}, 100000, 7);
  EXPECT_LE(std::abs(mc.mean - reference), 0.05);
  EXPECT_NEAR(mc.std, 1.0756, 0.02);
}

TEST(SimulateInitMargin, DegenerateScores) {
  const auto mc = simulate_init_margin({2, 0.0, 1e-6}, 1000, 3);
  EXPECT_NEAR(mc.mean, 0.0, 1e-4);
}

TEST(SimulateInitMargin, SameSeedIsBitwiseIdentical) {
  const auto a = simulate_init_margin({10, 0.5, 1.0}, 5000, 42);
  const auto b = simulate_init_margin({10, 0.5, 1.0}, 5000, 42);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  const auto c = simulate_init_margin({10, 0.5, 1.0}, 5000, 43);
  EXPECT_NE(a.mean, c.mean);
}

TEST(SimulateInitMargin, RequiresSamples) {
  EXPECT_THROW(simulate_init_margin({10, 0.0, 1.0}, 0, 1), DomainError);
}

TEST(SimulateInitMargin, FormulaWithinFivePercent) {
  for (std::size_t k : {10u, 100u}) {
    const double f = expected_init_margin({k, 0.0, 1.0});
    const auto mc = simulate_init_margin({k, 0.0, 1.0}, 1000000, 2024);
    EXPECT_LE(std::abs(f - mc.mean) / std::abs(mc.mean), 0.05) << "k=" << k;
  }
}

TEST(Softmax, MatchesOracleAndSumsToOne) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 50; ++t) {
    const auto s = oracle::random_scores(g, 17, 10.0);
    const auto p = softmax(s);
    const auto lp = log_softmax(s);
    const auto ref = oracle::softmax(s);
    double sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(p[i], static_cast<double>(ref[i]), 4e-15);
      EXPECT_NEAR(std::exp(lp[i]), p[i], 1e-15);
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(-800), 0.0);
  EXPECT_EQ(sigmoid(800), 1.0);
  EXPECT_NEAR(sigmoid(-40), std::exp(-40.0), 1e-30);
}
