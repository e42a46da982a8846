#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

#include "rlab/dataset.hpp"
#include "rlab/errors.hpp"

using namespace rlab;

TEST(Blobs, BalancedAndDeterministic) {
  const BlobConfig cfg{.k = 7, .d = 4, .n_per_class = 33, .center_scale = 2.0, .spread = 0.5, .seed = 9};
  const auto a = make_blobs(cfg);
  const auto b = make_blobs(cfg);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.size(), 7u * 33u);
  EXPECT_EQ(a.dim(), 4u);
  EXPECT_EQ(a.num_classes, 7u);
  std::map<Label, int> hist;
  for (auto y : a.clean_labels) ++hist[y];
  for (const auto& [y, n] : hist) EXPECT_EQ(n, 33);
  EXPECT_EQ(a.clean_labels, a.noisy_labels);
  for (bool m : a.noise_mask) EXPECT_FALSE(m);
  auto other = cfg;
  other.seed = 10;
  EXPECT_FALSE(make_blobs(other) == a);
}

TEST(Blobs, SeparableLimitCollapsesOntoCenters) {
  const auto ds = make_blobs({.k = 2, .d = 1, .n_per_class = 50, .center_scale = 3.0, .spread = 1e-9, .seed = 1});
  double c[2] = {ds.features(0, 0), ds.features(1, 0)};
  ASSERT_EQ(ds.clean_labels[0], 0u);
  ASSERT_EQ(ds.clean_labels[1], 1u);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(ds.features(i, 0), c[ds.clean_labels[i]], 1e-7);
  // a threshold halfway between the two centers classifies every point
  const double mid = (c[0] + c[1]) / 2;
  for (std::size_t i = 0; i < ds.size(); ++i)
    EXPECT_EQ(ds.features(i, 0) > mid, c[ds.clean_labels[i]] > mid);
}

TEST(Blobs, MomentsFollowConfig) {
  const auto ds = make_blobs({.k = 2, .d = 50, .n_per_class = 2000, .center_scale = 0.0, .spread = 2.0, .seed = 3});
  const double mean = ds.features.mean();
  const double var = (ds.features.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 4.0, 0.05);
}

TEST(Blobs, InvalidConfig) {
  EXPECT_THROW(make_blobs({.k = 1}), DomainError);
  EXPECT_THROW(make_blobs({.d = 0}), DomainError);
  EXPECT_THROW(make_blobs({.n_per_class = 0}), DomainError);
  EXPECT_THROW(make_blobs({.spread = 0.0}), DomainError);
}

TEST(Split, StratifiedDisjointDeterministic) {
  const auto ds = make_blobs({.k = 4, .d = 3, .n_per_class = 50, .seed = 2});
  const auto [tr, te] = split(ds, 0.5, 11);
  EXPECT_EQ(tr.size() + te.size(), ds.size());
  std::map<Label, int> a, b;
  for (auto y : tr.clean_labels) ++a[y];
  for (auto y : te.clean_labels) ++b[y];
  for (Label c = 0; c < 4; ++c) {
    EXPECT_EQ(a[c], 25);
    EXPECT_EQ(b[c], 25);
  }
  // union of the splits is the original multiset of rows
  std::vector<std::vector<double>> all, parts;
  auto rows = [](const NoisyDataset& d, std::vector<std::vector<double>>& out) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::vector<double> r(d.features.row(i).begin(), d.features.row(i).end());
      r.push_back(static_cast<double>(d.clean_labels[i]));
      out.push_back(r);
    }
  };
  rows(ds, all);
  rows(tr, parts);
  rows(te, parts);
  std::sort(all.begin(), all.end());
  std::sort(parts.begin(), parts.end());
  EXPECT_EQ(all, parts);
  const auto [tr2, te2] = split(ds, 0.5, 11);
  EXPECT_TRUE(tr == tr2);
  EXPECT_TRUE(te == te2);
}

TEST(Split, DegenerateFractions) {
  const auto ds = make_blobs({.k = 3, .d = 2, .n_per_class = 2, .seed = 2});
  EXPECT_THROW(split(ds, 0.0, 1), DomainError);
  EXPECT_THROW(split(ds, 1.0, 1), DomainError);
  EXPECT_THROW(split(ds, 0.1, 1), DomainError);  // rounds to zero test samples per class
  EXPECT_NO_THROW(split(ds, 0.5, 1));
}

TEST(DatasetCsv, RoundTripIsExact) {
  auto ds = make_blobs({.k = 3, .d = 5, .n_per_class = 20, .seed = 8});
  ds.features(0, 0) = 1e-300;
  ds.features(1, 1) = -std::numeric_limits<double>::max();
  ds.features(2, 2) = 0.1 + 0.2;
  std::vector<Label> noisy = ds.clean_labels;
  noisy[3] = (noisy[3] + 1) % 3;
  ds.set_noisy_labels(noisy);
  std::stringstream ss;
  write_dataset_csv(ss, ds);
  const auto back = read_dataset_csv(ss);
  EXPECT_TRUE(back == ds);
  EXPECT_TRUE(back.noise_mask[3]);
}

TEST(DatasetCsv, SaveLoadFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "rlab_test_dataset";
  std::filesystem::create_directories(dir);
  const auto ds = make_blobs({.k = 2, .d = 2, .n_per_class = 5, .seed = 1});
  save_dataset(dir / "x.csv", ds);
  EXPECT_TRUE(load_dataset(dir / "x.csv") == ds);
  EXPECT_THROW(load_dataset(dir / "missing.csv"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(DatasetCsv, HandWrittenFile) {
  std::istringstream is("f0,f1,y_clean,y_noisy\n1.5,-2,0,1\n0.25,3e2,1,1\n");
  const auto ds = read_dataset_csv(is);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.features(0, 0), 1.5);
  EXPECT_EQ(ds.features(0, 1), -2.0);
  EXPECT_EQ(ds.features(1, 0), 0.25);
  EXPECT_EQ(ds.features(1, 1), 300.0);
  EXPECT_EQ(ds.clean_labels, (std::vector<Label>{0, 1}));
  EXPECT_EQ(ds.noisy_labels, (std::vector<Label>{1, 1}));
  EXPECT_EQ(ds.noise_mask, (std::vector<bool>{true, false}));
  EXPECT_EQ(ds.num_classes, 2u);
}

namespace {
std::size_t parse_error_line(const std::string& text) {
  std::istringstream is(text);
  try {
    read_dataset_csv(is);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}
}  // namespace

TEST(DatasetCsv, MalformedInputsReportLine) {
  EXPECT_EQ(parse_error_line(""), 1u);
  EXPECT_EQ(parse_error_line("a,b\n"), 1u);
  EXPECT_EQ(parse_error_line("f0,y_clean,y_noisy\n1,0,0\n2,1\n"), 3u);
  EXPECT_EQ(parse_error_line("f0,y_clean,y_noisy\n1,0,0\nx,1,1\n"), 3u);
  EXPECT_EQ(parse_error_line("f0,y_clean,y_noisy\n1,-1,0\n"), 2u);
  EXPECT_EQ(parse_error_line("f0,y_clean,y_noisy\n1,0.5,0\n"), 2u);
  EXPECT_EQ(parse_error_line("f0,y_clean,y_noisy\n"), 1u);
}

TEST(NoisyDataset, ValidateCatchesInconsistency) {
  auto ds = make_blobs({.k = 2, .d = 1, .n_per_class = 3, .seed = 1});
  ds.noise_mask[0] = true;
  EXPECT_THROW(ds.validate(), DomainError);
}
