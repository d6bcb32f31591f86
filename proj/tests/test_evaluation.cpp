#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "basket_dae/evaluation.hpp"
#include "test_support.hpp"

using namespace basket_dae;

namespace {

const ConfusionMatrix reference_counts{16702, 4732, 4601, 33965};

/// Huge weights make y ~ x~ to machine precision, so the reconstruction copies its input.
DaeModel identity_model(std::size_t p, std::vector<double> pi) {
  DaeModel m;
  m.catalog = numbered_catalog(p);
  m.supports.pi = std::move(pi);
  m.params.resize_zero(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    m.params.w_in(k, k) = 40.0;
    m.params.b_in(k) = -20.0;
    m.params.w_out(k, k) = 60.0;
  }
  return m;
}

std::vector<Basket> all_nonempty(std::size_t p) {
  std::vector<Basket> out;
  for (std::uint64_t c = 1; c < (std::uint64_t{1} << p); ++c) out.push_back(Basket::from_code(c, p));
  return out;
}

}  // namespace

TEST(Discretize, StrictThreshold) {
  Vector y(4);
  y << 0.2, 0.5, 0.51, 0.99;
  EXPECT_EQ(discretize(y, 0.5), (Basket{0, 0, 1, 1}));
  EXPECT_EQ(discretize(y, 0.0), (Basket{1, 1, 1, 1}));
  EXPECT_EQ(discretize(y, 1.0), (Basket{0, 0, 0, 0}));
}

TEST(Confusion, MissingIsPositive) {
  ConfusionMatrix cm;
  cm.add(Basket{0, 0, 1, 1}, Basket{0, 1, 0, 1});
  EXPECT_EQ(cm, (ConfusionMatrix{1, 1, 1, 1}));
  cm.add(Basket(4), Basket(4));
  EXPECT_EQ(cm.tp, 5u);
  EXPECT_THROW(cm.add(Basket{1}, Basket{1, 0}), DimensionError);
}

TEST(Rates, ReferenceCounts) {
  const auto r = rates(reference_counts);
  EXPECT_NEAR(r.tpr, 0.7792, 1e-4);
  EXPECT_NEAR(r.fpr, 0.1193, 1e-4);
  EXPECT_EQ(reference_counts.observed_missing(), 21434u);
  EXPECT_EQ(reference_counts.observed_present(), 38566u);
  EXPECT_EQ(reference_counts.predicted_missing(), 21303u);
  EXPECT_EQ(reference_counts.predicted_present(), 38697u);
  EXPECT_EQ(reference_counts.total(), 60000u);
  EXPECT_NEAR(misclassification_rate(reference_counts), (4732.0 + 4601.0) / 60000.0, 1e-15);
}

TEST(Rates, PerfectAndInvertedPredictors) {
  EXPECT_EQ(rates({10, 0, 0, 30}).tpr, 1.0);
  EXPECT_EQ(rates({10, 0, 0, 30}).fpr, 0.0);
  EXPECT_EQ(misclassification_rate({10, 0, 0, 30}), 0.0);
  EXPECT_EQ(rates({0, 10, 30, 0}).tpr, 0.0);
  EXPECT_EQ(rates({0, 10, 30, 0}).fpr, 1.0);
  EXPECT_EQ(misclassification_rate({0, 10, 30, 0}), 1.0);
}

TEST(Rates, ScaleInvariant) {
  for (std::uint64_t k : {2u, 7u, 1000u}) {
    const ConfusionMatrix scaled{reference_counts.tp * k, reference_counts.fn * k, reference_counts.fp * k, reference_counts.tn * k};
    EXPECT_DOUBLE_EQ(rates(scaled).tpr, rates(reference_counts).tpr);
    EXPECT_DOUBLE_EQ(rates(scaled).fpr, rates(reference_counts).fpr);
  }
}

TEST(Rates, UndefinedDenominators) {
  EXPECT_THROW(rates({0, 0, 3, 4}), UndefinedRateError);
  EXPECT_THROW(rates({3, 4, 0, 0}), UndefinedRateError);
  EXPECT_THROW(misclassification_rate({}), UndefinedRateError);
}

TEST(EvaluateBaskets, IdentityReconstructionHasNoErrorsWithoutCorruption) {
  const auto model = identity_model(3, {0.0, 0.0, 0.0});
  const auto baskets = all_nonempty(3);
  Rng rng(1);
  const auto cm = evaluate_baskets(model, baskets, 0.5, rng);
  EXPECT_EQ(cm.fp, 0u);
  EXPECT_EQ(cm.fn, 0u);
  EXPECT_EQ(cm.total(), 3u * baskets.size());
}

TEST(EvaluateBaskets, IdentityReconstructionOnlyMissesRemovedItems) {
  // Copying x~ never predicts an absent item present (fn = 0) and every
  // false positive is a removed item.
  const auto model = identity_model(4, {0.5, 0.3, 0.6, 0.2});
  const auto baskets = all_nonempty(4);
  Rng rng(2);
  const auto cm = evaluate_baskets(model, baskets, 0.5, rng, 50);
  EXPECT_EQ(cm.fn, 0u);
  EXPECT_GT(cm.fp, 0u);
}

TEST(EvaluateBaskets, ToyCountsMatchEnumeratedExpectation) {
  const auto model = test_support::toy_model();
  const auto net = test_support::to_oracle(model.params);
  const auto baskets = all_nonempty(2);
  const std::size_t repeats = 20000;
  for (double eta : {0.3, 0.5, 0.7}) {
    Rng rng(100 + static_cast<std::uint64_t>(eta * 10));
    const auto cm = evaluate_baskets(model, baskets, eta, rng, repeats);
    double mean[4] = {0, 0, 0, 0}, var[4] = {0, 0, 0, 0};
    for (const auto& b : baskets) {
      const auto m = oracle::confusion_moments(net, model.supports.pi, b.code(), eta);
      for (int k = 0; k < 4; ++k) {
        mean[k] += repeats * m.mean[k];
        var[k] += repeats * (m.second[k] - m.mean[k] * m.mean[k]);
      }
    }
    const std::uint64_t got[4] = {cm.tp, cm.fn, cm.fp, cm.tn};
    for (int k = 0; k < 4; ++k)
      EXPECT_LE(std::abs(got[k] - mean[k]), 3 * std::sqrt(var[k]) + 1e-9)
          << "eta " << eta << " cell " << k << " got " << got[k] << " expected " << mean[k];
  }
}

TEST(EvaluateBaskets, DeterministicAndValidated) {
  const auto model = test_support::toy_model();
  const auto baskets = all_nonempty(2);
  Rng a(5), b(5);
  EXPECT_EQ(evaluate_baskets(model, baskets, 0.5, a, 10), evaluate_baskets(model, baskets, 0.5, b, 10));
  Rng rng(1);
  EXPECT_THROW(evaluate_baskets(model, {}, 0.5, rng), ConfigError);
  EXPECT_THROW(evaluate_baskets(model, baskets, 1.5, rng), ConfigError);
  EXPECT_THROW(evaluate_baskets(model, baskets, 0.5, rng, 0), ConfigError);
}

TEST(Roc, BoundaryPointsAndMonotonicity) {
  const auto model = test_support::toy_model();
  std::vector<Basket> baskets;
  for (int rep = 0; rep < 50; ++rep)
    for (const auto& b : all_nonempty(2)) baskets.push_back(b);
  const auto grid = eta_grid();
  ASSERT_EQ(grid.size(), 101u);
  Rng rng(9);
  const auto curve = roc(model, baskets, grid, rng);
  ASSERT_EQ(curve.points.size(), 101u);
  EXPECT_EQ(curve.points.front().fpr, 0.0);
  EXPECT_EQ(curve.points.front().tpr, 0.0);
  EXPECT_EQ(curve.points.back().fpr, 1.0);
  EXPECT_EQ(curve.points.back().tpr, 1.0);
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    EXPECT_GE(curve.points[k].fpr, curve.points[k - 1].fpr);
    EXPECT_GE(curve.points[k].tpr, curve.points[k - 1].tpr);
  }
}

TEST(Roc, UnsortedThresholdsAreSortedAndValidated) {
  const auto model = test_support::toy_model();
  const auto baskets = all_nonempty(2);
  Rng rng(3);
  const std::vector<double> etas{0.9, 0.1, 0.5};
  const auto curve = roc(model, baskets, etas, rng);
  EXPECT_EQ(curve.points[0].eta, 0.1);
  EXPECT_EQ(curve.points[2].eta, 0.9);
  const std::vector<double> bad{0.2, 1.2};
  EXPECT_THROW(roc(model, baskets, bad, rng), ConfigError);
  EXPECT_THROW(roc(model, baskets, std::vector<double>{}, rng), ConfigError);
}

TEST(Reports, ConfusionCsvAndTable) {
  std::ostringstream csv;
  write_confusion_csv(csv, reference_counts);
  EXPECT_EQ(csv.str(),
            "observed,predicted_missing,predicted_present,total\n"
            "missing,16702,4732,21434\n"
            "present,4601,33965,38566\n"
            "total,21303,38697,60000\n");
  const auto table = format_confusion_table(reference_counts);
  EXPECT_NE(table.find("16,702"), std::string::npos);
  EXPECT_NE(table.find("33,965"), std::string::npos);
  EXPECT_NE(table.find("60,000"), std::string::npos);
  EXPECT_NE(table.find("Observed Missing"), std::string::npos);
}

TEST(Reports, RocCsv) {
  RocCurve c;
  c.points = {{0.0, 0.0, 0.0}, {0.5, 0.125, 0.75}, {1.0, 1.0, 1.0}};
  std::ostringstream out;
  write_roc_csv(out, c);
  EXPECT_EQ(out.str(), "eta,fpr,tpr\n0,0,0\n0.5,0.125,0.75\n1,1,1\n");
}
