#include "oracles.hpp"
#include "pcm/error.hpp"
#include "pcm/hungarian.hpp"
#include "pcm/partproto.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pcm;

namespace {

std::vector<oracle::Mat> to_batches(const RowMatrixXd& f, std::size_t K) {
  std::vector<oracle::Mat> out(std::size_t(f.rows()) / K);
  for (Index r = 0; r < f.rows(); ++r) out[std::size_t(r) / K].emplace_back(f.row(r).begin(), f.row(r).end());
  return out;
}

oracle::Mat to_rows(const RowMatrixXd& m) {
  oracle::Mat out;
  for (Index r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

}  // namespace

TEST(MccLoss, SinglePartOnCenterIsZero) {
  RowMatrixXd f{{0.5, -1.0}};
  RowMatrixXd c = f;
  EXPECT_EQ(mcc_loss(f, c, 0.3, 1.5), 0.0);
}

TEST(MccLoss, CollapsedCentersHandValue) {
  RowMatrixXd c{{0.2, 0.2}, {0.2, 0.2}};
  RowMatrixXd f = c;
  EXPECT_DOUBLE_EQ(mcc_loss(f, c, 0.3, 1.5), 1.5);
}

TEST(MccLoss, MatchesScalarOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 20; ++rep) {
    RowMatrixXd f = RowMatrixXd::NullaryExpr(12, 5, [&] { return n01(rng); });
    RowMatrixXd c = RowMatrixXd::NullaryExpr(3, 5, [&] { return 0.5 * n01(rng); });
    EXPECT_NEAR(mcc_loss(f, c, 0.3, 1.5), oracle::mcc_loss(to_batches(f, 3), to_rows(c), 0.3, 1.5), 1e-12);
  }
}

TEST(MccLoss, FloatScalarWorks) {
  Eigen::MatrixXf f(2, 2);
  f << 1, 0, 0, 1;
  Eigen::MatrixXf c = f;
  EXPECT_FLOAT_EQ(mcc_loss(f, c, 0.3f, 1.5f), 2 * 0.5f * (1.5f - std::sqrt(2.0f)));
}

TEST(MccLoss, ShapeMismatchThrows) {
  RowMatrixXd f(5, 2), c(2, 2);
  f.setZero();
  c.setZero();
  EXPECT_THROW(mcc_loss(f, c, 0.3, 1.5), std::invalid_argument);
}

TEST(MccGradient, InactiveHingesGiveZero) {
  RowMatrixXd c{{0, 0}, {3, 0}};
  RowMatrixXd f{{0.1, 0}, {3, 0.1}, {0, -0.1}, {2.9, 0}};
  EXPECT_TRUE(mcc_gradients(f, c, 0.3, 1.5).isZero(0));
}

TEST(MccGradient, FiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  int checked = 0;
  while (checked < 30) {
    RowMatrixXd f = RowMatrixXd::NullaryExpr(8, 4, [&] { return n01(rng); });
    RowMatrixXd c = RowMatrixXd::NullaryExpr(2, 4, [&] { return 0.4 * n01(rng); });
    const auto g = mcc_gradients(f, c, 0.3, 1.5);
    const double h = 1e-5;
    RowMatrixXd fd(c.rows(), c.cols());
    for (Index i = 0; i < c.size(); ++i) {
      RowMatrixXd cp = c, cm = c;
      cp(i) += h;
      cm(i) -= h;
      fd(i) = (mcc_loss(f, cp, 0.3, 1.5) - mcc_loss(f, cm, 0.3, 1.5)) / (2 * h);
    }
    ++checked;
    EXPECT_LE((g - fd).norm() / std::max(1e-12, fd.norm()), 1e-4);
  }
}

TEST(MccGradient, CoincidentCentersStepDecreasesLoss) {
  RowMatrixXd c{{0.2, 0.1}, {0.2, 0.1}};
  RowMatrixXd f{{0.2, 0.1}, {0.2, 0.1}, {1.0, 0.1}, {-0.6, 0.1}};
  const auto g = mcc_gradients(f, c, 0.3, 1.5);
  EXPECT_TRUE(g.allFinite());
  const RowMatrixXd stepped = c - 0.01 * g;
  EXPECT_LT(mcc_loss(f, stepped, 0.3, 1.5), mcc_loss(f, c, 0.3, 1.5));
}

TEST(FitCenters, FixedPointAtSeparatedClusters) {
  PartFeatureDataset ds;
  ds.n_samples = 3;
  ds.n_parts = 2;
  ds.n_classes = 1;
  ds.feat_dim = 2;
  ds.parts = RowMatrixXd{{0, 0}, {5, 0}, {0.1, 0}, {5, 0.1}, {0, 0.1}, {4.9, 0}};
  ds.nonproto = RowMatrixXd::Zero(3, 2);
  ds.labels = {0, 0, 0};
  PrototypeCenters init{RowMatrixXd{{0, 0}, {5, 0}}};
  McmConfig cfg;
  const auto fit = fit_prototype_centers(ds, cfg, init);
  EXPECT_EQ(fit.final_loss, 0.0);
  EXPECT_EQ(fit.centers.centers, init.centers);
}

TEST(FitCenters, RecoversPlantedMeans) {
  SyntheticSpec spec;
  spec.n_classes = 1;
  spec.n_parts = 3;
  spec.feat_dim = 8;
  spec.samples_per_class = 60;
  spec.concepts_per_cell = 1;
  spec.noise_sigma = 0.01;
  spec.seed = 2;
  const auto data = generate_synthetic(spec);
  McmConfig cfg;
  cfg.m1 = 0.02;
  cfg.m2 = 0.5;
  cfg.lr = 0.01;
  cfg.seed = 5;
  const auto fit = fit_prototype_centers(data.dataset, cfg);
  RowMatrixXd cost(3, 3);
  for (Index p = 0; p < 3; ++p)
    for (Index q = 0; q < 3; ++q)
      cost(p, q) = (fit.centers.centers.row(p) - data.truth.planted_mean(0, std::size_t(q), 0)).norm();
  const auto match = hungarian(cost);
  for (Index p = 0; p < 3; ++p) EXPECT_LE(cost(p, Index(match.col_of_row[std::size_t(p)])), 0.05);
  EXPECT_LE(fit.final_loss, fit.initial_loss);
}

TEST(FitCenters, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.seed = 9;
  const auto ds = generate_synthetic(spec).dataset;
  McmConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 1;
  const auto a = fit_prototype_centers(ds, cfg);
  const auto b = fit_prototype_centers(ds, cfg);
  EXPECT_EQ(a.centers.centers, b.centers.centers);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(FitCenters, DivergenceIsReported) {
  SyntheticSpec spec;
  spec.seed = 1;
  auto ds = generate_synthetic(spec).dataset;
  McmConfig cfg;
  cfg.lr = std::numeric_limits<double>::infinity();
  cfg.epochs = 2;
  EXPECT_THROW(fit_prototype_centers(ds, cfg), DivergenceError);
}
