#include "pcm/cav.hpp"

#include <gtest/gtest.h>

using namespace pcm;

namespace {

ConceptBook one_part_book(const Vector<double>& centroid) {
  ConceptBook book;
  book.feat_dim = std::size_t(centroid.size());
  book.entries.push_back({0, 0, 0, 1, centroid});
  return book;
}

}  // namespace

TEST(Cav, IdenticalOrthogonalAndOpposite) {
  const Vector<double> c{{1.0, 2.0, 0.0}};
  const auto book = one_part_book(c);
  const Vector<double> g = Vector<double>::Zero(3);
  RowMatrixXd parts = c.transpose();
  EXPECT_NEAR(compute_cav(parts, g, book).z(0), 1.0, 1e-15);
  parts = RowMatrixXd{{-2.0, 1.0, 5.0}};
  EXPECT_EQ(compute_cav(parts, g, book).z(0), 0.0);
  parts = -c.transpose();
  EXPECT_EQ(compute_cav(parts, g, book).z(0), 0.0);
}

TEST(Cav, ZeroPartGivesZero) {
  const auto book = one_part_book(Vector<double>{{1.0, 0.0}});
  RowMatrixXd parts = RowMatrixXd::Zero(1, 2);
  EXPECT_EQ(compute_cav(parts, Vector<double>::Zero(2), book).z(0), 0.0);
}

TEST(Cav, ScaleInvariance) {
  const auto book = one_part_book(Vector<double>{{0.3, -0.4, 1.0}});
  RowMatrixXd parts{{0.5, 0.1, 0.9}};
  const Vector<double> g = Vector<double>::Ones(3);
  const double z = compute_cav(parts, g, book).z(0);
  parts *= 3;
  EXPECT_NEAR(compute_cav(parts, g, book).z(0), z, 1e-15);
}

TEST(Cav, DimensionMismatchThrows) {
  const auto book = one_part_book(Vector<double>{{0.3, -0.4, 1.0}});
  RowMatrixXd parts{{0.5, 0.1}};
  EXPECT_THROW(compute_cav(parts, Vector<double>::Zero(2), book), ValidationError);
}

TEST(Cav, BatchOfOneEqualsSingle) {
  SyntheticSpec spec;
  spec.n_classes = 1;
  spec.samples_per_class = 1;
  spec.concepts_per_cell = 1;
  const auto ds = generate_synthetic(spec).dataset;
  spec.samples_per_class = 30;
  const auto book = mine_concepts(generate_synthetic(spec).dataset, MiningParams{});
  const auto batch = compute_cav_batch(ds, book);
  const auto single = compute_cav(ds, 0, book);
  EXPECT_EQ(batch.z.row(0).transpose(), single.z);
  EXPECT_EQ(batch.g.row(0).transpose(), single.g);
}

TEST(Cav, PlantedMeanAttainsRowMaximum) {
  SyntheticSpec spec;
  spec.n_classes = 2;
  spec.n_parts = 2;
  spec.noise_sigma = 0;
  spec.seed = 6;
  const auto data = generate_synthetic(spec);
  const auto book = mine_concepts(data.dataset, DbscanParams{0.1, 2});
  const auto cav = compute_cav(data.dataset, 0, book);
  EXPECT_NEAR(cav.z.maxCoeff(), 1.0, 1e-12);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto planted = data.truth.planted_mean(data.dataset.labels[0], p, data.truth.assignment[p]);
    for (std::size_t e = 0; e < book.size(); ++e)
      if ((book.entries[e].centroid.transpose() - planted).norm() < 1e-9) EXPECT_NEAR(cav.z(Index(e)), 1.0, 1e-12);
  }
  EXPECT_TRUE((cav.z.array() >= 0).all() && (cav.z.array() <= 1 + 1e-12).all());
}
