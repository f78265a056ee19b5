#include "pcm/occlusion.hpp"
#include "pcm/xaimetrics.hpp"

#include <gtest/gtest.h>

using namespace pcm;

namespace {

struct Trained {
  PartFeatureDataset ds;
  ConceptBook book;
  SparseHead head;
};

Trained trained(std::size_t K, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.n_parts = K;
  spec.feat_dim = 12;
  spec.samples_per_class = 20;
  spec.concepts_per_cell = 1;
  spec.nonproto_class_signal = false;
  spec.seed = seed;
  Trained t;
  t.ds = generate_synthetic(spec).dataset;
  t.book = mine_concepts(t.ds, MiningParams{});
  HeadTrainConfig cfg;
  cfg.epochs = 100;
  t.head = train_head(compute_cav_batch(t.ds, t.book), t.ds.labels, spec.n_classes, cfg).head;
  return t;
}

std::size_t zero_rows(const RowMatrixXd& m) {
  std::size_t n = 0;
  for (Index r = 0; r < m.rows(); ++r) n += m.row(r).isZero(0) ? 1 : 0;
  return n;
}

}  // namespace

TEST(Occlusion, PartCounts) {
  EXPECT_EQ(occluded_part_count(0.0, 8), 0u);
  EXPECT_EQ(occluded_part_count(0.3, 8), 3u);
  EXPECT_EQ(occluded_part_count(0.1, 1), 1u);
  EXPECT_EQ(occluded_part_count(0.3, 10), 3u);
  EXPECT_EQ(occluded_part_count(1.0, 4), 4u);
  EXPECT_THROW(occluded_part_count(1.5, 4), std::invalid_argument);
}

TEST(Occlusion, SampleLevelMasking) {
  const auto t = trained(8, 1);
  RowMatrixXd parts = t.ds.sample_parts(0);
  const Vector<double> g = t.ds.nonproto.row(0).transpose();
  occlude_sample(parts, g, t.head, t.book, 0.0);
  EXPECT_EQ(parts, RowMatrixXd(t.ds.sample_parts(0)));
  occlude_sample(parts, g, t.head, t.book, 0.3);
  EXPECT_EQ(zero_rows(parts), 3u);

  const auto single = trained(1, 1);
  RowMatrixXd one = single.ds.sample_parts(0);
  occlude_sample(one, single.ds.nonproto.row(0).transpose(), single.head, single.book, 0.1);
  EXPECT_EQ(zero_rows(one), 1u);
}

TEST(Occlusion, DatasetKeepsLabelsAndG) {
  const auto t = trained(4, 2);
  const auto occ = occlude_dataset(t.ds, t.head, t.book, 0.5);
  EXPECT_EQ(occ.labels, t.ds.labels);
  EXPECT_EQ(occ.nonproto, t.ds.nonproto);
  const auto cavs = compute_cav_batch(occ, t.book);
  for (std::size_t i = 0; i < occ.n_samples; ++i)
    for (std::size_t e = 0; e < t.book.size(); ++e)
      if (occ.part(i, t.book.entries[e].part).isZero(0)) EXPECT_EQ(cavs.z(Index(i), Index(e)), 0.0);
}

TEST(Occlusion, BaselineRowEqualsCleanEvaluation) {
  const auto t = trained(4, 3);
  const auto cavs = compute_cav_batch(t.ds, t.book);
  const auto zero_only = occlusion_eval(t.ds, t.head, t.book, OcclusionConfig{{0.0}, 0});
  ASSERT_EQ(zero_only.size(), 1u);
  EXPECT_EQ(zero_only[0].accuracy, 100.0 * head_accuracy(cavs, t.ds.labels, t.head));
  EXPECT_EQ(zero_only[0].f3, faithfulness(cavs, t.ds.labels, t.head, {3}).at(3));

  const auto curve = occlusion_eval(t.ds, t.head, t.book, OcclusionConfig{});
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_EQ(curve[0].fraction, 0.0);
  EXPECT_EQ(curve[0].accuracy, zero_only[0].accuracy);
  EXPECT_EQ(curve, occlusion_eval(t.ds, t.head, t.book, OcclusionConfig{}));
}

TEST(Occlusion, CsvAndSvg) {
  std::vector<OcclusionPoint> curve{{0, 100, 10}, {0.1, 90, 20}};
  EXPECT_EQ(occlusion_csv(curve), "fraction,accuracy,F3\n0,100,10\n0.1,90,20\n");
  const auto svg = occlusion_svg(curve);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Occlusion, UnsortedFractionsRejected) {
  const auto t = trained(2, 4);
  EXPECT_THROW(occlusion_eval(t.ds, t.head, t.book, OcclusionConfig{{0.3, 0.1}, 0}), std::invalid_argument);
}
