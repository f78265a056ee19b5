#include "pcm/dataset.hpp"
#include "pcm/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <set>

using namespace pcm;

namespace {

SyntheticSpec small_spec(std::uint64_t seed = 3) {
  SyntheticSpec s;
  s.n_classes = 3;
  s.n_parts = 2;
  s.feat_dim = 5;
  s.samples_per_class = 6;
  s.concepts_per_cell = 2;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Dataset, BinaryRoundTripPreservesBytesAndTensors) {
  const auto dir = testutil::scratch_dir("ds_roundtrip");
  const auto ds = generate_synthetic(small_spec()).dataset;
  save_dataset(ds, dir / "a.pfd", DatasetFormat::Binary);
  const auto back = load_dataset(dir / "a.pfd", DatasetFormat::Binary);
  EXPECT_TRUE(back == ds);
  save_dataset(back, dir / "b.pfd", DatasetFormat::Binary);
  EXPECT_EQ(testutil::read_bytes(dir / "a.pfd"), testutil::read_bytes(dir / "b.pfd"));
}

TEST(Dataset, BinarySizeMatchesLayout) {
  const auto dir = testutil::scratch_dir("ds_size");
  const auto ds = generate_synthetic(small_spec()).dataset;
  save_dataset(ds, dir / "a.pfd", DatasetFormat::Binary);
  const std::size_t n = ds.n_samples, K = ds.n_parts, d = ds.feat_dim;
  EXPECT_EQ(std::filesystem::file_size(dir / "a.pfd"), 24 + 4 * n * ((K + 1) * d) + 4 * n);
  EXPECT_EQ(binary_size(n, K, d), 24 + 4 * n * ((K + 1) * d) + 4 * n);
}

TEST(Dataset, TinyLayoutPayload) {
  PartFeatureDataset ds;
  ds.n_samples = 2;
  ds.n_parts = 1;
  ds.n_classes = 1;
  ds.feat_dim = 2;
  ds.parts = RowMatrixXd{{1, 2}, {3, 4}};
  ds.nonproto = RowMatrixXd{{5, 6}, {7, 8}};
  ds.labels = {0, 0};
  const auto dir = testutil::scratch_dir("ds_tiny");
  save_dataset(ds, dir / "t.pfd", DatasetFormat::Binary);
  const auto bytes = testutil::read_bytes(dir / "t.pfd");
  // 2*2*2 feature floats (parts then g per sample) + 2 labels
  ASSERT_EQ(bytes.size(), 24u + 8 * 4 + 2 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "PCMF");
  float first;
  std::memcpy(&first, bytes.data() + 24, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Dataset, BadMagicIsFormatError) {
  const auto dir = testutil::scratch_dir("ds_magic");
  const auto ds = generate_synthetic(small_spec()).dataset;
  save_dataset(ds, dir / "a.pfd", DatasetFormat::Binary);
  auto bytes = testutil::read_bytes(dir / "a.pfd");
  bytes[0] = 'X';
  testutil::write_bytes(dir / "a.pfd", bytes);
  EXPECT_THROW(load_dataset(dir / "a.pfd", DatasetFormat::Binary), FormatError);
}

TEST(Dataset, TruncatedFileIsFormatError) {
  const auto dir = testutil::scratch_dir("ds_trunc");
  const auto ds = generate_synthetic(small_spec()).dataset;
  save_dataset(ds, dir / "a.pfd", DatasetFormat::Binary);
  auto bytes = testutil::read_bytes(dir / "a.pfd");
  testutil::write_bytes(dir / "a.pfd", bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_dataset(dir / "a.pfd", DatasetFormat::Binary), FormatError);
}

TEST(Dataset, CsvRoundTrip) {
  const auto dir = testutil::scratch_dir("ds_csv");
  const auto ds = generate_synthetic(small_spec()).dataset;
  save_dataset(ds, dir / "a.csv", DatasetFormat::Csv);
  const auto back = load_dataset(dir / "a.csv", DatasetFormat::Csv, ds.n_classes);
  EXPECT_TRUE(back == ds);
  EXPECT_EQ(format_from_path(dir / "a.csv"), DatasetFormat::Csv);
  EXPECT_EQ(format_from_path(dir / "a.pfd"), DatasetFormat::Binary);
}

TEST(Dataset, CsvLabelEqualToClassCountNamesTheRow) {
  const auto dir = testutil::scratch_dir("ds_csv_label");
  testutil::write_bytes(dir / "bad.csv",
                        "part0_0,part0_1,g_0,g_1,label\n"
                        "0.1,0.2,0.3,0.4,0\n"
                        "0.1,0.2,0.3,0.4,1\n"
                        "0.1,0.2,0.3,0.4,2\n");
  try {
    load_dataset(dir / "bad.csv", DatasetFormat::Csv, 2);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
}

TEST(Dataset, ValidateRejectsNonFinite) {
  auto ds = generate_synthetic(small_spec()).dataset;
  ds.parts(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ds.validate(), ValidationError);
}

TEST(Synthetic, ZeroNoiseEqualsPlantedMeans) {
  auto spec = small_spec();
  spec.noise_sigma = 0;
  const auto data = generate_synthetic(spec);
  const auto& ds = data.dataset;
  for (std::size_t i = 0; i < ds.n_samples; ++i)
    for (std::size_t p = 0; p < ds.n_parts; ++p) {
      const auto c = data.truth.assignment[i * ds.n_parts + p];
      // planted means are stored rounded to f32 as well
      EXPECT_EQ(ds.part(i, p), data.truth.planted_mean(ds.labels[i], p, c));
    }
}

TEST(Synthetic, CountsPerLabel) {
  auto spec = small_spec();
  spec.samples_per_class = 10;
  const auto ds = generate_synthetic(spec).dataset;
  EXPECT_EQ(ds.n_samples, 30u);
  for (auto c : ds.class_counts()) EXPECT_EQ(c, 10u);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = generate_synthetic(small_spec(11)).dataset;
  const auto b = generate_synthetic(small_spec(11)).dataset;
  const auto c = generate_synthetic(small_spec(12)).dataset;
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(Synthetic, PlantedMeansRespectSeparation) {
  auto spec = small_spec();
  spec.concepts_per_cell = 3;
  spec.min_separation = 1.0;
  const auto t = generate_synthetic(spec).truth;
  for (std::size_t j = 0; j < spec.n_classes; ++j)
    for (std::size_t p = 0; p < spec.n_parts; ++p)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
          EXPECT_GE((t.planted_mean(j, p, a) - t.planted_mean(j, p, b)).norm(), 1.0 - 1e-6);
}

TEST(Synthetic, ImpossibleSeparationIsGenerationError) {
  auto spec = small_spec();
  spec.min_separation = 3.0;  // unit vectors are at most 2 apart
  EXPECT_THROW(generate_synthetic(spec), GenerationError);
}

TEST(KFold, SingleClassFiveFolds) {
  PartFeatureDataset ds;
  ds.n_samples = 10;
  ds.n_parts = 1;
  ds.n_classes = 1;
  ds.feat_dim = 1;
  ds.parts = RowMatrixXd::Zero(10, 1);
  ds.nonproto = RowMatrixXd::Zero(10, 1);
  ds.labels.assign(10, 0);
  const auto folds = split_kfold(ds, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 2u);
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
    for (auto i : f) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(*seen.rbegin(), 9u);
  EXPECT_EQ(folds, split_kfold(ds, 5, 1));
}

TEST(KFold, PreconditionErrors) {
  const auto ds = generate_synthetic(small_spec()).dataset;
  EXPECT_THROW(split_kfold(ds, 1, 0), std::invalid_argument);
  EXPECT_THROW(split_kfold(ds, 7, 0), StratificationError);  // 6 per class
}

TEST(KFold, StratifiedSizes) {
  auto spec = small_spec();
  spec.samples_per_class = 7;
  const auto ds = generate_synthetic(spec).dataset;
  const auto folds = split_kfold(ds, 3, 5);
  for (std::size_t c = 0; c < ds.n_classes; ++c) {
    std::vector<std::size_t> per;
    for (const auto& f : folds) per.push_back(std::size_t(std::count_if(f.begin(), f.end(), [&](std::size_t i) {
                                   return ds.labels[i] == c;
                                 })));
    EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1u);
  }
}

TEST(Dataset, SubsetKeepsClassCount) {
  const auto ds = generate_synthetic(small_spec()).dataset;
  const auto sub = ds.subset({0, 1});
  EXPECT_EQ(sub.n_samples, 2u);
  EXPECT_EQ(sub.n_classes, ds.n_classes);
  EXPECT_EQ(sub.part(1, 1), ds.part(1, 1));
}
