#pragma once

#include "pcm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pcm {

/// N samples, each with K pooled part features and one non-prototypical
/// feature g, plus a class label in [0, L).
///
/// Part features are stored sample-major in one row-major matrix: row
/// `i * K + p` holds part p of sample i. Values are kept in double precision
/// but everything produced by this library is exactly representable as f32,
/// so binary serialization is lossless.
struct PartFeatureDataset {
  std::size_t n_samples = 0;
  std::size_t n_parts = 0;    // K
  std::size_t n_classes = 0;  // L
  std::size_t feat_dim = 0;   // d_f
  RowMatrixXd parts;          // (n_samples * K) x d_f
  RowMatrixXd nonproto;       // n_samples x d_f
  std::vector<std::uint32_t> labels;

  auto part(std::size_t sample, std::size_t p) const { return parts.row(Index(sample * n_parts + p)); }
  auto part(std::size_t sample, std::size_t p) { return parts.row(Index(sample * n_parts + p)); }
  /// K x d_f block of one sample's part features.
  auto sample_parts(std::size_t sample) const { return parts.middleRows(Index(sample * n_parts), Index(n_parts)); }
  auto sample_parts(std::size_t sample) { return parts.middleRows(Index(sample * n_parts), Index(n_parts)); }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  /// Samples at `indices`, in that order. The class count L is preserved.
  PartFeatureDataset subset(const std::vector<std::size_t>& indices) const;

  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const PartFeatureDataset& a, const PartFeatureDataset& b);
};

enum class DatasetFormat { Binary, Csv };

/// Picks Csv for a ".csv" extension, Binary otherwise.
DatasetFormat format_from_path(const std::filesystem::path& path);

/// CSV carries no class count; `n_classes_hint` (0 = infer max label + 1)
/// supplies L so out-of-range labels are reported with their row.
PartFeatureDataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                std::size_t n_classes_hint = 0);
void save_dataset(const PartFeatureDataset& ds, const std::filesystem::path& path, DatasetFormat format);

/// Size in bytes of the binary encoding.
std::size_t binary_size(std::size_t n_samples, std::size_t n_parts, std::size_t feat_dim);

struct SyntheticSpec {
  std::size_t n_classes = 3;
  std::size_t n_parts = 4;
  std::size_t feat_dim = 32;
  std::size_t samples_per_class = 40;
  std::size_t concepts_per_cell = 2;  // G
  double noise_sigma = 0.02;
  /// Minimum pairwise distance between planted means of one (class, part) cell.
  /// Recovery by density clustering is only expected when it exceeds 2 * noise_sigma.
  double min_separation = 1.0;
  std::uint64_t seed = 0;
  /// When false every class shares one g mean, so g carries no class signal.
  bool nonproto_class_signal = true;
};

struct GroundTruth {
  std::size_t n_classes = 0;
  std::size_t n_parts = 0;
  std::size_t concepts_per_cell = 0;
  /// Row ((j * K) + p) * G + c holds planted mean c of class j, part p.
  RowMatrixXd planted_means;
  /// Row j holds the g mean of class j.
  RowMatrixXd nonproto_means;
  /// Entry i * K + p is the planted concept index of sample i, part p.
  std::vector<std::uint32_t> assignment;

  auto planted_mean(std::size_t cls, std::size_t p, std::size_t c) const {
    return planted_means.row(Index((cls * n_parts + p) * concepts_per_cell + c));
  }
};

struct SyntheticData {
  PartFeatureDataset dataset;
  GroundTruth truth;
};

/// Planted-concept generator. Samples are ordered class-major; within each
/// (class, part) cell the concept assignment is a seeded permutation of a
/// balanced round-robin, so every concept gets floor or ceil of
/// samples_per_class / G members.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Stratified k-fold split. Returns k disjoint, sorted index sets covering
/// every sample; per class, fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> split_kfold(const PartFeatureDataset& ds, std::size_t k, std::uint64_t seed);

}  // namespace pcm
