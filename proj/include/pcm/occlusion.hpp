#pragma once

#include "pcm/cav.hpp"
#include "pcm/dataset.hpp"
#include "pcm/head.hpp"
#include "pcm/mining.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcm {

struct OcclusionConfig {
  std::vector<double> fractions{0.1, 0.2, 0.3};  // ascending, each in [0, 1]
  std::uint64_t seed = 0;
};

/// Number of parts masked at `fraction`: ceil(fraction * K), at least one
/// whenever fraction > 0.
std::size_t occluded_part_count(double fraction, std::size_t n_parts);

/// Zeroes the part features behind the strongest evidence for the clean
/// prediction. Parts are ranked by the largest contribution among their
/// concepts to the predicted class (ties: lower part index). g is untouched.
/// `parts` is K x d_f and is modified in place.
void occlude_sample(Eigen::Ref<RowMatrixXd> parts, const Eigen::Ref<const Vector<double>>& g, const SparseHead& head,
                    const ConceptBook& book, double fraction);

/// Copy of `ds` with every sample occluded at `fraction`.
PartFeatureDataset occlude_dataset(const PartFeatureDataset& ds, const SparseHead& head, const ConceptBook& book,
                                   double fraction);

struct OcclusionPoint {
  double fraction = 0;
  double accuracy = 0;  // percent
  double f3 = 0;        // faithfulness F(3) on the occluded activations

  friend bool operator==(const OcclusionPoint&, const OcclusionPoint&) = default;
};

/// One point per fraction, preceded by the clean fraction-0 baseline when the
/// list does not start with 0.
std::vector<OcclusionPoint> occlusion_eval(const PartFeatureDataset& ds, const SparseHead& head,
                                           const ConceptBook& book, const OcclusionConfig& cfg);

std::string occlusion_csv(const std::vector<OcclusionPoint>& curve);
/// Minimal two-series line chart (accuracy and F(3) against fraction).
std::string occlusion_svg(const std::vector<OcclusionPoint>& curve);

}  // namespace pcm
