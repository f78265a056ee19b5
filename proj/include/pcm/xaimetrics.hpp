#pragma once

#include "pcm/cav.hpp"
#include "pcm/dataset.hpp"
#include "pcm/head.hpp"
#include "pcm/hungarian.hpp"
#include "pcm/mining.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pcm {

struct MetricReport {
  /// n -> accuracy drop in percentage points after deleting each sample's top-n concepts.
  std::map<std::size_t, double> faithfulness;
  double stability = 0;           // [0, 100]
  double consistency_intra = 0;   // [-100, 100]
  double consistency_inter = 0;   // [-100, 100]
  double sparseness = 0;          // [0, 100]
  double accuracy = 0;            // percent, full head
  double accuracy_concepts_only = 0;  // percent, W2 masked
  double accuracy_nonproto_only = 0;  // percent, W1 masked
  std::size_t n_concepts = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
};

/// Deletion faithfulness. Per sample, concepts are ranked by their
/// contribution to the clean predicted class (ties: lower index first), the
/// top n activations are set to 0 and the sample is re-classified.
/// Requested n above d_c are clamped to d_c with a warning.
std::map<std::size_t, double> faithfulness(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                                           const SparseHead& head, const std::vector<std::size_t>& n_list);

/// Mines every stratified fold separately and compares the centroid lists
/// of each (class, part) cell across all fold pairs. Centroids are matched by
/// hungarian on 1 - max(0, cos); a cell with unequal cluster counts is padded
/// with cost 1. The result is 100 x the mean matched similarity, each cell and
/// fold pair weighted equally.
double stability(const PartFeatureDataset& ds, std::size_t k, const MiningParams& params, std::uint64_t seed);

/// Stability over explicit per-fold concept books (all over the same classes and parts).
double stability_of_books(const std::vector<ConceptBook>& books);

struct Consistency {
  double intra = 0;
  double inter = 0;
};

/// 100 x mean pairwise cosine of CAV rows within each class (averaged over
/// classes with >= 2 samples) and across classes (over all cross-class pairs).
Consistency consistency(const RowMatrixXd& cavs, const std::vector<std::uint32_t>& labels);

/// Hoyer sparseness of one activation vector, in [0, 1]; an all-zero vector scores 1.
double hoyer_sparseness(const Eigen::Ref<const Vector<double>>& z);

/// 100 x mean row-wise Hoyer sparseness. Requires d_c >= 2.
double sparseness(const RowMatrixXd& cavs);

}  // namespace pcm
