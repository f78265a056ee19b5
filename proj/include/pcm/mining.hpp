#pragma once

#include "pcm/dataset.hpp"
#include "pcm/types.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace pcm {

struct DbscanParams {
  double eps = 0.5;
  std::size_t min_pts = 3;
};

inline constexpr std::int32_t kNoise = -1;

/// Density-based clustering of the rows of `points` (Euclidean metric).
///
/// A point is core when at least `min_pts` points, itself included, lie within
/// `eps`. Clusters are grown from unvisited core points in ascending index
/// order, so cluster ids follow first-touch order and a border point reachable
/// from two clusters joins the one seeded first. Unreached points get kNoise.
template <typename Derived>
std::vector<std::int32_t> dbscan(const Eigen::MatrixBase<Derived>& points, const DbscanParams& params) {
  using Scalar = typename Derived::Scalar;
  if (!(params.eps > 0)) throw std::invalid_argument("dbscan: eps must be positive");
  const Index n = points.rows();
  const Scalar eps2 = Scalar(params.eps) * Scalar(params.eps);

  std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    neighbors[std::size_t(i)].push_back(i);
    for (Index j = i + 1; j < n; ++j)
      if ((points.row(i) - points.row(j)).squaredNorm() <= eps2) {
        neighbors[std::size_t(i)].push_back(j);
        neighbors[std::size_t(j)].push_back(i);
      }
  }
  auto is_core = [&](Index i) { return neighbors[std::size_t(i)].size() >= params.min_pts; };

  constexpr std::int32_t kUnvisited = -2;
  std::vector<std::int32_t> labels(std::size_t(n), kUnvisited);
  std::int32_t next_id = 0;
  std::deque<Index> frontier;
  for (Index seed = 0; seed < n; ++seed) {
    if (labels[std::size_t(seed)] != kUnvisited) continue;
    if (!is_core(seed)) {
      labels[std::size_t(seed)] = kNoise;
      continue;
    }
    const auto id = next_id++;
    labels[std::size_t(seed)] = id;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const Index cur = frontier.front();
      frontier.pop_front();
      if (!is_core(cur)) continue;
      for (Index nb : neighbors[std::size_t(cur)]) {
        auto& lab = labels[std::size_t(nb)];
        if (lab == kUnvisited || lab == kNoise) {
          const bool expand = lab == kUnvisited;
          lab = id;
          if (expand) frontier.push_back(nb);
        }
      }
    }
  }
  return labels;
}

/// One mined concept: centroid l of the part-p features of class j.
struct ConceptEntry {
  std::uint32_t cls = 0;
  std::uint32_t part = 0;
  std::uint32_t local_id = 0;
  std::uint32_t member_count = 0;
  Vector<double> centroid;

  friend bool operator==(const ConceptEntry& a, const ConceptEntry& b) {
    return a.cls == b.cls && a.part == b.part && a.local_id == b.local_id && a.member_count == b.member_count &&
           a.centroid.size() == b.centroid.size() && a.centroid == b.centroid;
  }
};

/// The concept vocabulary. The flat concept index is the entry position.
struct ConceptBook {
  std::size_t feat_dim = 0;
  std::vector<ConceptEntry> entries;

  std::size_t size() const { return entries.size(); }  // d_c
  /// Throws ValidationError on duplicate (class, part, local_id), empty
  /// clusters, wrong centroid length or non-finite centroids.
  void validate() const;
  /// d_c x d_f matrix of centroids.
  RowMatrixXd centroids() const;

  friend bool operator==(const ConceptBook&, const ConceptBook&) = default;
};

/// Per-cell clustering parameters. Unset fields are chosen per cell:
/// eps = eps_scale * median nearest-neighbour distance, min_pts = max(3, cell_size / 20).
struct MiningParams {
  std::optional<double> eps;
  std::optional<std::size_t> min_pts;
  double eps_scale = 2.0;

  static MiningParams fixed(const DbscanParams& p) { return {p.eps, p.min_pts, 2.0}; }
};

DbscanParams resolve_cell_params(const RowMatrixXd& cell, const MiningParams& params);

/// Clusters every (class, part) cell and emits one entry per cluster, ordered
/// by (class, part, cluster id). Noise is excluded from centroids; a cell
/// with no cluster falls back to a single centroid over the whole cell.
ConceptBook mine_concepts(const PartFeatureDataset& ds, const MiningParams& params);
inline ConceptBook mine_concepts(const PartFeatureDataset& ds, const DbscanParams& params) {
  return mine_concepts(ds, MiningParams::fixed(params));
}

/// Rows of `ds.parts` belonging to part p of class j.
RowMatrixXd cell_points(const PartFeatureDataset& ds, std::size_t cls, std::size_t part);

enum class MergeLevel : int { WithinCell = 1, WithinClass = 2, Global = 3 };

struct MergeConfig {
  double threshold_pct = 0;  // percent of the largest pairwise centroid distance in the book
  MergeLevel level = MergeLevel::WithinCell;
};

/// Agglomerative compression of a concept book.
///
/// Scope groups: level 1 merges only within a (class, part) cell, level 2
/// within a class, level 3 anywhere. Inside a group the closest pair under the
/// member-weighted Ward criterion
///
///   d(A, B) = 2 sqrt(w_A w_B) / (w_A + w_B) * |mu_A - mu_B|
///
/// (w = member count, mu = member-weighted centroid) is merged repeatedly while
/// d < threshold_pct / 100 * D_max. Two equal-weight concepts merge exactly
/// when their centroids are closer than the cut. The criterion depends only on
/// weight ratios, so merging the output again with the same config is a no-op.
/// Merged entries take the class and part of their largest contributor and
/// local ids are renumbered per cell.
ConceptBook merge_centroids(const ConceptBook& book, const MergeConfig& cfg);

double max_pairwise_distance(const ConceptBook& book);

}  // namespace pcm
