#include "pcm/mining.hpp"

#include "pcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace pcm {

namespace {
constexpr double kMinEps = 1e-9;
}

void ConceptBook::validate() const {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& entry = entries[e];
    const auto where = "concept " + std::to_string(e);
    if (!seen.emplace(entry.cls, entry.part, entry.local_id).second)
      throw ValidationError(where + ": duplicate (class, part, local_id)");
    if (entry.member_count == 0) throw ValidationError(where + ": member_count is zero");
    if (std::size_t(entry.centroid.size()) != feat_dim) throw ValidationError(where + ": centroid length != d_f");
    if (!entry.centroid.allFinite()) throw ValidationError(where + ": non-finite centroid");
  }
}

RowMatrixXd ConceptBook::centroids() const {
  RowMatrixXd out(Index(entries.size()), Index(feat_dim));
  for (std::size_t e = 0; e < entries.size(); ++e) out.row(Index(e)) = entries[e].centroid.transpose();
  return out;
}

RowMatrixXd cell_points(const PartFeatureDataset& ds, std::size_t cls, std::size_t part) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < ds.n_samples; ++i)
    if (ds.labels[i] == cls) members.push_back(i);
  RowMatrixXd cell(Index(members.size()), Index(ds.feat_dim));
  for (std::size_t r = 0; r < members.size(); ++r) cell.row(Index(r)) = ds.part(members[r], part);
  return cell;
}

DbscanParams resolve_cell_params(const RowMatrixXd& cell, const MiningParams& params) {
  DbscanParams out;
  const Index n = cell.rows();
  if (params.eps) {
    out.eps = *params.eps;
  } else {
    std::vector<double> nearest;
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < n; ++j)
        if (j != i) best = std::min(best, (cell.row(i) - cell.row(j)).squaredNorm());
      if (std::isfinite(best)) nearest.push_back(std::sqrt(best));
    }
    double median = 0;
    if (!nearest.empty()) {
      std::sort(nearest.begin(), nearest.end());
      const auto m = nearest.size();
      median = m % 2 ? nearest[m / 2] : 0.5 * (nearest[m / 2 - 1] + nearest[m / 2]);
    }
    out.eps = std::max(kMinEps, params.eps_scale * median);
  }
  out.min_pts = params.min_pts ? *params.min_pts : std::max<std::size_t>(3, std::size_t(n) / 20);
  return out;
}

ConceptBook mine_concepts(const PartFeatureDataset& ds, const MiningParams& params) {
  ds.validate();
  ConceptBook book;
  book.feat_dim = ds.feat_dim;
  for (std::size_t j = 0; j < ds.n_classes; ++j)
    for (std::size_t p = 0; p < ds.n_parts; ++p) {
      const auto cell = cell_points(ds, j, p);
      if (cell.rows() == 0) throw Error("internal: class " + std::to_string(j) + " has no samples");
      const auto labels = dbscan(cell, resolve_cell_params(cell, params));
      const auto n_clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
      if (n_clusters <= 0) {
        book.entries.push_back(
            {std::uint32_t(j), std::uint32_t(p), 0, std::uint32_t(cell.rows()), cell.colwise().mean().transpose()});
        continue;
      }
      for (std::int32_t l = 0; l < n_clusters; ++l) {
        Vector<double> sum = Vector<double>::Zero(cell.cols());
        std::uint32_t count = 0;
        for (std::size_t r = 0; r < labels.size(); ++r)
          if (labels[r] == l) {
            sum += cell.row(Index(r)).transpose();
            ++count;
          }
        book.entries.push_back({std::uint32_t(j), std::uint32_t(p), std::uint32_t(l), count, sum / double(count)});
      }
    }
  return book;
}

double max_pairwise_distance(const ConceptBook& book) {
  double best = 0;
  for (std::size_t a = 0; a < book.size(); ++a)
    for (std::size_t b = a + 1; b < book.size(); ++b)
      best = std::max(best, (book.entries[a].centroid - book.entries[b].centroid).norm());
  return best;
}

namespace {

struct Group {
  Vector<double> mean;
  double weight = 0;
  std::vector<std::size_t> members;  // original entry indices, ascending
  bool alive = true;
};

double ward_criterion(const Group& a, const Group& b) {
  return 2.0 * std::sqrt(a.weight * b.weight) / (a.weight + b.weight) * (a.mean - b.mean).norm();
}

std::uint64_t scope_key(const ConceptEntry& e, MergeLevel level) {
  switch (level) {
    case MergeLevel::WithinCell:
      return (std::uint64_t(e.cls) << 32) | e.part;
    case MergeLevel::WithinClass:
      return e.cls;
    case MergeLevel::Global:
      return 0;
  }
  return 0;
}

}  // namespace

ConceptBook merge_centroids(const ConceptBook& book, const MergeConfig& cfg) {
  if (book.entries.empty()) throw std::invalid_argument("merge_centroids: empty concept book");
  if (!(cfg.threshold_pct >= 0 && cfg.threshold_pct <= 100))
    throw std::invalid_argument("merge_centroids: threshold_pct must lie in [0, 100]");
  const double cut = cfg.threshold_pct / 100.0 * max_pairwise_distance(book);

  std::vector<Group> groups;
  groups.reserve(book.size());
  for (std::size_t e = 0; e < book.size(); ++e)
    groups.push_back({book.entries[e].centroid, double(book.entries[e].member_count), {e}, true});

  bool merged_any = false;
  std::map<std::uint64_t, std::vector<std::size_t>> scopes;
  for (std::size_t e = 0; e < book.size(); ++e) scopes[scope_key(book.entries[e], cfg.level)].push_back(e);

  for (auto& [key, ids] : scopes) {
    for (;;) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_a = 0, best_b = 0;
      for (std::size_t x = 0; x < ids.size(); ++x)
        for (std::size_t y = x + 1; y < ids.size(); ++y) {
          const double d = ward_criterion(groups[ids[x]], groups[ids[y]]);
          if (d < best) {
            best = d;
            best_a = x;
            best_b = y;
          }
        }
      if (!(best < cut)) break;
      auto& a = groups[ids[best_a]];
      auto& b = groups[ids[best_b]];
      a.mean = (a.weight * a.mean + b.weight * b.mean) / (a.weight + b.weight);
      a.weight += b.weight;
      a.members.insert(a.members.end(), b.members.begin(), b.members.end());
      std::sort(a.members.begin(), a.members.end());
      b.alive = false;
      ids.erase(ids.begin() + std::ptrdiff_t(best_b));
      merged_any = true;
    }
  }
  if (!merged_any) return book;

  struct Tagged {
    std::uint32_t cls, part;
    std::size_t first;
    const Group* group;
  };
  std::vector<Tagged> out;
  for (const auto& g : groups) {
    if (!g.alive) continue;
    // Largest contributor decides the tag; ties go to the earliest entry.
    std::size_t lead = g.members.front();
    for (auto m : g.members)
      if (book.entries[m].member_count > book.entries[lead].member_count) lead = m;
    out.push_back({book.entries[lead].cls, book.entries[lead].part, g.members.front(), &g});
  }
  std::sort(out.begin(), out.end(),
            [](const Tagged& a, const Tagged& b) { return std::tie(a.cls, a.part, a.first) < std::tie(b.cls, b.part, b.first); });

  ConceptBook merged;
  merged.feat_dim = book.feat_dim;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> next_local;
  for (const auto& t : out)
    merged.entries.push_back({t.cls, t.part, next_local[{t.cls, t.part}]++, std::uint32_t(t.group->weight), t.group->mean});
  return merged;
}

}  // namespace pcm
