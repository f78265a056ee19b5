#include "pcm/xaimetrics.hpp"

#include "pcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pcm {

std::map<std::size_t, double> faithfulness(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                                           const SparseHead& head, const std::vector<std::size_t>& n_list) {
  const auto d_c = head.n_concepts();
  const auto n = std::size_t(cavs.z.rows());
  if (labels.size() != n) throw ValidationError("label count does not match CAV rows");

  std::vector<std::size_t> ns;
  for (auto k : n_list) {
    if (k > d_c) {
      warn("faithfulness: n = " + std::to_string(k) + " exceeds d_c = " + std::to_string(d_c) + ", clamped");
      k = d_c;
    }
    ns.push_back(k);
  }

  const auto base_pred = head_predict(cavs, head);
  std::size_t base_hits = 0;
  for (std::size_t i = 0; i < n; ++i) base_hits += base_pred[i] == labels[i];

  std::vector<std::size_t> hits(ns.size(), 0);
  std::vector<std::size_t> rank(d_c);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector<double> z = cavs.z.row(Index(i)).transpose();
    const Vector<double> g = cavs.g.row(Index(i)).transpose();
    const auto score = concept_contributions(z, head, base_pred[i]);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return score(Index(a)) > score(Index(b)); });
    for (std::size_t t = 0; t < ns.size(); ++t) {
      if (ns[t] == 0) {
        hits[t] += base_pred[i] == labels[i];
        continue;
      }
      Vector<double> deleted = z;
      for (std::size_t r = 0; r < ns[t]; ++r) deleted(Index(rank[r])) = 0.0;
      hits[t] += argmax(head_forward(deleted, g, head)) == Index(labels[i]);
    }
  }

  std::map<std::size_t, double> out;
  for (std::size_t t = 0; t < ns.size(); ++t) {
    // Counts are compared before scaling so that F(0) is exactly 0.
    const double drop = n == 0 ? 0.0 : 100.0 * (double(base_hits) - double(hits[t])) / double(n);
    out[n_list[t]] = drop;
  }
  return out;
}

double stability_of_books(const std::vector<ConceptBook>& books) {
  if (books.size() < 2) throw std::invalid_argument("stability needs at least two folds");
  using Cell = std::pair<std::uint32_t, std::uint32_t>;
  std::vector<std::map<Cell, std::vector<const Vector<double>*>>> cells(books.size());
  std::set<Cell> all_cells;
  for (std::size_t f = 0; f < books.size(); ++f)
    for (const auto& e : books[f].entries) {
      cells[f][{e.cls, e.part}].push_back(&e.centroid);
      all_cells.insert({e.cls, e.part});
    }

  double total = 0;
  std::size_t terms = 0;
  for (std::size_t a = 0; a < books.size(); ++a)
    for (std::size_t b = a + 1; b < books.size(); ++b)
      for (const auto& cell : all_cells) {
        const auto& ca = cells[a][cell];
        const auto& cb = cells[b][cell];
        const auto m = std::max(ca.size(), cb.size());
        if (m == 0) continue;
        RowMatrixXd cost = RowMatrixXd::Ones(Index(m), Index(m));
        for (std::size_t r = 0; r < ca.size(); ++r)
          for (std::size_t c = 0; c < cb.size(); ++c)
            cost(Index(r), Index(c)) = 1.0 - std::max(0.0, cosine(*ca[r], *cb[c]));
        const auto match = hungarian(cost);
        double sim = 0;
        for (std::size_t r = 0; r < m; ++r) sim += 1.0 - cost(Index(r), Index(match.col_of_row[r]));
        total += sim / double(m);
        ++terms;
      }
  return terms == 0 ? 0.0 : 100.0 * total / double(terms);
}

double stability(const PartFeatureDataset& ds, std::size_t k, const MiningParams& params, std::uint64_t seed) {
  const auto folds = split_kfold(ds, k, seed);
  std::vector<ConceptBook> books;
  books.reserve(folds.size());
  for (const auto& fold : folds) books.push_back(mine_concepts(ds.subset(fold), params));
  return stability_of_books(books);
}

Consistency consistency(const RowMatrixXd& cavs, const std::vector<std::uint32_t>& labels) {
  const Index n = cavs.rows();
  if (labels.size() != std::size_t(n)) throw ValidationError("label count does not match CAV rows");
  std::map<std::uint32_t, std::vector<Index>> by_class;
  for (Index i = 0; i < n; ++i) by_class[labels[std::size_t(i)]].push_back(i);
  if (by_class.size() < 2) throw std::invalid_argument("consistency needs at least two classes");

  RowMatrixXd unit = cavs;
  for (Index i = 0; i < n; ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0) unit.row(i) /= norm;
  }
  const RowMatrixXd sim = unit * unit.transpose();

  double intra_sum = 0;
  std::size_t intra_classes = 0;
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() < 2) continue;
    double s = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b, ++pairs) s += sim(rows[a], rows[b]);
    intra_sum += s / double(pairs);
    ++intra_classes;
  }
  if (intra_classes == 0) throw ValidationError("intra-class consistency undefined: every class is a singleton");

  double inter_sum = 0;
  std::size_t inter_pairs = 0;
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (labels[std::size_t(a)] != labels[std::size_t(b)]) {
        inter_sum += sim(a, b);
        ++inter_pairs;
      }
  return {100.0 * intra_sum / double(intra_classes), 100.0 * inter_sum / double(inter_pairs)};
}

double hoyer_sparseness(const Eigen::Ref<const Vector<double>>& z) {
  const double l2 = z.norm();
  if (l2 == 0) return 1.0;
  const double root = std::sqrt(double(z.size()));
  return (root - z.cwiseAbs().sum() / l2) / (root - 1.0);
}

double sparseness(const RowMatrixXd& cavs) {
  if (cavs.cols() < 2) throw std::invalid_argument("sparseness needs d_c >= 2");
  if (cavs.rows() == 0) return 0;
  double total = 0;
  for (Index i = 0; i < cavs.rows(); ++i) total += hoyer_sparseness(cavs.row(i).transpose());
  return 100.0 * total / double(cavs.rows());
}

}  // namespace pcm
