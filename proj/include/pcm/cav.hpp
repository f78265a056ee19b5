#pragma once

#include "pcm/dataset.hpp"
#include "pcm/error.hpp"
#include "pcm/mining.hpp"
#include "pcm/types.hpp"

namespace pcm {

/// Concept activations of one sample plus its pass-through g feature.
struct ConceptActivationVector {
  Vector<double> z;  // d_c, each entry in [0, 1]
  Vector<double> g;  // d_f
};

/// Every sample's activations: rows of `z` and `g` follow sample order.
struct CavMatrix {
  RowMatrixXd z;  // n x d_c
  RowMatrixXd g;  // n x d_f
};

/// z_e = max(0, cos(f_p, centroid_e)) where p is the part of entry e; the
/// cosine against a zero vector is 0. `parts` is K x d_f.
template <typename DerivedP, typename DerivedG>
ConceptActivationVector compute_cav(const Eigen::MatrixBase<DerivedP>& parts, const Eigen::MatrixBase<DerivedG>& g,
                                    const ConceptBook& book) {
  if (std::size_t(parts.cols()) != book.feat_dim || std::size_t(g.size()) != book.feat_dim)
    throw ValidationError("sample feature dimension does not match the concept book");
  ConceptActivationVector out;
  out.z.resize(Index(book.size()));
  for (std::size_t e = 0; e < book.size(); ++e) {
    const auto& entry = book.entries[e];
    if (Index(entry.part) >= parts.rows()) throw ValidationError("concept refers to a part the sample does not have");
    out.z(Index(e)) = std::max(0.0, double(cosine(parts.row(entry.part).transpose(), entry.centroid)));
  }
  out.g.resize(g.size());
  for (Index d = 0; d < g.size(); ++d) out.g(d) = double(g(d));
  return out;
}

ConceptActivationVector compute_cav(const PartFeatureDataset& ds, std::size_t sample, const ConceptBook& book);

CavMatrix compute_cav_batch(const PartFeatureDataset& ds, const ConceptBook& book);

}  // namespace pcm
