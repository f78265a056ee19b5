#include "pcm/cav.hpp"

#include "pcm/error.hpp"

namespace pcm {

ConceptActivationVector compute_cav(const PartFeatureDataset& ds, std::size_t sample, const ConceptBook& book) {
  return compute_cav(ds.sample_parts(sample), ds.nonproto.row(Index(sample)).transpose(), book);
}

CavMatrix compute_cav_batch(const PartFeatureDataset& ds, const ConceptBook& book) {
  if (ds.feat_dim != book.feat_dim) throw ValidationError("dataset d_f does not match the concept book");
  for (const auto& e : book.entries)
    if (e.part >= ds.n_parts) throw ValidationError("concept refers to a part the dataset does not have");

  CavMatrix out;
  out.z.resize(Index(ds.n_samples), Index(book.size()));
  out.g = ds.nonproto;
  for (std::size_t i = 0; i < ds.n_samples; ++i)
    for (std::size_t e = 0; e < book.size(); ++e) {
      const auto& entry = book.entries[e];
      out.z(Index(i), Index(e)) = std::max(0.0, cosine(ds.part(i, entry.part).transpose(), entry.centroid));
    }
  return out;
}

}  // namespace pcm
