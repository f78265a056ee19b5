#include "pcm/partproto.hpp"

#include "pcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pcm {

PrototypeCenters initial_centers(const PartFeatureDataset& ds, const McmConfig& cfg) {
  const auto K = Index(ds.n_parts), D = Index(ds.feat_dim);
  RowMatrixXd centers = RowMatrixXd::Zero(K, D);
  for (std::size_t i = 0; i < ds.n_samples; ++i) centers += ds.sample_parts(i);
  if (ds.n_samples > 0) centers /= double(ds.n_samples);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index p = 0; p < K; ++p)
    for (Index d = 0; d < D; ++d) centers(p, d) += cfg.init_jitter * normal(rng);
  return {centers};
}

CenterFit fit_prototype_centers(const PartFeatureDataset& ds, const McmConfig& cfg) {
  return fit_prototype_centers(ds, cfg, initial_centers(ds, cfg));
}

CenterFit fit_prototype_centers(const PartFeatureDataset& ds, const McmConfig& cfg, const PrototypeCenters& init) {
  ds.validate();
  if (!(cfg.lr > 0)) throw std::invalid_argument("McmConfig.lr must be positive");
  if (cfg.batch_size == 0) throw std::invalid_argument("McmConfig.batch_size must be positive");
  if (!(cfg.m2 > cfg.m1)) {
    std::ostringstream msg;
    msg << "m2 (" << cfg.m2 << ") <= m1 (" << cfg.m1 << "): prototypes may collapse";
    warn(msg.str());
  }
  const auto K = Index(ds.n_parts);
  if (init.centers.rows() != K || init.centers.cols() != Index(ds.feat_dim))
    throw std::invalid_argument("initial centers must be K x d_f");

  CenterFit fit;
  RowMatrixXd centers = init.centers;
  fit.initial_loss = mcc_loss(ds.parts, centers, cfg.m1, cfg.m2);
  fit.final_loss = fit.initial_loss;
  fit.centers.centers = centers;

  // Seed stream distinct from the initialization jitter.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(ds.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RowMatrixXd batch;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto stop = std::min(order.size(), start + cfg.batch_size);
      batch.resize(Index((stop - start) * ds.n_parts), Index(ds.feat_dim));
      for (std::size_t r = start; r < stop; ++r) batch.middleRows(Index((r - start) * ds.n_parts), K) = ds.sample_parts(order[r]);
      centers -= cfg.lr * mcc_gradients(batch, centers, cfg.m1, cfg.m2);
    }
    const double loss = mcc_loss(ds.parts, centers, cfg.m1, cfg.m2);
    // The hinge maps NaN to 0, so the centers themselves are checked too.
    if (!std::isfinite(loss) || !centers.allFinite()) {
      std::ostringstream msg;
      msg << "prototype center training diverged at epoch " << epoch << " (lr " << cfg.lr << ")";
      throw DivergenceError(msg.str());
    }
    fit.epoch_loss.push_back(cfg.alpha * loss);
    if (loss < fit.final_loss) {
      fit.final_loss = loss;
      fit.centers.centers = centers;
    }
  }
  return fit;
}

}  // namespace pcm
