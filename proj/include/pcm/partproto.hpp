#pragma once

#include "pcm/dataset.hpp"
#include "pcm/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pcm {

// Marginal cluster center loss over pooled part features.
//
// For a batch of B samples with K parts each (rows of `features`, sample-major,
// row b * K + p is part p of sample b) and K centers:
//
//   loss = 1/B sum_b sum_p ( [|f_bp - c_p| - m1]_+ + 1/K sum_{q != p} [m2 - |c_p - c_q|]_+ )
//
// The distance is Euclidean. Hinges have zero derivative at their kink and a
// coincident center pair contributes a zero direction.

template <typename DerivedF, typename DerivedC>
typename DerivedF::Scalar mcc_loss(const Eigen::MatrixBase<DerivedF>& features,
                                   const Eigen::MatrixBase<DerivedC>& centers, typename DerivedF::Scalar m1,
                                   typename DerivedF::Scalar m2) {
  using Scalar = typename DerivedF::Scalar;
  const Index K = centers.rows();
  if (K == 0 || features.cols() != centers.cols() || features.rows() % K != 0)
    throw std::invalid_argument("mcc_loss: batch shape does not match centers");
  const Index B = features.rows() / K;
  if (B == 0) throw std::invalid_argument("mcc_loss: empty batch");

  Scalar intra(0);
  for (Index b = 0; b < B; ++b)
    for (Index p = 0; p < K; ++p) intra += std::max(Scalar(0), (features.row(b * K + p) - centers.row(p)).norm() - m1);

  Scalar pairs(0);
  for (Index p = 0; p < K; ++p)
    for (Index q = 0; q < K; ++q)
      if (q != p) pairs += std::max(Scalar(0), m2 - (centers.row(p) - centers.row(q)).norm());

  return intra / Scalar(B) + pairs / Scalar(K);
}

/// Subgradient of mcc_loss with respect to the centers (K x d_f).
template <typename DerivedF, typename DerivedC>
RowMatrix<typename DerivedF::Scalar> mcc_gradients(const Eigen::MatrixBase<DerivedF>& features,
                                                   const Eigen::MatrixBase<DerivedC>& centers,
                                                   typename DerivedF::Scalar m1, typename DerivedF::Scalar m2) {
  using Scalar = typename DerivedF::Scalar;
  const Index K = centers.rows();
  if (K == 0 || features.cols() != centers.cols() || features.rows() % K != 0)
    throw std::invalid_argument("mcc_gradients: batch shape does not match centers");
  const Index B = features.rows() / K;
  if (B == 0) throw std::invalid_argument("mcc_gradients: empty batch");

  RowMatrix<Scalar> grad = RowMatrix<Scalar>::Zero(K, centers.cols());
  for (Index b = 0; b < B; ++b)
    for (Index p = 0; p < K; ++p) {
      const auto diff = (features.row(b * K + p) - centers.row(p)).eval();
      const Scalar dist = diff.norm();
      if (dist - m1 > Scalar(0)) grad.row(p) -= diff / dist;
    }
  grad /= Scalar(B);

  // Each ordered pair (p, q) contributes to both c_p and c_q.
  for (Index p = 0; p < K; ++p)
    for (Index q = 0; q < K; ++q) {
      if (q == p) continue;
      const auto diff = (centers.row(p) - centers.row(q)).eval();
      const Scalar dist = diff.norm();
      if (m2 - dist > Scalar(0) && dist > Scalar(0)) {
        const auto unit = (diff / (dist * Scalar(K))).eval();
        grad.row(p) -= unit;
        grad.row(q) += unit;
      }
    }
  return grad;
}

struct McmConfig {
  double m1 = 0.3;
  double m2 = 1.5;
  /// Weight of the part loss in the staged objective. Only scales the
  /// reported loss: with no other part-discovery terms it cannot move the argmin.
  double alpha = 1.5;
  double lr = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  /// Standard deviation of the Gaussian jitter added to the per-part mean initialization.
  double init_jitter = 0.01;
  std::uint64_t seed = 0;
};

struct PrototypeCenters {
  RowMatrixXd centers;  // K x d_f
};

struct CenterFit {
  PrototypeCenters centers;
  double initial_loss = 0;  // full-data mcc_loss at initialization
  double final_loss = 0;    // full-data mcc_loss of the returned centers
  std::vector<double> epoch_loss;  // full-data loss after each epoch, times alpha
};

/// Per-part means plus seeded jitter.
PrototypeCenters initial_centers(const PartFeatureDataset& ds, const McmConfig& cfg);

/// Mini-batch subgradient descent on the centers with a constant step. The
/// lowest full-data loss seen (initialization included) is returned, so
/// final_loss <= initial_loss always holds.
CenterFit fit_prototype_centers(const PartFeatureDataset& ds, const McmConfig& cfg);
CenterFit fit_prototype_centers(const PartFeatureDataset& ds, const McmConfig& cfg, const PrototypeCenters& init);

}  // namespace pcm
