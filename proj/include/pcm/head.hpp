#pragma once

#include "pcm/cav.hpp"
#include "pcm/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pcm {

/// Linear decision layer o = W1^T z + W2^T g + b.
struct SparseHead {
  RowMatrixXd W1;  // d_c x L
  RowMatrixXd W2;  // d_f x L
  Vector<double> b;  // L
  double lambda = 0;
  double gamma = 0;

  std::size_t n_concepts() const { return std::size_t(W1.rows()); }
  std::size_t feat_dim() const { return std::size_t(W2.rows()); }
  std::size_t n_classes() const { return std::size_t(b.size()); }

  static SparseHead zeros(std::size_t d_c, std::size_t d_f, std::size_t n_classes);

  friend bool operator==(const SparseHead& x, const SparseHead& y) {
    auto same = [](const auto& a, const auto& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; };
    return same(x.W1, y.W1) && same(x.W2, y.W2) && same(x.b, y.b) && x.lambda == y.lambda && x.gamma == y.gamma;
  }
};

template <typename DerivedZ, typename DerivedG>
Vector<double> head_forward(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedG>& g,
                            const SparseHead& head) {
  if (z.size() != head.W1.rows() || g.size() != head.W2.rows())
    throw std::invalid_argument("head_forward: input dimensions do not match the head");
  return head.W1.transpose() * z.derived().template cast<double>() + head.W2.transpose() * g.derived().template cast<double>() +
         head.b;
}

/// lambda * ((1 - gamma) / 2 * |W|_F^2 + gamma * |W|_1).
template <typename Derived>
typename Derived::Scalar elastic_net_penalty(const Eigen::MatrixBase<Derived>& W, typename Derived::Scalar lambda,
                                             typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  return lambda * ((Scalar(1) - gamma) * Scalar(0.5) * W.squaredNorm() + gamma * W.cwiseAbs().sum());
}

/// Element-wise sign(w) * max(|w| - tau, 0).
template <typename Derived>
RowMatrix<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& W, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  return W.unaryExpr([tau](Scalar w) {
    if (w > tau) return w - tau;
    if (w < -tau) return w + tau;
    return Scalar(0);
  });
}

/// Which weight blocks take part in a forward pass.
enum class HeadBlocks { Full, ConceptsOnly, NonProtoOnly };

/// n x L logits for every row of `cavs`.
RowMatrixXd head_logits(const CavMatrix& cavs, const SparseHead& head, HeadBlocks blocks = HeadBlocks::Full);
std::vector<std::uint32_t> head_predict(const CavMatrix& cavs, const SparseHead& head,
                                        HeadBlocks blocks = HeadBlocks::Full);
/// Fraction in [0, 1] of rows predicted correctly.
double head_accuracy(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels, const SparseHead& head,
                     HeadBlocks blocks = HeadBlocks::Full);

/// score_k = z_k * W1[k, cls].
Vector<double> concept_contributions(const Eigen::Ref<const Vector<double>>& z, const SparseHead& head, std::size_t cls);

struct HeadTrainConfig {
  double lambda = 0.007;
  double gamma = 0.5;
  /// Weight of the classification loss in the staged objective. The trainer
  /// itself never reads it; callers fold it into lr.
  double beta = 2.0;
  double lr = 1.0;
  std::size_t epochs = 200;
  std::size_t batch_size = 0;  // 0 = full batch
  std::size_t max_backtracks = 40;
  std::uint64_t seed = 0;
};

struct HeadGradient {
  RowMatrixXd W1, W2;
  Vector<double> b;
};

/// Mean softmax cross-entropy plus lambda * (1 - gamma) / 2 * |W1|_F^2 over the given rows.
double smooth_objective(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                        double lambda, double gamma);
HeadGradient smooth_gradient(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                             double lambda, double gamma);
/// Smooth part plus lambda * gamma * |W1|_1.
double head_objective(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                      double lambda, double gamma);

/// W1 before and after one soft-threshold evaluation.
struct ProxStep {
  const RowMatrixXd& before;
  const RowMatrixXd& after;
  double tau;
};

struct HeadFit {
  SparseHead head;
  std::vector<double> objective;  // full objective after each epoch; front() is the starting value
  std::size_t rejected_steps = 0;  // steps abandoned after max_backtracks halvings
};

/// Proximal gradient descent: a gradient step on the smooth part, then
/// soft-thresholding of W1 at lr * lambda * gamma. The step is halved until the
/// full objective does not increase, so the per-epoch objective is monotone.
/// Starts from `init` when given (its shape must match), otherwise from zeros.
HeadFit train_head(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels, std::size_t n_classes,
                   const HeadTrainConfig& cfg, const std::optional<SparseHead>& init = std::nullopt,
                   const std::function<void(const ProxStep&)>& on_prox = {});

}  // namespace pcm
