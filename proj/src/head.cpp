#include "pcm/head.hpp"

#include "pcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pcm {

SparseHead SparseHead::zeros(std::size_t d_c, std::size_t d_f, std::size_t n_classes) {
  SparseHead h;
  h.W1 = RowMatrixXd::Zero(Index(d_c), Index(n_classes));
  h.W2 = RowMatrixXd::Zero(Index(d_f), Index(n_classes));
  h.b = Vector<double>::Zero(Index(n_classes));
  return h;
}

namespace {

void check_shapes(const CavMatrix& cavs, const SparseHead& head) {
  if (cavs.z.cols() != head.W1.rows() || cavs.g.cols() != head.W2.rows() || cavs.z.rows() != cavs.g.rows() ||
      head.W1.cols() != head.b.size() || head.W2.cols() != head.b.size())
    throw ValidationError("CAV matrix and head dimensions do not match");
}

/// Row-wise log-softmax.
RowMatrixXd log_softmax(const RowMatrixXd& logits) {
  RowMatrixXd out = logits;
  for (Index i = 0; i < out.rows(); ++i) {
    const double mx = out.row(i).maxCoeff();
    const double lse = mx + std::log((out.row(i).array() - mx).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

CavMatrix take_rows(const CavMatrix& cavs, const std::vector<std::size_t>& rows) {
  CavMatrix out;
  out.z.resize(Index(rows.size()), cavs.z.cols());
  out.g.resize(Index(rows.size()), cavs.g.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.z.row(Index(r)) = cavs.z.row(Index(rows[r]));
    out.g.row(Index(r)) = cavs.g.row(Index(rows[r]));
  }
  return out;
}

}  // namespace

RowMatrixXd head_logits(const CavMatrix& cavs, const SparseHead& head, HeadBlocks blocks) {
  check_shapes(cavs, head);
  RowMatrixXd logits = RowMatrixXd::Zero(cavs.z.rows(), Index(head.n_classes()));
  if (blocks != HeadBlocks::NonProtoOnly) logits.noalias() += cavs.z * head.W1;
  if (blocks != HeadBlocks::ConceptsOnly) logits.noalias() += cavs.g * head.W2;
  logits.rowwise() += head.b.transpose();
  return logits;
}

std::vector<std::uint32_t> head_predict(const CavMatrix& cavs, const SparseHead& head, HeadBlocks blocks) {
  const auto logits = head_logits(cavs, head, blocks);
  std::vector<std::uint32_t> pred(std::size_t(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) pred[std::size_t(i)] = std::uint32_t(argmax(logits.row(i)));
  return pred;
}

double head_accuracy(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels, const SparseHead& head,
                     HeadBlocks blocks) {
  const auto pred = head_predict(cavs, head, blocks);
  if (pred.size() != labels.size()) throw ValidationError("label count does not match CAV rows");
  if (pred.empty()) return 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return double(hits) / double(pred.size());
}

Vector<double> concept_contributions(const Eigen::Ref<const Vector<double>>& z, const SparseHead& head, std::size_t cls) {
  if (cls >= head.n_classes()) throw std::out_of_range("class index " + std::to_string(cls) + " >= L");
  if (z.size() != head.W1.rows()) throw std::invalid_argument("concept_contributions: z length != d_c");
  return z.cwiseProduct(head.W1.col(Index(cls)));
}

double smooth_objective(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                        double lambda, double gamma) {
  const auto logp = log_softmax(head_logits(cavs, head));
  double ce = 0;
  for (Index i = 0; i < logp.rows(); ++i) ce -= logp(i, Index(labels.at(std::size_t(i))));
  if (logp.rows() > 0) ce /= double(logp.rows());
  return ce + lambda * (1.0 - gamma) * 0.5 * head.W1.squaredNorm();
}

double head_objective(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                      double lambda, double gamma) {
  return smooth_objective(head, cavs, labels, lambda, gamma) + lambda * gamma * head.W1.cwiseAbs().sum();
}

HeadGradient smooth_gradient(const SparseHead& head, const CavMatrix& cavs, const std::vector<std::uint32_t>& labels,
                             double lambda, double gamma) {
  RowMatrixXd delta = log_softmax(head_logits(cavs, head)).array().exp();
  for (Index i = 0; i < delta.rows(); ++i) delta(i, Index(labels.at(std::size_t(i)))) -= 1.0;
  if (delta.rows() > 0) delta /= double(delta.rows());
  HeadGradient grad;
  grad.W1 = cavs.z.transpose() * delta + lambda * (1.0 - gamma) * head.W1;
  grad.W2 = cavs.g.transpose() * delta;
  grad.b = delta.colwise().sum().transpose();
  return grad;
}

HeadFit train_head(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels, std::size_t n_classes,
                   const HeadTrainConfig& cfg, const std::optional<SparseHead>& init,
                   const std::function<void(const ProxStep&)>& on_prox) {
  const auto n = std::size_t(cavs.z.rows());
  if (labels.size() != n || std::size_t(cavs.g.rows()) != n) throw ValidationError("CAV rows and labels disagree");
  if (n < n_classes) throw std::invalid_argument("train_head requires at least one sample per class (n >= L)");
  for (auto y : labels)
    if (y >= n_classes) throw ValidationError("label " + std::to_string(y) + " >= L");
  if (!(cfg.lambda >= 0) || !(cfg.gamma >= 0 && cfg.gamma <= 1) || !(cfg.lr > 0))
    throw std::invalid_argument("HeadTrainConfig requires lambda >= 0, gamma in [0, 1], lr > 0");

  HeadFit fit;
  fit.head = init ? *init : SparseHead::zeros(std::size_t(cavs.z.cols()), std::size_t(cavs.g.cols()), n_classes);
  check_shapes(cavs, fit.head);
  fit.head.lambda = cfg.lambda;
  fit.head.gamma = cfg.gamma;

  const double l1 = cfg.lambda * cfg.gamma;
  auto& head = fit.head;
  double current = head_objective(head, cavs, labels, cfg.lambda, cfg.gamma);
  fit.objective.push_back(current);

  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  SparseHead trial;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const auto stop = std::min(n, start + batch);
      HeadGradient grad;
      if (batch == n) {
        grad = smooth_gradient(head, cavs, labels, cfg.lambda, cfg.gamma);
      } else {
        std::vector<std::size_t> rows(order.begin() + std::ptrdiff_t(start), order.begin() + std::ptrdiff_t(stop));
        std::vector<std::uint32_t> ys(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) ys[r] = labels[rows[r]];
        grad = smooth_gradient(head, take_rows(cavs, rows), ys, cfg.lambda, cfg.gamma);
      }

      double step = cfg.lr;
      bool accepted = false;
      for (std::size_t attempt = 0; attempt <= cfg.max_backtracks && !accepted; ++attempt, step *= 0.5) {
        trial = head;
        const RowMatrixXd before = head.W1 - step * grad.W1;
        trial.W1 = soft_threshold(before, step * l1);
        trial.W2 = head.W2 - step * grad.W2;
        trial.b = head.b - step * grad.b;
        if (on_prox) on_prox(ProxStep{before, trial.W1, step * l1});
        const double candidate = head_objective(trial, cavs, labels, cfg.lambda, cfg.gamma);
        if (candidate <= current) {
          std::swap(head, trial);
          current = candidate;
          accepted = true;
        }
      }
      if (!accepted) ++fit.rejected_steps;
    }
    if (!std::isfinite(current)) {
      std::ostringstream msg;
      msg << "head training diverged at epoch " << epoch << " (lr " << cfg.lr << ")";
      throw DivergenceError(msg.str());
    }
    fit.objective.push_back(current);
  }
  return fit;
}

}  // namespace pcm
