#pragma once

// Brute-force reference implementations used only by the tests. They share no
// code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

/// Textbook DBSCAN: full distance matrix, recursive-style seed-list expansion.
inline std::vector<int> dbscan(const Mat& pts, double eps, std::size_t min_pts) {
  const std::size_t n = pts.size();
  Mat d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = dist(pts[i], pts[j]);
  auto region = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q)
      if (d[p][q] <= eps) out.push_back(q);
    return out;
  };
  constexpr int kUnclassified = -2, kNoise = -1;
  std::vector<int> label(n, kUnclassified);
  std::vector<bool> visited(n, false);
  int cluster = -1;
  for (std::size_t p = 0; p < n; ++p) {
    if (visited[p]) continue;
    visited[p] = true;
    auto seeds = region(p);
    if (seeds.size() < min_pts) {
      label[p] = kNoise;
      continue;
    }
    ++cluster;
    label[p] = cluster;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto q = seeds[s];
      if (!visited[q]) {
        visited[q] = true;
        const auto more = region(q);
        if (more.size() >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
      }
      if (label[q] < 0) label[q] = cluster;
    }
  }
  return label;
}

/// Relabels clusters by order of first appearance; noise stays -1.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  for (int l : labels) {
    if (l < 0) {
      out.push_back(-1);
      continue;
    }
    auto it = remap.find(l);
    if (it == remap.end()) it = remap.emplace(l, int(remap.size())).first;
    out.push_back(it->second);
  }
  return out;
}

struct PermResult {
  double best = 0;
  std::vector<std::size_t> lexicographic_best;
};

/// Exhaustive search over all m! permutations.
inline PermResult best_permutation(const Mat& cost) {
  const std::size_t m = cost.size();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> totals;
  std::vector<std::vector<std::size_t>> perms;
  do {
    double t = 0;
    for (std::size_t r = 0; r < m; ++r) t += cost[r][perm[r]];
    totals.push_back(t);
    perms.push_back(perm);
    best = std::min(best, t);
  } while (std::next_permutation(perm.begin(), perm.end()));
  PermResult out{best, {}};
  double scale = 1;
  for (const auto& row : cost)
    for (double c : row) scale += std::abs(c);
  for (std::size_t k = 0; k < totals.size(); ++k)
    if (totals[k] <= best + 1e-9 * scale) {
      out.lexicographic_best = perms[k];
      break;
    }
  return out;
}

/// Straight-line evaluation of the marginal cluster center loss.
/// features[b][p] is a d-vector; centers[p] is a d-vector.
inline double mcc_loss(const std::vector<Mat>& features, const Mat& centers, double m1, double m2) {
  const std::size_t B = features.size(), K = centers.size();
  double total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    double per_sample = 0;
    for (std::size_t p = 0; p < K; ++p) {
      per_sample += std::max(0.0, dist(features[b][p], centers[p]) - m1);
      double pair = 0;
      for (std::size_t q = 0; q < K; ++q)
        if (q != p) pair += std::max(0.0, m2 - dist(centers[p], centers[q]));
      per_sample += pair / double(K);
    }
    total += per_sample;
  }
  return total / double(B);
}

/// Scalar elastic net: lambda * ((1 - gamma) / 2 * sum w^2 + gamma * sum |w|).
inline double elastic_net(const Mat& w, double lambda, double gamma) {
  double sq = 0, l1 = 0;
  for (const auto& row : w)
    for (double x : row) {
      sq += x * x;
      l1 += std::abs(x);
    }
  return lambda * ((1 - gamma) * 0.5 * sq + gamma * l1);
}

/// Unregularised multinomial logistic regression by plain full-batch gradient
/// descent with a fixed step. x rows are the concatenated features.
struct Softmax {
  Mat w;                  // d x L
  std::vector<double> b;  // L
};

inline double softmax_objective(const Softmax& m, const Mat& x, const std::vector<std::uint32_t>& y) {
  const std::size_t L = m.b.size();
  double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> o(L);
    for (std::size_t c = 0; c < L; ++c) {
      o[c] = m.b[c];
      for (std::size_t k = 0; k < x[i].size(); ++k) o[c] += x[i][k] * m.w[k][c];
    }
    const double mx = *std::max_element(o.begin(), o.end());
    double lse = 0;
    for (double v : o) lse += std::exp(v - mx);
    total += mx + std::log(lse) - o[y[i]];
  }
  return total / double(x.size());
}

inline Softmax fit_softmax_gd(const Mat& x, const std::vector<std::uint32_t>& y, std::size_t L, double step,
                              std::size_t iterations) {
  const std::size_t n = x.size(), d = x.front().size();
  Softmax m{Mat(d, std::vector<double>(L, 0.0)), std::vector<double>(L, 0.0)};
  for (std::size_t it = 0; it < iterations; ++it) {
    Mat gw(d, std::vector<double>(L, 0.0));
    std::vector<double> gb(L, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> o(L);
      for (std::size_t c = 0; c < L; ++c) {
        o[c] = m.b[c];
        for (std::size_t k = 0; k < d; ++k) o[c] += x[i][k] * m.w[k][c];
      }
      const double mx = *std::max_element(o.begin(), o.end());
      double z = 0;
      for (auto& v : o) z += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < L; ++c) {
        const double r = o[c] / z - (c == y[i] ? 1.0 : 0.0);
        gb[c] += r / double(n);
        for (std::size_t k = 0; k < d; ++k) gw[k][c] += x[i][k] * r / double(n);
      }
    }
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t c = 0; c < L; ++c) m.w[k][c] -= step * gw[k][c];
    for (std::size_t c = 0; c < L; ++c) m.b[c] -= step * gb[c];
  }
  return m;
}

inline double hoyer(const std::vector<double>& z) {
  double l1 = 0, l2 = 0;
  for (double v : z) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  if (l2 == 0) return 1;
  const double r = std::sqrt(double(z.size()));
  return (r - l1 / std::sqrt(l2)) / (r - 1);
}

}  // namespace oracle
