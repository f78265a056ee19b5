#include "pcm/occlusion.hpp"

#include "pcm/error.hpp"
#include "pcm/xaimetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pcm {

std::size_t occluded_part_count(double fraction, std::size_t n_parts) {
  if (!(fraction >= 0 && fraction <= 1)) throw std::invalid_argument("occlusion fraction must lie in [0, 1]");
  if (fraction == 0 || n_parts == 0) return 0;
  // The epsilon keeps products like 0.3 * 10 from rounding up past an integer.
  const auto count = std::size_t(std::ceil(fraction * double(n_parts) - 1e-9));
  return std::clamp<std::size_t>(count, 1, n_parts);
}

void occlude_sample(Eigen::Ref<RowMatrixXd> parts, const Eigen::Ref<const Vector<double>>& g, const SparseHead& head,
                    const ConceptBook& book, double fraction) {
  const auto K = std::size_t(parts.rows());
  const auto count = occluded_part_count(fraction, K);
  if (count == 0) return;

  const auto cav = compute_cav(parts, g, book);
  const auto predicted = std::size_t(argmax(head_forward(cav.z, cav.g, head)));
  const auto score = concept_contributions(cav.z, head, predicted);

  std::vector<double> part_score(K, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < book.size(); ++e) {
    auto& s = part_score[book.entries[e].part];
    s = std::max(s, score(Index(e)));
  }
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return part_score[a] > part_score[b]; });
  for (std::size_t r = 0; r < count; ++r) parts.row(Index(order[r])).setZero();
}

PartFeatureDataset occlude_dataset(const PartFeatureDataset& ds, const SparseHead& head, const ConceptBook& book,
                                   double fraction) {
  PartFeatureDataset out = ds;
  for (std::size_t i = 0; i < ds.n_samples; ++i)
    occlude_sample(out.sample_parts(i), ds.nonproto.row(Index(i)).transpose(), head, book, fraction);
  return out;
}

std::vector<OcclusionPoint> occlusion_eval(const PartFeatureDataset& ds, const SparseHead& head,
                                           const ConceptBook& book, const OcclusionConfig& cfg) {
  if (!std::is_sorted(cfg.fractions.begin(), cfg.fractions.end()))
    throw std::invalid_argument("occlusion fractions must be sorted ascending");
  std::vector<double> fractions = cfg.fractions;
  if (fractions.empty() || fractions.front() != 0.0) fractions.insert(fractions.begin(), 0.0);

  std::vector<OcclusionPoint> curve;
  for (double fraction : fractions) {
    const auto occluded = occlude_dataset(ds, head, book, fraction);
    const auto cavs = compute_cav_batch(occluded, book);
    OcclusionPoint point;
    point.fraction = fraction;
    point.accuracy = 100.0 * head_accuracy(cavs, occluded.labels, head);
    point.f3 = faithfulness(cavs, occluded.labels, head, {3}).at(3);
    curve.push_back(point);
  }
  return curve;
}

std::string occlusion_csv(const std::vector<OcclusionPoint>& curve) {
  std::ostringstream out;
  out << "fraction,accuracy,F3\n";
  for (const auto& p : curve) out << p.fraction << ',' << p.accuracy << ',' << p.f3 << '\n';
  return out.str();
}

std::string occlusion_svg(const std::vector<OcclusionPoint>& curve) {
  constexpr double W = 480, H = 320, M = 40;
  double max_fraction = 0;
  for (const auto& p : curve) max_fraction = std::max(max_fraction, p.fraction);
  if (max_fraction == 0) max_fraction = 1;
  auto x = [&](double f) { return M + (W - 2 * M) * f / max_fraction; };
  auto y = [&](double v) { return H - M - (H - 2 * M) * std::clamp(v, 0.0, 100.0) / 100.0; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  auto series = [&](auto value, const char* colour, const char* name) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (const auto& p : curve) out << x(p.fraction) << ',' << y(value(p)) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - M << "\" y=\"" << (colour[0] == 'b' ? M : M + 16) << "\" text-anchor=\"end\" fill=\""
        << colour << "\">" << name << "</text>\n";
  };
  series([](const OcclusionPoint& p) { return p.accuracy; }, "blue", "accuracy (%)");
  series([](const OcclusionPoint& p) { return p.f3; }, "red", "F(3)");
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">occluded fraction</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace pcm
