#include "pcm/dataset.hpp"

#include "binary_io.hpp"
#include "pcm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace pcm {

namespace {

constexpr std::string_view kMagic = "PCMF";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 24;
constexpr int kMaxPlacementAttempts = 10000;

double round_to_f32(double v) { return double(static_cast<float>(v)); }

std::string sample_msg(std::size_t i) { return "sample " + std::to_string(i); }

}  // namespace

void PartFeatureDataset::validate() const {
  if (n_parts == 0 || feat_dim == 0 || n_classes == 0)
    throw ValidationError("n_parts, n_classes and feat_dim must be positive");
  if (std::size_t(parts.rows()) != n_samples * n_parts || std::size_t(parts.cols()) != feat_dim)
    throw ValidationError("part_features shape does not match n_samples x K x d_f");
  if (std::size_t(nonproto.rows()) != n_samples || std::size_t(nonproto.cols()) != feat_dim)
    throw ValidationError("nonproto_features shape does not match n_samples x d_f");
  if (labels.size() != n_samples) throw ValidationError("labels length does not match n_samples");
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!sample_parts(i).allFinite() || !nonproto.row(Index(i)).allFinite())
      throw ValidationError("non-finite feature value in " + sample_msg(i));
    if (labels[i] >= n_classes)
      throw ValidationError("label " + std::to_string(labels[i]) + " out of range [0, " +
                            std::to_string(n_classes) + ") in " + sample_msg(i));
  }
  const auto counts = class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0) throw ValidationError("class " + std::to_string(c) + " has no samples");
}

std::vector<std::size_t> PartFeatureDataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto y : labels)
    if (y < n_classes) ++counts[y];
  return counts;
}

PartFeatureDataset PartFeatureDataset::subset(const std::vector<std::size_t>& indices) const {
  PartFeatureDataset out;
  out.n_samples = indices.size();
  out.n_parts = n_parts;
  out.n_classes = n_classes;
  out.feat_dim = feat_dim;
  out.parts.resize(Index(out.n_samples * n_parts), Index(feat_dim));
  out.nonproto.resize(Index(out.n_samples), Index(feat_dim));
  out.labels.resize(out.n_samples);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto i = indices.at(r);
    out.sample_parts(r) = sample_parts(i);
    out.nonproto.row(Index(r)) = nonproto.row(Index(i));
    out.labels[r] = labels[i];
  }
  return out;
}

bool operator==(const PartFeatureDataset& a, const PartFeatureDataset& b) {
  return a.n_samples == b.n_samples && a.n_parts == b.n_parts && a.n_classes == b.n_classes &&
         a.feat_dim == b.feat_dim && a.parts == b.parts && a.nonproto == b.nonproto && a.labels == b.labels;
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::Csv : DatasetFormat::Binary;
}

std::size_t binary_size(std::size_t n_samples, std::size_t n_parts, std::size_t feat_dim) {
  return kHeaderBytes + 4 * n_samples * (n_parts + 1) * feat_dim + 4 * n_samples;
}

// ---------------------------------------------------------------- binary

namespace {

void write_binary(const PartFeatureDataset& ds, std::ostream& out) {
  detail::put_magic(out, kMagic);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, std::uint32_t(ds.n_samples));
  detail::put_u32(out, std::uint32_t(ds.n_parts));
  detail::put_u32(out, std::uint32_t(ds.n_classes));
  detail::put_u32(out, std::uint32_t(ds.feat_dim));
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    for (std::size_t p = 0; p < ds.n_parts; ++p)
      for (std::size_t d = 0; d < ds.feat_dim; ++d) detail::put_f32(out, float(ds.part(i, p)(Index(d))));
    for (std::size_t d = 0; d < ds.feat_dim; ++d) detail::put_f32(out, float(ds.nonproto(Index(i), Index(d))));
  }
  for (auto y : ds.labels) detail::put_u32(out, y);
}

PartFeatureDataset read_binary(std::istream& in) {
  detail::expect_magic(in, kMagic);
  detail::expect_version(in, kVersion);
  PartFeatureDataset ds;
  ds.n_samples = detail::get_u32(in, "n_samples");
  ds.n_parts = detail::get_u32(in, "K");
  ds.n_classes = detail::get_u32(in, "L");
  ds.feat_dim = detail::get_u32(in, "d_f");
  if (ds.n_parts == 0 || ds.feat_dim == 0 || ds.n_classes == 0)
    throw FormatError("header declares a zero K, L or d_f");
  ds.parts.resize(Index(ds.n_samples * ds.n_parts), Index(ds.feat_dim));
  ds.nonproto.resize(Index(ds.n_samples), Index(ds.feat_dim));
  ds.labels.resize(ds.n_samples);
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    for (std::size_t p = 0; p < ds.n_parts; ++p)
      for (std::size_t d = 0; d < ds.feat_dim; ++d) ds.part(i, p)(Index(d)) = detail::get_f32(in, "features");
    for (std::size_t d = 0; d < ds.feat_dim; ++d) ds.nonproto(Index(i), Index(d)) = detail::get_f32(in, "features");
  }
  for (auto& y : ds.labels) y = detail::get_u32(in, "labels");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after label block");
  return ds;
}

// ---------------------------------------------------------------- csv

void write_float(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
  out.write(buf, res.ptr - buf);
}

void write_csv(const PartFeatureDataset& ds, std::ostream& out) {
  for (std::size_t p = 0; p < ds.n_parts; ++p)
    for (std::size_t d = 0; d < ds.feat_dim; ++d) out << "part" << p << '_' << d << ',';
  for (std::size_t d = 0; d < ds.feat_dim; ++d) out << "g_" << d << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    for (std::size_t p = 0; p < ds.n_parts; ++p)
      for (std::size_t d = 0; d < ds.feat_dim; ++d) {
        write_float(out, ds.part(i, p)(Index(d)));
        out << ',';
      }
    for (std::size_t d = 0; d < ds.feat_dim; ++d) {
      write_float(out, ds.nonproto(Index(i), Index(d)));
      out << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

PartFeatureDataset read_csv(std::istream& in, std::size_t n_classes_hint) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.empty() || header.back() != "label") throw FormatError("CSV header must end with a label column");

  std::size_t n_g = 0;
  std::size_t n_part_cols = 0;
  std::size_t max_part = 0;
  for (std::size_t c = 0; c + 1 < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("g_", 0) == 0) {
      ++n_g;
    } else if (h.rfind("part", 0) == 0) {
      if (n_g != 0) throw FormatError("part columns must precede g columns");
      ++n_part_cols;
      const auto us = h.find('_');
      if (us == std::string::npos) throw FormatError("bad part column name \"" + h + "\"");
      max_part = std::max<std::size_t>(max_part, std::stoul(h.substr(4, us - 4)));
    } else {
      throw FormatError("unexpected CSV column \"" + h + "\"");
    }
  }
  if (n_g == 0) throw FormatError("CSV has no g_ columns");
  PartFeatureDataset ds;
  ds.feat_dim = n_g;
  ds.n_parts = max_part + 1;
  if (n_part_cols != ds.n_parts * ds.feat_dim) throw FormatError("part column count is not K x d_f");

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) +
                            " columns, got " + std::to_string(cells.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& s = cells[c];
      float f = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), f);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("row " + std::to_string(row_no) + ": cannot parse \"" + s + "\"");
      if (!std::isfinite(f))
        throw ValidationError("non-finite feature value in row " + std::to_string(row_no));
      values[c] = f;
    }
    const double label = values.back();
    if (label < 0 || label != std::floor(label)) throw ValidationError("row " + std::to_string(row_no) + ": bad label");
    const auto y = std::uint32_t(label);
    if (n_classes_hint != 0 && y >= n_classes_hint)
      throw ValidationError("row " + std::to_string(row_no) + ": label " + std::to_string(y) + " >= L = " +
                            std::to_string(n_classes_hint));
    max_label = std::max(max_label, y);
    rows.push_back(std::move(values));
  }
  ds.n_samples = rows.size();
  ds.n_classes = n_classes_hint != 0 ? n_classes_hint : std::size_t(max_label) + 1;
  ds.parts.resize(Index(ds.n_samples * ds.n_parts), Index(ds.feat_dim));
  ds.nonproto.resize(Index(ds.n_samples), Index(ds.feat_dim));
  ds.labels.resize(ds.n_samples);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t c = 0;
    for (std::size_t p = 0; p < ds.n_parts; ++p)
      for (std::size_t d = 0; d < ds.feat_dim; ++d) ds.part(i, p)(Index(d)) = rows[i][c++];
    for (std::size_t d = 0; d < ds.feat_dim; ++d) ds.nonproto(Index(i), Index(d)) = rows[i][c++];
    ds.labels[i] = std::uint32_t(rows[i][c]);
  }
  return ds;
}

}  // namespace

PartFeatureDataset load_dataset(const std::filesystem::path& path, DatasetFormat format, std::size_t n_classes_hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto ds = format == DatasetFormat::Binary ? read_binary(in) : read_csv(in, n_classes_hint);
  ds.validate();
  return ds;
}

void save_dataset(const PartFeatureDataset& ds, const std::filesystem::path& path, DatasetFormat format) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == DatasetFormat::Binary)
    write_binary(ds, out);
  else
    write_csv(ds, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------- synthetic

namespace {

template <typename Rng>
Vector<double> random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> v(static_cast<Index>(dim));
  do {
    for (auto& x : v) x = normal(rng);
  } while (v.norm() == 0.0);
  v.normalize();
  return v.unaryExpr(&round_to_f32).eval();
}

/// Places `count` unit vectors with pairwise distance >= separation into rows
/// [first, first + count) of `out`.
template <typename Rng>
void place_means(RowMatrixXd& out, Index first, std::size_t count, double separation, Rng& rng,
                 const std::string& where) {
  for (std::size_t c = 0; c < count; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const auto candidate = random_unit(std::size_t(out.cols()), rng);
      placed = true;
      for (std::size_t prev = 0; prev < c && placed; ++prev)
        placed = (out.row(first + Index(prev)).transpose() - candidate).norm() >= separation;
      if (placed) out.row(first + Index(c)) = candidate.transpose();
    }
    if (!placed)
      throw GenerationError("could not place mean " + std::to_string(c) + " of " + where + " at separation " +
                            std::to_string(separation) + " after " + std::to_string(kMaxPlacementAttempts) +
                            " attempts; use fewer concepts per cell or a smaller min_separation");
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes == 0 || spec.n_parts == 0 || spec.feat_dim == 0 || spec.samples_per_class == 0 ||
      spec.concepts_per_cell == 0)
    throw std::invalid_argument("synthetic spec counts must all be >= 1");
  if (!(spec.noise_sigma >= 0.0) || !(spec.min_separation >= 0.0))
    throw std::invalid_argument("noise_sigma and min_separation must be non-negative");

  std::mt19937_64 rng(spec.seed);
  const auto L = spec.n_classes, K = spec.n_parts, G = spec.concepts_per_cell, D = spec.feat_dim;

  SyntheticData out;
  auto& truth = out.truth;
  truth.n_classes = L;
  truth.n_parts = K;
  truth.concepts_per_cell = G;
  truth.planted_means.resize(Index(L * K * G), Index(D));
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t p = 0; p < K; ++p)
      place_means(truth.planted_means, Index((j * K + p) * G), G, spec.min_separation, rng,
                  "class " + std::to_string(j) + " part " + std::to_string(p));

  truth.nonproto_means.resize(Index(L), Index(D));
  if (spec.nonproto_class_signal) {
    place_means(truth.nonproto_means, 0, L, spec.min_separation, rng, "the g means");
  } else {
    const auto shared = random_unit(D, rng);
    for (std::size_t j = 0; j < L; ++j) truth.nonproto_means.row(Index(j)) = shared.transpose();
  }

  const auto N = L * spec.samples_per_class;
  auto& ds = out.dataset;
  ds.n_samples = N;
  ds.n_parts = K;
  ds.n_classes = L;
  ds.feat_dim = D;
  ds.parts.resize(Index(N * K), Index(D));
  ds.nonproto.resize(Index(N), Index(D));
  ds.labels.resize(N);
  truth.assignment.assign(N * K, 0);

  std::vector<std::uint32_t> cell(spec.samples_per_class);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t p = 0; p < K; ++p) {
      for (std::size_t s = 0; s < cell.size(); ++s) cell[s] = std::uint32_t(s % G);
      std::shuffle(cell.begin(), cell.end(), rng);
      for (std::size_t s = 0; s < cell.size(); ++s) truth.assignment[(j * spec.samples_per_class + s) * K + p] = cell[s];
    }

  std::normal_distribution<double> noise(0.0, 1.0);
  auto jitter = [&](auto row) {
    for (Index d = 0; d < row.size(); ++d) row(d) = round_to_f32(row(d) + spec.noise_sigma * noise(rng));
  };
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      const auto i = j * spec.samples_per_class + s;
      ds.labels[i] = std::uint32_t(j);
      for (std::size_t p = 0; p < K; ++p) {
        ds.part(i, p) = truth.planted_mean(j, p, truth.assignment[i * K + p]);
        jitter(ds.part(i, p));
      }
      ds.nonproto.row(Index(i)) = truth.nonproto_means.row(Index(j));
      jitter(ds.nonproto.row(Index(i)));
    }
  return out;
}

std::vector<std::vector<std::size_t>> split_kfold(const PartFeatureDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_kfold requires k >= 2");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] < k)
      throw StratificationError("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                " samples, fewer than k = " + std::to_string(k));

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < ds.n_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.n_samples; ++i)
      if (ds.labels[i] == c) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t t = 0; t < members.size(); ++t) folds[(offset + t) % k].push_back(members[t]);
    offset += members.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace pcm
