#include "pcm/artifacts.hpp"

#include "binary_io.hpp"
#include "pcm/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pcm {

using nlohmann::json;

namespace {

constexpr std::uint32_t kVersion = 1;

bool is_json(const std::filesystem::path& path) { return path.extension() == ".json"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json matrix_to_json(const RowMatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

RowMatrixXd matrix_from_json(const json& j, Index cols_if_empty = 0) {
  if (!j.is_array()) throw FormatError("expected an array of arrays");
  const Index rows = Index(j.size());
  const Index cols = rows > 0 ? Index(j[0].size()) : cols_if_empty;
  RowMatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!j[std::size_t(r)].is_array() || Index(j[std::size_t(r)].size()) != cols) throw FormatError("ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = j[std::size_t(r)][std::size_t(c)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector<double>& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector<double> vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector<double>>(values.data(), Index(values.size()));
}

template <typename Fn>
auto parse_guarded(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

std::uint64_t config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t parse_hash_hex(const std::string& hex) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
  if (ec != std::errc() || ptr != hex.data() + hex.size()) throw FormatError("bad config hash \"" + hex + "\"");
  return value;
}

// ---------------------------------------------------------------- centers

void save_centers(const PrototypeCenters& centers, std::uint64_t hash, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& c = centers.centers;
  if (is_json(path)) {
    out << json{{"config_hash", hash_hex(hash)}, {"centers", matrix_to_json(c)}}.dump() << '\n';
  } else {
    detail::put_magic(out, "PCMC");
    detail::put_u32(out, kVersion);
    detail::put_u64(out, hash);
    detail::put_u32(out, std::uint32_t(c.rows()));
    detail::put_u32(out, std::uint32_t(c.cols()));
    for (Index r = 0; r < c.rows(); ++r)
      for (Index d = 0; d < c.cols(); ++d) detail::put_f64(out, c(r, d));
  }
  finish(out, path);
}

Stamped<PrototypeCenters> load_centers(const std::filesystem::path& path) {
  Stamped<PrototypeCenters> out;
  if (is_json(path)) {
    const auto j = read_json(path);
    return parse_guarded(path.string(), [&] {
      out.config_hash = parse_hash_hex(j.at("config_hash").get<std::string>());
      out.value.centers = matrix_from_json(j.at("centers"));
      return out;
    });
  }
  auto in = open_in(path);
  detail::expect_magic(in, "PCMC");
  detail::expect_version(in, kVersion);
  out.config_hash = detail::get_u64(in, "config_hash");
  const auto K = detail::get_u32(in, "K");
  const auto D = detail::get_u32(in, "d_f");
  out.value.centers.resize(K, D);
  for (Index r = 0; r < Index(K); ++r)
    for (Index d = 0; d < Index(D); ++d) out.value.centers(r, d) = detail::get_f64(in, "centers");
  return out;
}

// ---------------------------------------------------------------- book

json book_to_json(const ConceptBook& book) {
  json entries = json::array();
  for (const auto& e : book.entries)
    entries.push_back({{"class", e.cls},
                       {"part", e.part},
                       {"local_id", e.local_id},
                       {"member_count", e.member_count},
                       {"centroid", vector_to_json(e.centroid)}});
  return {{"d_f", book.feat_dim}, {"entries", std::move(entries)}};
}

ConceptBook book_from_json(const json& j) {
  return parse_guarded("concept book", [&] {
    ConceptBook book;
    book.feat_dim = j.at("d_f").get<std::size_t>();
    for (const auto& e : j.at("entries"))
      book.entries.push_back({e.at("class").get<std::uint32_t>(), e.at("part").get<std::uint32_t>(),
                              e.at("local_id").get<std::uint32_t>(), e.at("member_count").get<std::uint32_t>(),
                              vector_from_json(e.at("centroid"))});
    book.validate();
    return book;
  });
}

void save_book(const ConceptBook& book, std::uint64_t hash, const std::filesystem::path& path) {
  book.validate();
  auto out = open_out(path);
  if (is_json(path)) {
    auto j = book_to_json(book);
    j["config_hash"] = hash_hex(hash);
    out << j.dump() << '\n';
  } else {
    detail::put_magic(out, "PCMB");
    detail::put_u32(out, kVersion);
    detail::put_u64(out, hash);
    detail::put_u32(out, std::uint32_t(book.feat_dim));
    detail::put_u32(out, std::uint32_t(book.size()));
    for (const auto& e : book.entries) {
      detail::put_u32(out, e.cls);
      detail::put_u32(out, e.part);
      detail::put_u32(out, e.local_id);
      detail::put_u32(out, e.member_count);
      for (Index d = 0; d < e.centroid.size(); ++d) detail::put_f64(out, e.centroid(d));
    }
  }
  finish(out, path);
}

Stamped<ConceptBook> load_book(const std::filesystem::path& path) {
  Stamped<ConceptBook> out;
  if (is_json(path)) {
    const auto j = read_json(path);
    out.value = book_from_json(j);
    out.config_hash = parse_guarded(path.string(), [&] { return parse_hash_hex(j.at("config_hash").get<std::string>()); });
    return out;
  }
  auto in = open_in(path);
  detail::expect_magic(in, "PCMB");
  detail::expect_version(in, kVersion);
  out.config_hash = detail::get_u64(in, "config_hash");
  auto& book = out.value;
  book.feat_dim = detail::get_u32(in, "d_f");
  const auto d_c = detail::get_u32(in, "d_c");
  for (std::uint32_t e = 0; e < d_c; ++e) {
    ConceptEntry entry;
    entry.cls = detail::get_u32(in, "class");
    entry.part = detail::get_u32(in, "part");
    entry.local_id = detail::get_u32(in, "local_id");
    entry.member_count = detail::get_u32(in, "member_count");
    entry.centroid.resize(Index(book.feat_dim));
    for (Index d = 0; d < entry.centroid.size(); ++d) entry.centroid(d) = detail::get_f64(in, "centroid");
    book.entries.push_back(std::move(entry));
  }
  book.validate();
  return out;
}

// ---------------------------------------------------------------- head

json head_to_json(const SparseHead& head) {
  return {{"W1", matrix_to_json(head.W1)},
          {"W2", matrix_to_json(head.W2)},
          {"b", vector_to_json(head.b)},
          {"lambda", head.lambda},
          {"gamma", head.gamma}};
}

SparseHead head_from_json(const json& j) {
  return parse_guarded("head", [&] {
    SparseHead head;
    head.b = vector_from_json(j.at("b"));
    head.W1 = matrix_from_json(j.at("W1"), head.b.size());
    head.W2 = matrix_from_json(j.at("W2"), head.b.size());
    head.lambda = j.at("lambda").get<double>();
    head.gamma = j.at("gamma").get<double>();
    if (head.W1.cols() != head.b.size() || head.W2.cols() != head.b.size())
      throw FormatError("head: W1, W2 and b disagree on the class count");
    return head;
  });
}

void save_head(const SparseHead& head, std::uint64_t hash, const std::filesystem::path& path) {
  auto out = open_out(path);
  if (is_json(path)) {
    auto j = head_to_json(head);
    j["config_hash"] = hash_hex(hash);
    out << j.dump() << '\n';
  } else {
    detail::put_magic(out, "PCMH");
    detail::put_u32(out, kVersion);
    detail::put_u64(out, hash);
    detail::put_u32(out, std::uint32_t(head.n_concepts()));
    detail::put_u32(out, std::uint32_t(head.feat_dim()));
    detail::put_u32(out, std::uint32_t(head.n_classes()));
    detail::put_f64(out, head.lambda);
    detail::put_f64(out, head.gamma);
    for (const auto* m : {&head.W1, &head.W2})
      for (Index r = 0; r < m->rows(); ++r)
        for (Index c = 0; c < m->cols(); ++c) detail::put_f64(out, (*m)(r, c));
    for (Index c = 0; c < head.b.size(); ++c) detail::put_f64(out, head.b(c));
  }
  finish(out, path);
}

Stamped<SparseHead> load_head(const std::filesystem::path& path) {
  Stamped<SparseHead> out;
  if (is_json(path)) {
    const auto j = read_json(path);
    out.value = head_from_json(j);
    out.config_hash = parse_guarded(path.string(), [&] { return parse_hash_hex(j.at("config_hash").get<std::string>()); });
    return out;
  }
  auto in = open_in(path);
  detail::expect_magic(in, "PCMH");
  detail::expect_version(in, kVersion);
  out.config_hash = detail::get_u64(in, "config_hash");
  const Index d_c = detail::get_u32(in, "d_c");
  const Index d_f = detail::get_u32(in, "d_f");
  const Index L = detail::get_u32(in, "L");
  auto& head = out.value;
  head.lambda = detail::get_f64(in, "lambda");
  head.gamma = detail::get_f64(in, "gamma");
  head.W1.resize(d_c, L);
  head.W2.resize(d_f, L);
  head.b.resize(L);
  for (auto* m : {&head.W1, &head.W2})
    for (Index r = 0; r < m->rows(); ++r)
      for (Index c = 0; c < m->cols(); ++c) (*m)(r, c) = detail::get_f64(in, "weights");
  for (Index c = 0; c < L; ++c) head.b(c) = detail::get_f64(in, "bias");
  return out;
}

void check_compatible(const ConceptBook& book, const SparseHead& head) {
  if (book.size() != head.n_concepts())
    throw CompatibilityError("concept book has d_c = " + std::to_string(book.size()) + " but the head expects " +
                             std::to_string(head.n_concepts()));
  if (book.feat_dim != head.feat_dim())
    throw CompatibilityError("concept book has d_f = " + std::to_string(book.feat_dim) + " but the head expects " +
                             std::to_string(head.feat_dim()));
}

// ---------------------------------------------------------------- reports

json report_to_json(const MetricReport& r) {
  json faith = json::object();
  for (const auto& [n, drop] : r.faithfulness) faith[std::to_string(n)] = drop;
  return {{"faithfulness", faith},
          {"stability", r.stability},
          {"consistency_intra", r.consistency_intra},
          {"consistency_inter", r.consistency_inter},
          {"sparseness", r.sparseness},
          {"accuracy", {{"full", r.accuracy}, {"concepts_only", r.accuracy_concepts_only}, {"nonproto_only", r.accuracy_nonproto_only}}},
          {"n_concepts", r.n_concepts},
          {"config_hash", r.config_hash},
          {"seed", r.seed},
          {"config", r.config}};
}

void validate_report_json(const json& j) {
  auto fail = [](const std::string& field, const std::string& why) { throw FormatError("report." + field + ": " + why); };
  auto number_in = [&](const json& obj, const std::string& field, double lo, double hi, const std::string& path) {
    if (!obj.contains(field)) fail(path + field, "missing");
    const auto& v = obj.at(field);
    if (!v.is_number()) fail(path + field, "not a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) fail(path + field, "out of range");
  };
  if (!j.is_object()) fail("", "not an object");
  if (!j.contains("faithfulness") || !j.at("faithfulness").is_object() || j.at("faithfulness").empty())
    fail("faithfulness", "missing or empty");
  for (const auto& [key, value] : j.at("faithfulness").items()) {
    if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos) fail("faithfulness", "bad key " + key);
    if (!value.is_number() || !std::isfinite(value.get<double>())) fail("faithfulness." + key, "not a finite number");
  }
  number_in(j, "stability", 0, 100, "");
  number_in(j, "consistency_intra", -100, 100, "");
  number_in(j, "consistency_inter", -100, 100, "");
  number_in(j, "sparseness", 0, 100, "");
  if (!j.contains("accuracy") || !j.at("accuracy").is_object()) fail("accuracy", "missing");
  for (const char* k : {"full", "concepts_only", "nonproto_only"}) number_in(j.at("accuracy"), k, 0, 100, "accuracy.");
  if (!j.contains("n_concepts") || !j.at("n_concepts").is_number_unsigned()) fail("n_concepts", "missing");
  if (!j.contains("config_hash") || !j.at("config_hash").is_string() || j.at("config_hash").get<std::string>().size() != 16)
    fail("config_hash", "must be a 16-digit hex string");
  if (!j.contains("seed") || !j.at("seed").is_number_unsigned()) fail("seed", "missing");
  if (!j.contains("config") || !j.at("config").is_object()) fail("config", "missing");
}

std::string report_csv_header(const MetricReport& r) {
  std::ostringstream out;
  out << "config_hash,seed,d_c,accuracy,accuracy_concepts_only,accuracy_nonproto_only";
  for (const auto& [n, drop] : r.faithfulness) out << ",F" << n;
  out << ",stability,consistency_intra,consistency_inter,sparseness\n";
  return out.str();
}

std::string report_csv_row(const MetricReport& r) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << r.config_hash << ',' << r.seed << ',' << r.n_concepts << ',' << r.accuracy << ',' << r.accuracy_concepts_only << ','
      << r.accuracy_nonproto_only;
  for (const auto& [n, drop] : r.faithfulness) out << ',' << drop;
  out << ',' << r.stability << ',' << r.consistency_intra << ',' << r.consistency_inter << ',' << r.sparseness << '\n';
  return out.str();
}

std::string cav_csv(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Index k = 0; k < cavs.z.cols(); ++k) out << 'z' << '_' << k << ',';
  for (Index d = 0; d < cavs.g.cols(); ++d) out << "g_" << d << ',';
  out << "label\n";
  for (Index i = 0; i < cavs.z.rows(); ++i) {
    for (Index k = 0; k < cavs.z.cols(); ++k) out << cavs.z(i, k) << ',';
    for (Index d = 0; d < cavs.g.cols(); ++d) out << cavs.g(i, d) << ',';
    out << labels.at(std::size_t(i)) << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

}  // namespace pcm
