#pragma once

#include "pcm/cav.hpp"
#include "pcm/head.hpp"
#include "pcm/mining.hpp"
#include "pcm/partproto.hpp"
#include "pcm/xaimetrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace pcm {

// Model artifacts. Binary layouts are little-endian with f64 payloads:
//
//   PCMC: "PCMC" | version u32 = 1 | config_hash u64 | K u32 | d_f u32 | centers f64[K x d_f]
//   PCMB: "PCMB" | version u32 = 1 | config_hash u64 | d_f u32 | d_c u32 |
//         d_c x (class u32 | part u32 | local_id u32 | member_count u32 | centroid f64[d_f])
//   PCMH: "PCMH" | version u32 = 1 | config_hash u64 | d_c u32 | d_f u32 | L u32 |
//         lambda f64 | gamma f64 | W1 f64[d_c x L] | W2 f64[d_f x L] | b f64[L]
//
// A path ending in ".json" selects the JSON encoding instead. Every file
// records the hash of the configuration that produced it.

/// FNV-1a 64 of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hash_hex(std::uint64_t hash);
std::uint64_t parse_hash_hex(const std::string& hex);

template <typename T>
struct Stamped {
  T value;
  std::uint64_t config_hash = 0;
};

void save_centers(const PrototypeCenters& centers, std::uint64_t hash, const std::filesystem::path& path);
Stamped<PrototypeCenters> load_centers(const std::filesystem::path& path);

void save_book(const ConceptBook& book, std::uint64_t hash, const std::filesystem::path& path);
Stamped<ConceptBook> load_book(const std::filesystem::path& path);

void save_head(const SparseHead& head, std::uint64_t hash, const std::filesystem::path& path);
Stamped<SparseHead> load_head(const std::filesystem::path& path);

nlohmann::json book_to_json(const ConceptBook& book);
ConceptBook book_from_json(const nlohmann::json& j);
nlohmann::json head_to_json(const SparseHead& head);
SparseHead head_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const MetricReport& report);
/// Throws FormatError naming the first missing or mistyped field.
void validate_report_json(const nlohmann::json& j);
std::string report_csv_header(const MetricReport& report);
std::string report_csv_row(const MetricReport& report);

/// One row per sample: z_0..z_{d_c-1}, g_0..g_{d_f-1}, label.
std::string cav_csv(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels);

/// Throws CompatibilityError unless book and head agree on d_c and d_f.
void check_compatible(const ConceptBook& book, const SparseHead& head);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pcm
