#pragma once

#include "pcm/artifacts.hpp"
#include "pcm/dataset.hpp"
#include "pcm/head.hpp"
#include "pcm/mining.hpp"
#include "pcm/partproto.hpp"
#include "pcm/xaimetrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pcm {

/// Staged training: prototype centers first (classification weight 0), then
/// alternating concept mining and head training with classification weight
/// `beta`, re-mining every `remine_interval` head epochs.
struct PipelineConfig {
  McmConfig mcm;
  MiningParams mining;
  HeadTrainConfig head;
  std::size_t remine_interval = 5;
  std::vector<std::size_t> faithfulness_n{1, 2, 3, 4, 5};
  std::size_t stability_folds = 10;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
  nlohmann::json to_json() const;
};

struct PipelineResult {
  CenterFit centers;
  ConceptBook book;
  HeadFit head;
  MetricReport report;
  std::size_t mining_passes = 0;
  std::uint64_t config_hash = 0;
};

/// Order-sensitive fingerprint of the dataset contents.
std::uint64_t dataset_fingerprint(const PartFeatureDataset& ds);

/// Hash identifying (configuration, dataset) for artifact stamping.
std::uint64_t run_hash(const PipelineConfig& cfg, const PartFeatureDataset& ds);

/// Number of mining passes for a head-epoch budget: ceil(epochs / interval), at least one.
std::size_t mining_pass_count(std::size_t head_epochs, std::size_t remine_interval);

PipelineResult run_pipeline(const PartFeatureDataset& ds, const PipelineConfig& cfg);

/// Full metric suite for a trained (book, head) pair on `ds`.
/// `stability_folds` = 0 skips the fold-mining stability run (reported as 0).
MetricReport evaluate(const PartFeatureDataset& ds, const ConceptBook& book, const SparseHead& head,
                      const MiningParams& mining, const std::vector<std::size_t>& faithfulness_n,
                      std::size_t stability_folds, std::uint64_t seed);

/// Writes centers.pcmc, book.pcmb, book.json, head.pcmh, head.json,
/// report.json and report.csv into `dir`.
void write_pipeline_artifacts(const PipelineResult& result, const std::filesystem::path& dir);

}  // namespace pcm
