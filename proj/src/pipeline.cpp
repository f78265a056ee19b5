#include "pcm/pipeline.hpp"

#include "pcm/cav.hpp"
#include "pcm/error.hpp"

#include <bit>
#include <stdexcept>

namespace pcm {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (remine_interval < 1) throw std::invalid_argument("remine_interval must be >= 1");
  if (!(mcm.lr > 0) || mcm.batch_size == 0) throw std::invalid_argument("prototype lr and batch size must be positive");
  if (!(head.lr > 0)) throw std::invalid_argument("head lr must be positive");
  if (!(head.lambda >= 0) || !(head.gamma >= 0 && head.gamma <= 1)) throw std::invalid_argument("need lambda >= 0 and gamma in [0, 1]");
  if (!(head.beta >= 0)) throw std::invalid_argument("beta must be non-negative");
  if (mining.eps && !(*mining.eps > 0)) throw std::invalid_argument("eps must be positive");
  if (stability_folds == 1) throw std::invalid_argument("stability needs at least 2 folds (0 disables it)");
}

json PipelineConfig::to_json() const {
  json mining_json = {{"eps_scale", mining.eps_scale}};
  mining_json["eps"] = mining.eps ? json(*mining.eps) : json(nullptr);
  mining_json["min_pts"] = mining.min_pts ? json(*mining.min_pts) : json(nullptr);
  return {{"seed", seed},
          {"remine_interval", remine_interval},
          {"stability_folds", stability_folds},
          {"faithfulness_n", faithfulness_n},
          {"mcm",
           {{"m1", mcm.m1},
            {"m2", mcm.m2},
            {"alpha", mcm.alpha},
            {"lr", mcm.lr},
            {"epochs", mcm.epochs},
            {"batch_size", mcm.batch_size},
            {"init_jitter", mcm.init_jitter}}},
          {"mining", mining_json},
          {"head",
           {{"lambda", head.lambda},
            {"gamma", head.gamma},
            {"beta", head.beta},
            {"lr", head.lr},
            {"epochs", head.epochs},
            {"batch_size", head.batch_size},
            {"max_backtracks", head.max_backtracks}}}};
}

std::uint64_t dataset_fingerprint(const PartFeatureDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(ds.n_samples);
  mix(ds.n_parts);
  mix(ds.n_classes);
  mix(ds.feat_dim);
  for (Index k = 0; k < ds.parts.size(); ++k) mix(std::bit_cast<std::uint64_t>(ds.parts.data()[k]));
  for (Index k = 0; k < ds.nonproto.size(); ++k) mix(std::bit_cast<std::uint64_t>(ds.nonproto.data()[k]));
  for (auto y : ds.labels) mix(y);
  return h;
}

std::uint64_t run_hash(const PipelineConfig& cfg, const PartFeatureDataset& ds) {
  return config_hash({{"config", cfg.to_json()}, {"dataset", hash_hex(dataset_fingerprint(ds))}});
}

std::size_t mining_pass_count(std::size_t head_epochs, std::size_t remine_interval) {
  if (remine_interval == 0) throw std::invalid_argument("remine_interval must be >= 1");
  return std::max<std::size_t>(1, (head_epochs + remine_interval - 1) / remine_interval);
}

MetricReport evaluate(const PartFeatureDataset& ds, const ConceptBook& book, const SparseHead& head,
                      const MiningParams& mining, const std::vector<std::size_t>& faithfulness_n,
                      std::size_t stability_folds, std::uint64_t seed) {
  const auto cavs = compute_cav_batch(ds, book);
  MetricReport r;
  r.n_concepts = book.size();
  r.seed = seed;
  r.accuracy = 100.0 * head_accuracy(cavs, ds.labels, head, HeadBlocks::Full);
  r.accuracy_concepts_only = 100.0 * head_accuracy(cavs, ds.labels, head, HeadBlocks::ConceptsOnly);
  r.accuracy_nonproto_only = 100.0 * head_accuracy(cavs, ds.labels, head, HeadBlocks::NonProtoOnly);
  r.faithfulness = faithfulness(cavs, ds.labels, head, faithfulness_n);
  if (stability_folds >= 2) r.stability = stability(ds, stability_folds, mining, seed);
  if (ds.n_classes >= 2) {
    const auto c = consistency(cavs.z, ds.labels);
    r.consistency_intra = c.intra;
    r.consistency_inter = c.inter;
  }
  r.sparseness = book.size() >= 2 ? sparseness(cavs.z) : 100.0;
  return r;
}

PipelineResult run_pipeline(const PartFeatureDataset& ds, const PipelineConfig& cfg) {
  cfg.validate();
  ds.validate();
  PipelineResult result;
  result.config_hash = run_hash(cfg, ds);

  auto mcm = cfg.mcm;
  mcm.seed = cfg.seed;
  result.centers = fit_prototype_centers(ds, mcm);

  // The classification loss weight scales the whole head objective, which
  // for a backtracking proximal step is the same as scaling the step size.
  auto head_cfg = cfg.head;
  head_cfg.lr = cfg.head.lr * cfg.head.beta;

  const auto passes = mining_pass_count(cfg.head.epochs, cfg.remine_interval);
  std::optional<SparseHead> warm;
  std::size_t done = 0;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    auto book = mine_concepts(ds, cfg.mining);
    if (!warm || book != result.book) warm.reset();
    result.book = std::move(book);
    ++result.mining_passes;

    const auto chunk = std::min(cfg.remine_interval, cfg.head.epochs - done);
    const auto cavs = compute_cav_batch(ds, result.book);
    if (head_cfg.lr > 0 && chunk > 0) {
      head_cfg.epochs = chunk;
      head_cfg.seed = cfg.seed + pass;
      auto fit = train_head(cavs, ds.labels, ds.n_classes, head_cfg, warm);
      if (warm) {
        fit.objective.erase(fit.objective.begin());
        result.head.objective.insert(result.head.objective.end(), fit.objective.begin(), fit.objective.end());
        result.head.rejected_steps += fit.rejected_steps;
        result.head.head = std::move(fit.head);
      } else {
        result.head = std::move(fit);
      }
    } else if (!warm) {
      result.head.head = SparseHead::zeros(result.book.size(), ds.feat_dim, ds.n_classes);
      result.head.head.lambda = cfg.head.lambda;
      result.head.head.gamma = cfg.head.gamma;
    }
    warm = result.head.head;
    done += chunk;
  }

  result.report = evaluate(ds, result.book, result.head.head, cfg.mining, cfg.faithfulness_n, cfg.stability_folds, cfg.seed);
  result.report.config = cfg.to_json();
  result.report.config_hash = hash_hex(result.config_hash);
  return result;
}

void write_pipeline_artifacts(const PipelineResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_centers(result.centers.centers, result.config_hash, dir / "centers.pcmc");
  save_book(result.book, result.config_hash, dir / "book.pcmb");
  save_book(result.book, result.config_hash, dir / "book.json");
  save_head(result.head.head, result.config_hash, dir / "head.pcmh");
  save_head(result.head.head, result.config_hash, dir / "head.json");
  write_text(dir / "report.json", report_to_json(result.report).dump(2) + "\n");
  write_text(dir / "report.csv", report_csv_header(result.report) + report_csv_row(result.report));
}

}  // namespace pcm
