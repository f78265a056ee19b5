#include "pcm/cli.hpp"

#include "pcm/artifacts.hpp"
#include "pcm/error.hpp"
#include "pcm/occlusion.hpp"
#include "pcm/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace pcm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Error raised outside a library call, tagged with the failing stage.
struct StageFailure : Error {
  using Error::Error;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw StageFailure(name + ": " + e.what());
  }
}

struct MiningFlags {
  double eps = 0;           // 0 = per-cell heuristic
  std::size_t min_pts = 0;  // 0 = per-cell heuristic
  double eps_scale = 2.0;

  MiningParams params() const {
    MiningParams p;
    if (eps > 0) p.eps = eps;
    if (min_pts > 0) p.min_pts = min_pts;
    p.eps_scale = eps_scale;
    return p;
  }
};

void add_mining_options(CLI::App* cmd, MiningFlags& m) {
  cmd->add_option("--eps", m.eps, "DBSCAN radius (0 = median nearest-neighbour heuristic)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-pts", m.min_pts, "DBSCAN core size (0 = max(3, cell/20))");
  cmd->add_option("--eps-scale", m.eps_scale, "multiplier of the median nearest-neighbour distance")->check(CLI::PositiveNumber);
}

void add_head_options(CLI::App* cmd, HeadTrainConfig& h) {
  cmd->add_option("--lambda", h.lambda, "sparsity strength")->check(CLI::NonNegativeNumber);
  cmd->add_option("--gamma", h.gamma, "L1 share of the elastic net")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--beta", h.beta, "classification loss weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--head-lr", h.lr, "initial proximal step")->check(CLI::PositiveNumber);
  cmd->add_option("--head-epochs", h.epochs, "head epochs");
  cmd->add_option("--head-batch", h.batch_size, "head mini-batch size (0 = full batch)");
}

PartFeatureDataset read_dataset(const std::string& path) {
  return stage("load dataset", [&] { return load_dataset(path, format_from_path(path)); });
}

fs::path sibling(const fs::path& path, const std::string& new_extension) {
  auto p = path;
  p.replace_extension(new_extension);
  return p;
}

double f3_of(const CavMatrix& cavs, const std::vector<std::uint32_t>& labels, const SparseHead& head) {
  return faithfulness(cavs, labels, head, {3}).at(3);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept mining, sparse concept classification and explainability metrics over part features", "pcm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML configuration file; command-line flags override it");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every random choice");
  std::string output;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a planted-concept dataset and its ground truth");
  SyntheticSpec spec;
  std::string truth_path;
  gen->add_option("--classes", spec.n_classes)->check(CLI::PositiveNumber);
  gen->add_option("--parts", spec.n_parts)->check(CLI::PositiveNumber);
  gen->add_option("--dim", spec.feat_dim)->check(CLI::PositiveNumber);
  gen->add_option("--per-class", spec.samples_per_class)->check(CLI::PositiveNumber);
  gen->add_option("--concepts", spec.concepts_per_cell, "planted concepts per (class, part)")->check(CLI::PositiveNumber);
  gen->add_option("--sigma", spec.noise_sigma)->check(CLI::NonNegativeNumber);
  gen->add_option("--min-sep", spec.min_separation)->check(CLI::NonNegativeNumber);
  bool no_g_signal = false;
  gen->add_flag("--no-g-signal", no_g_signal, "give every class the same g mean");
  gen->add_option("-o,--output", output, "dataset path (.csv selects CSV)")->required();
  gen->add_option("--truth", truth_path, "ground-truth JSON (default: <output>.truth.json)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "staged training followed by the full metric suite");
  PipelineConfig pcfg;
  MiningFlags pmine;
  std::string data_path;
  pipeline->add_option("--data", data_path)->required();
  pipeline->add_option("-o,--output", output, "artifact directory")->required();
  pipeline->add_option("--m1", pcfg.mcm.m1)->check(CLI::NonNegativeNumber);
  pipeline->add_option("--m2", pcfg.mcm.m2)->check(CLI::NonNegativeNumber);
  pipeline->add_option("--alpha", pcfg.mcm.alpha)->check(CLI::NonNegativeNumber);
  pipeline->add_option("--proto-lr", pcfg.mcm.lr)->check(CLI::PositiveNumber);
  pipeline->add_option("--proto-epochs", pcfg.mcm.epochs);
  pipeline->add_option("--proto-batch", pcfg.mcm.batch_size)->check(CLI::PositiveNumber);
  pipeline->add_option("--remine-interval", pcfg.remine_interval)->check(CLI::PositiveNumber);
  pipeline->add_option("--folds", pcfg.stability_folds, "stability folds (0 disables)");
  pipeline->add_option("--faithfulness-n", pcfg.faithfulness_n)->delimiter(',');
  add_mining_options(pipeline, pmine);
  add_head_options(pipeline, pcfg.head);

  // mine
  auto* mine = app.add_subcommand("mine", "mine a concept book");
  MiningFlags mflags;
  mine->add_option("--data", data_path)->required();
  mine->add_option("-o,--output", output, "book path (.json or binary)")->required();
  add_mining_options(mine, mflags);

  // merge
  auto* merge = app.add_subcommand("merge", "compress a concept book by agglomerative merging");
  std::string book_path, head_path;
  MergeConfig merge_cfg;
  int merge_level = 1;
  HeadTrainConfig merge_head;
  merge->add_option("--data", data_path)->required();
  merge->add_option("--book", book_path)->required();
  merge->add_option("--head", head_path)->required();
  merge->add_option("--threshold", merge_cfg.threshold_pct, "percent of the largest centroid distance")->check(CLI::Range(0.0, 100.0));
  merge->add_option("--level", merge_level, "1 within cell, 2 within class, 3 global")->check(CLI::Range(1, 3));
  merge->add_option("-o,--output", output, "merged book path");
  add_head_options(merge, merge_head);

  // train
  auto* train = app.add_subcommand("train", "train the sparse head on a concept book");
  HeadTrainConfig train_cfg;
  train->add_option("--data", data_path)->required();
  train->add_option("--book", book_path)->required();
  train->add_option("-o,--output", output, "head path (.json or binary)")->required();
  add_head_options(train, train_cfg);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate the metric suite for a book and head");
  MiningFlags eflags;
  std::size_t eval_folds = 10;
  std::vector<std::size_t> eval_n{1, 2, 3, 4, 5};
  bool force = false;
  eval->add_option("--data", data_path)->required();
  eval->add_option("--book", book_path)->required();
  eval->add_option("--head", head_path)->required();
  eval->add_option("--folds", eval_folds, "stability folds (0 disables)");
  eval->add_option("--faithfulness-n", eval_n)->delimiter(',');
  eval->add_flag("--force", force, "accept artifacts stamped with different config hashes");
  eval->add_option("-o,--output", output, "report JSON path (a .csv row is written alongside)");
  add_mining_options(eval, eflags);

  // occlude
  auto* occlude = app.add_subcommand("occlude", "accuracy and F(3) under part occlusion");
  OcclusionConfig occ;
  occlude->add_option("--data", data_path)->required();
  occlude->add_option("--book", book_path)->required();
  occlude->add_option("--head", head_path)->required();
  occlude->add_option("--fractions", occ.fractions)->delimiter(',')->check(CLI::Range(0.0, 1.0));
  occlude->add_option("-o,--output", output, "curve CSV path (an .svg chart is written alongside)");

  // export
  auto* exp = app.add_subcommand("export", "export CAVs (with --book) or convert the dataset format");
  exp->add_option("--data", data_path)->required();
  exp->add_option("--book", book_path);
  exp->add_option("-o,--output", output)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "pcm: usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      spec.seed = seed;
      spec.nonproto_class_signal = !no_g_signal;
      const auto data = stage("generate", [&] { return generate_synthetic(spec); });
      stage("write dataset", [&] { save_dataset(data.dataset, output, format_from_path(output)); });
      const auto& t = data.truth;
      json truth = {{"n_classes", t.n_classes},
                    {"n_parts", t.n_parts},
                    {"concepts_per_cell", t.concepts_per_cell},
                    {"seed", spec.seed},
                    {"planted_means", json::array()},
                    {"nonproto_means", json::array()},
                    {"assignment", t.assignment}};
      for (Index r = 0; r < t.planted_means.rows(); ++r)
        truth["planted_means"].push_back(std::vector<double>(t.planted_means.row(r).begin(), t.planted_means.row(r).end()));
      for (Index r = 0; r < t.nonproto_means.rows(); ++r)
        truth["nonproto_means"].push_back(std::vector<double>(t.nonproto_means.row(r).begin(), t.nonproto_means.row(r).end()));
      if (truth_path.empty()) truth_path = sibling(output, ".truth.json").string();
      stage("write ground truth", [&] { write_text(truth_path, truth.dump() + "\n"); });
      out << "wrote " << output << " (" << data.dataset.n_samples << " samples) and " << truth_path << '\n';
    } else if (pipeline->parsed()) {
      const auto ds = read_dataset(data_path);
      pcfg.mining = pmine.params();
      pcfg.seed = seed;
      const auto result = stage("pipeline", [&] { return run_pipeline(ds, pcfg); });
      stage("write artifacts", [&] { write_pipeline_artifacts(result, output); });
      out << std::fixed << std::setprecision(2) << "d_c " << result.book.size() << ", mining passes "
          << result.mining_passes << ", accuracy " << result.report.accuracy << "%, consistency "
          << result.report.consistency_intra << " / " << result.report.consistency_inter << ", config "
          << result.report.config_hash << '\n';
    } else if (mine->parsed()) {
      const auto ds = read_dataset(data_path);
      const auto params = mflags.params();
      const auto book = stage("mine", [&] { return mine_concepts(ds, params); });
      const auto hash = config_hash({{"mine", {{"eps", mflags.eps}, {"min_pts", mflags.min_pts}, {"eps_scale", mflags.eps_scale}}},
                                     {"dataset", hash_hex(dataset_fingerprint(ds))}});
      stage("write book", [&] { save_book(book, hash, output); });
      out << "d_c " << book.size() << '\n';
    } else if (train->parsed()) {
      const auto ds = read_dataset(data_path);
      const auto book = stage("load book", [&] { return load_book(book_path); });
      train_cfg.seed = seed;
      const auto cavs = stage("cav", [&] { return compute_cav_batch(ds, book.value); });
      const auto fit = stage("train", [&] { return train_head(cavs, ds.labels, ds.n_classes, train_cfg); });
      stage("write head", [&] { save_head(fit.head, book.config_hash, output); });
      out << std::fixed << std::setprecision(2) << "training accuracy " << 100.0 * head_accuracy(cavs, ds.labels, fit.head)
          << "%, objective " << std::setprecision(6) << fit.objective.back() << '\n';
    } else if (eval->parsed()) {
      const auto ds = read_dataset(data_path);
      const auto book = stage("load book", [&] { return load_book(book_path); });
      const auto head = stage("load head", [&] { return load_head(head_path); });
      check_compatible(book.value, head.value);
      if (book.config_hash != head.config_hash && !force)
        throw CompatibilityError("book and head carry different config hashes (" + hash_hex(book.config_hash) + " vs " +
                                 hash_hex(head.config_hash) + "); pass --force to evaluate anyway");
      auto report = stage("eval", [&] {
        return evaluate(ds, book.value, head.value, eflags.params(), eval_n, eval_folds, seed);
      });
      report.config_hash = hash_hex(head.config_hash);
      report.config = {{"folds", eval_folds},
                       {"faithfulness_n", eval_n},
                       {"eps", eflags.eps},
                       {"min_pts", eflags.min_pts},
                       {"eps_scale", eflags.eps_scale}};
      const auto text = report_to_json(report).dump(2) + "\n";
      if (output.empty()) {
        out << text;
      } else {
        write_text(output, text);
        write_text(sibling(output, ".csv"), report_csv_header(report) + report_csv_row(report));
        out << "wrote " << output << '\n';
      }
    } else if (merge->parsed()) {
      const auto ds = read_dataset(data_path);
      const auto book = stage("load book", [&] { return load_book(book_path); });
      const auto head = stage("load head", [&] { return load_head(head_path); });
      check_compatible(book.value, head.value);
      merge_cfg.level = static_cast<MergeLevel>(merge_level);
      const auto merged = stage("merge", [&] { return merge_centroids(book.value, merge_cfg); });
      const auto before = compute_cav_batch(ds, book.value);
      const auto after = compute_cav_batch(ds, merged);
      merge_head.seed = seed;
      // An unchanged book keeps its head; otherwise the head is retrained on the merged concepts.
      const auto merged_head = merged == book.value ? head.value : stage("retrain head", [&] {
        return train_head(after, ds.labels, ds.n_classes, merge_head).head;
      });
      out << "stage,threshold_pct,level,d_c,accuracy,F3\n" << std::setprecision(10);
      out << "before," << merge_cfg.threshold_pct << ',' << merge_level << ',' << book.value.size() << ','
          << 100.0 * head_accuracy(before, ds.labels, head.value) << ',' << f3_of(before, ds.labels, head.value) << '\n';
      out << "after," << merge_cfg.threshold_pct << ',' << merge_level << ',' << merged.size() << ','
          << 100.0 * head_accuracy(after, ds.labels, merged_head) << ',' << f3_of(after, ds.labels, merged_head) << '\n';
      if (!output.empty()) stage("write book", [&] { save_book(merged, book.config_hash, output); });
    } else if (occlude->parsed()) {
      const auto ds = read_dataset(data_path);
      const auto book = stage("load book", [&] { return load_book(book_path); });
      const auto head = stage("load head", [&] { return load_head(head_path); });
      check_compatible(book.value, head.value);
      occ.seed = seed;
      const auto curve = stage("occlude", [&] { return occlusion_eval(ds, head.value, book.value, occ); });
      const auto csv = occlusion_csv(curve);
      if (output.empty()) {
        out << csv;
      } else {
        write_text(output, csv);
        write_text(sibling(output, ".svg"), occlusion_svg(curve));
        out << "wrote " << output << '\n';
      }
    } else if (exp->parsed()) {
      const auto ds = read_dataset(data_path);
      if (book_path.empty()) {
        stage("write dataset", [&] { save_dataset(ds, output, format_from_path(output)); });
      } else {
        const auto book = stage("load book", [&] { return load_book(book_path); });
        const auto cavs = stage("cav", [&] { return compute_cav_batch(ds, book.value); });
        write_text(output, cav_csv(cavs, ds.labels));
      }
      out << "wrote " << output << '\n';
    }
  } catch (const std::exception& e) {
    err << "pcm: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace pcm
