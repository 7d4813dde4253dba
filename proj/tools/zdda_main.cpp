// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment CLI: dataset synthesis, the three-step training pipeline,
// evaluation reports, result tables and noise-grid heatmaps.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <iostream>

#include "zdda/colorize.hpp"
#include "zdda/dataset_store.hpp"
#include "zdda/eval/similarity.hpp"
#include "zdda/exp/heatmap.hpp"
#include "zdda/exp/tables.hpp"
#include "zdda/idx_io.hpp"
#include "zdda/image_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfigRejected = 2;
constexpr int kExitResolution = 3;
constexpr int kExitCheckFailed = 4;

std::vector<std::string> split_labels(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::string& output, int subsample, bool check,
            const std::string& data_root) {
  zdda::ExperimentConfig cfg = zdda::load_config(config_path);
  if (has_seed) cfg.seed = seed;
  if (!output.empty()) cfg.output_dir = output;
  if (!data_root.empty()) cfg.data_root = data_root;
  if (subsample > 0) {
    cfg.subsample.tr_per_class = subsample;
    cfg.subsample.ti_per_class = subsample;
    cfg.subsample.test_per_class = subsample;
  }
  zdda::validate_config(cfg);

  const zdda::RunRecord record = zdda::run_experiment(cfg);
  std::cout << "run '" << record.name << "' complete\n";
  for (const auto& [key, report] : record.reports)
    std::cout << "  " << key << ": overall "
              << 100.0 * report.overall_accuracy << "%, mean per-class "
              << 100.0 * report.mean_per_class_accuracy << "%\n";
  if (record.similarity)
    std::cout << "  similarity: " << *record.similarity << "\n";
  for (const auto& [name, why] : record.failures)
    std::cout << "  FAILED " << name << ": " << why << "\n";

  if (!record.failures.empty() && check) return kExitCheckFailed;
  if (check) {
    bool all_ok = true;
    for (const auto& outcome : zdda::evaluate_checks(cfg, record)) {
      std::cout << (outcome.passed ? "  CHECK PASS " : "  CHECK FAIL ")
                << outcome.detail << "\n";
      all_ok = all_ok && outcome.passed;
    }
    if (!all_ok) return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_table(const std::vector<std::string>& run_dirs,
              const std::string& layout, const std::string& output) {
  std::vector<zdda::RunRecord> records;
  for (const auto& dir : run_dirs)
    records.push_back(zdda::load_run_record(dir));
  const zdda::TableOutput table = zdda::emit_table(records, layout);
  std::cout << table.text;
  if (!output.empty()) {
    std::ofstream out(output);
    out << table.csv;
    if (!out) throw zdda::FormatError("failed to write " + output);
  }
  return kExitOk;
}

int cmd_heatmap(const std::string& run_dir, std::string output) {
  const zdda::RunRecord record = zdda::load_run_record(run_dir);
  if (record.grid_paths.empty())
    throw zdda::ResolutionError("run has no noise-grid results: " + run_dir);
  if (output.empty()) output = run_dir + "/heatmaps";
  for (const auto& [model, path] : record.grid_paths) {
    std::ifstream in(path);
    if (!in) throw zdda::ResolutionError("missing grid file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    const zdda::NoiseGridResult grid = zdda::grid_from_json(text);
    for (const auto& layout : zdda::emit_heatmap(output, grid))
      std::cout << "wrote " << layout.png_path << "\n";
  }
  return kExitOk;
}

int cmd_similarity(const std::string& labels_a, const std::string& labels_b,
                   const std::string& embeddings) {
  const zdda::EmbeddingTable table = zdda::load_embeddings(embeddings);
  const double s = zdda::semantic_similarity(split_labels(labels_a),
                                             split_labels(labels_b), table);
  std::cout << s << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& dataset_id, const std::string& split,
              const std::string& backgrounds, const std::string& output,
              std::uint64_t seed, const std::string& data_root_flag) {
  std::string root = data_root_flag;
  if (root.empty()) {
    const char* env = std::getenv(zdda::kDataRootEnv);
    if (!env)
      throw zdda::ResolutionError("set --data-root or ZDDA_DATA_ROOT");
    root = env;
  }
  const std::string prefix = split == "train" ? "train" : "t10k";
  const auto resolve = [&](const std::string& kind) {
    namespace fs = std::filesystem;
    fs::path base = fs::path(root) / dataset_id / (prefix + "-" + kind);
    for (const char* ext : {"", ".gz"}) {
      fs::path p = base;
      p += ext;
      if (fs::is_regular_file(p)) return p;
    }
    throw zdda::ResolutionError("dataset file not found: " + base.string());
  };

  const auto gray = zdda::load_idx_dataset(resolve("images-idx3-ubyte"),
                                           resolve("labels-idx1-ubyte"),
                                           dataset_id + "-" + split);
  const zdda::BackgroundCorpus corpus =
      zdda::load_background_corpus(backgrounds);
  auto colored = zdda::colorize_dataset(gray, corpus.images, seed);
  colored.name = dataset_id + "-m-" + split;

  zdda::DatasetManifest manifest;
  manifest.dataset_name = colored.name;
  manifest.source_dataset = gray.name;
  manifest.seed = seed;
  manifest.blend_formula = zdda::kBlendFormulaId;
  manifest.background_corpus_hash = corpus.content_hash;
  zdda::save_dataset_dir(output, colored, manifest);
  std::cout << "wrote " << output << " (" << colored.size() << " images)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(0);  // let Eigen pick the hardware thread count

  CLI::App app{"zero-shot domain adaptation experiments"};
  app.require_subcommand(1);

  // run
  std::string config_path, output, data_root;
  std::uint64_t seed = 0;
  int subsample = 0;
  bool check = false;
  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the master seed");
  run->add_option("--output", output, "override the output directory");
  run->add_option("--subsample-per-class", subsample,
                  "desk-scale per-class subsampling for training and test sets");
  run->add_option("--data-root", data_root, "dataset cache root");
  run->add_flag("--check", check, "verify the config's thresholds (exit 4 on failure)");

  // table
  std::vector<std::string> run_dirs;
  std::string layout = "table4", table_csv;
  auto* table = app.add_subcommand("table", "render a result table from runs");
  table->add_option("run_dirs", run_dirs, "run directories")->required();
  table->add_option("--layout", layout, "table4 or runs");
  table->add_option("--output", table_csv, "also write CSV here");

  // heatmap
  std::string heatmap_run, heatmap_out;
  auto* heatmap = app.add_subcommand("heatmap", "render noise-grid heatmaps");
  heatmap->add_option("run_dir", heatmap_run, "run directory")->required();
  heatmap->add_option("--output", heatmap_out, "output directory");

  // similarity
  std::string labels_a, labels_b, embeddings;
  auto* similarity =
      app.add_subcommand("similarity", "semantic similarity of two label sets");
  similarity->add_option("labelsA", labels_a, "comma-separated labels")
      ->required();
  similarity->add_option("labelsB", labels_b, "comma-separated labels")
      ->required();
  similarity->add_option("--embeddings", embeddings, "word-vector table")
      ->required();

  // synth
  std::string synth_id, synth_split = "train", synth_bg, synth_out,
              synth_root;
  std::uint64_t synth_seed = 0;
  auto* synth =
      app.add_subcommand("synth", "synthesize a colored dataset variant");
  synth->add_option("dataset", synth_id, "gray dataset id")->required();
  synth->add_option("--split", synth_split, "train or test");
  synth->add_option("--backgrounds", synth_bg, "background corpus directory")
      ->required();
  synth->add_option("--output", synth_out, "output dataset directory")
      ->required();
  synth->add_option("--seed", synth_seed, "synthesis seed");
  synth->add_option("--data-root", synth_root, "dataset cache root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, seed, seed_opt->count() > 0, output,
                     subsample, check, data_root);
    if (table->parsed()) return cmd_table(run_dirs, layout, table_csv);
    if (heatmap->parsed()) return cmd_heatmap(heatmap_run, heatmap_out);
    if (similarity->parsed())
      return cmd_similarity(labels_a, labels_b, embeddings);
    if (synth->parsed())
      return cmd_synth(synth_id, synth_split, synth_bg, synth_out, synth_seed,
                       synth_root);
  } catch (const zdda::ConfigError& e) {
    std::cerr << "config rejected: " << e.what() << "\n";
    return kExitConfigRejected;
  } catch (const zdda::ResolutionError& e) {
    std::cerr << "data resolution failed: " << e.what() << "\n";
    return kExitResolution;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
