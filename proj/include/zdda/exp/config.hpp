// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EXP_CONFIG_HPP_
#define ZDDA_EXP_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "zdda/net/sgd.hpp"

namespace zdda {

// Hyperparameters serialized per training stage (seeds always derive from
// the master seed, so they are not part of the config).
struct StageHyper {
  int batch_size = 32;
  double learning_rate = 0.01;
  long iterations = 0;
  double momentum = 0.9;
  bool operator==(const StageHyper&) const = default;

  TrainHyper with_seed(std::uint64_t seed, double w_softmax = 1.0,
                       double w_l2 = 1.0) const {
    return TrainHyper{batch_size, learning_rate, iterations,
                      momentum,   w_softmax,     w_l2, seed};
  }
};

struct NoisePlan {
  std::vector<std::string> models = {"black_image"};
  std::vector<double> levels = {0, 20, 40, 60, 80, 100};
  double p_train = 20.0;  // training-time blackening percent (step 3)
  bool operator==(const NoisePlan&) const = default;
};

struct SubsamplePlan {
  int tr_per_class = 0;    // 0 = full dataset
  int ti_per_class = 0;
  int test_per_class = 0;  // applies to fusion/noise-grid test pairs
  bool operator==(const SubsamplePlan&) const = default;
};

struct SimilarityPlan {
  std::string embeddings_path;
  std::vector<std::string> task_labels;
  std::vector<std::string> ti_labels;
  bool operator==(const SimilarityPlan&) const = default;
};

// Threshold assertions evaluated in --check mode.
struct CheckSpec {
  std::string report;            // e.g. "zdda2.target"
  std::string metric = "overall";  // "overall" or "mean_per_class"
  double min_value = -1.0;       // negative = unconstrained
  double max_value = -1.0;
  bool operator==(const CheckSpec&) const = default;
};

// One config file = one experiment.
struct ExperimentConfig {
  std::string name;
  std::string tr_source;  // gray task dataset id, e.g. "mnist"
  std::string tr_target;  // its colored variant id, e.g. "mnist-m"
  std::string ti_pair;    // task-irrelevant gray dataset id
  std::string backbone = "lenet";
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string data_root;  // empty -> $ZDDA_DATA_ROOT
  std::string backgrounds_train;
  std::string backgrounds_test;  // empty -> same as train (flagged)

  StageHyper t_pretrain{32, 0.01, 10000, 0.9};
  StageHyper step1{32, 1e-3, 10000, 0.9};
  StageHyper step2{32, 1e-4, 1000, 0.9};
  StageHyper step3{32, 1e-3, 1000, 0.9};
  StageHyper baseline{32, 0.01, 10000, 0.9};
  double w_softmax = 1e3;
  double w_l2 = 1.0;

  NoisePlan noise;
  SubsamplePlan subsample;
  std::vector<std::string> evaluations;
  SimilarityPlan similarity;
  std::vector<CheckSpec> checks;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parse/serialize round-trip exactly. Parsing rejects configs that violate
// the zero-shot constraint (task-relevant T-I choice) or name unknown
// evaluations.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);
void validate_config(const ExperimentConfig& config);

// Content hash of the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace zdda

#endif  // ZDDA_EXP_CONFIG_HPP_
