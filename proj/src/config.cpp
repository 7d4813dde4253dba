// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/exp/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "zdda/rng.hpp"

namespace zdda {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownEvaluations = {
    "zdda2",        "zdda3",      "source_only", "target_only",
    "naive_fusion", "noise_grid", "similarity"};

json hyper_to_json(const StageHyper& h) {
  return json{{"batch_size", h.batch_size},
              {"learning_rate", h.learning_rate},
              {"iterations", h.iterations},
              {"momentum", h.momentum}};
}

StageHyper hyper_from_json(const json& j, const StageHyper& defaults) {
  StageHyper h = defaults;
  h.batch_size = j.value("batch_size", defaults.batch_size);
  h.learning_rate = j.value("learning_rate", defaults.learning_rate);
  h.iterations = j.value("iterations", defaults.iterations);
  h.momentum = j.value("momentum", defaults.momentum);
  return h;
}

// The colored variant id of a gray dataset id.
std::string colored_id(const std::string& gray_id) { return gray_id + "-m"; }

}  // namespace

void validate_config(const ExperimentConfig& c) {
  if (c.name.empty()) throw ConfigError("config: name is required");
  if (c.tr_source.empty() || c.ti_pair.empty())
    throw ConfigError("config: task.tr_source and ti_pair are required");
  if (c.tr_target != colored_id(c.tr_source))
    throw ConfigError("config: tr_target must be the colored variant of "
                      "tr_source (" + colored_id(c.tr_source) + ")");
  // Zero-shot constraint: the T-I pair set must not be task-relevant.
  if (c.ti_pair == c.tr_source || colored_id(c.ti_pair) == c.tr_target)
    throw ConfigError("config: ti_pair '" + c.ti_pair +
                      "' is task-relevant for task " + c.tr_source + "->" +
                      c.tr_target + "; the zero-shot setting forbids it");
  if (c.backbone != "lenet")
    throw ConfigError("config: unknown backbone '" + c.backbone + "'");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir is required");
  for (const auto& e : c.evaluations)
    if (!kKnownEvaluations.count(e))
      throw ConfigError("config: unknown evaluation '" + e + "'");
  for (const auto& m : c.noise.models)
    if (m != "black_image" && m != "black_rectangle")
      throw ConfigError("config: unknown noise model '" + m + "'");
  for (double p : c.noise.levels)
    if (p < 0 || p > 100)
      throw ConfigError("config: noise levels must be percents in [0,100]");
  if (c.noise.p_train < 0 || c.noise.p_train > 100)
    throw ConfigError("config: p_train must be in [0,100]");
  for (const auto& chk : c.checks)
    if (chk.metric != "overall" && chk.metric != "mean_per_class")
      throw ConfigError("config: unknown check metric '" + chk.metric + "'");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig c;
  try {
    c.name = j.value("name", "");
    const json task = j.value("task", json::object());
    c.tr_source = task.value("tr_source", "");
    c.tr_target = task.value("tr_target", colored_id(c.tr_source));
    c.ti_pair = j.value("ti_pair", "");
    c.backbone = j.value("backbone", "lenet");
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", "");
    c.data_root = j.value("data_root", "");
    const json bg = j.value("backgrounds", json::object());
    c.backgrounds_train = bg.value("train", "");
    c.backgrounds_test = bg.value("test", "");

    const json hy = j.value("hyper", json::object());
    c.t_pretrain = hyper_from_json(hy.value("t_pretrain", json::object()),
                                   c.t_pretrain);
    c.step1 = hyper_from_json(hy.value("step1", json::object()), c.step1);
    c.step2 = hyper_from_json(hy.value("step2", json::object()), c.step2);
    c.step3 = hyper_from_json(hy.value("step3", json::object()), c.step3);
    c.baseline = hyper_from_json(hy.value("baseline", json::object()),
                                 c.baseline);
    if (hy.contains("step2") && hy["step2"].contains("loss_weights")) {
      const auto w = hy["step2"]["loss_weights"];
      c.w_softmax = w.at(0).get<double>();
      c.w_l2 = w.at(1).get<double>();
    }

    const json noise = j.value("noise", json::object());
    if (noise.contains("models"))
      c.noise.models = noise["models"].get<std::vector<std::string>>();
    if (noise.contains("levels"))
      c.noise.levels = noise["levels"].get<std::vector<double>>();
    c.noise.p_train = noise.value("p_train", c.noise.p_train);

    const json sub = j.value("subsample", json::object());
    c.subsample.tr_per_class = sub.value("tr_per_class", 0);
    c.subsample.ti_per_class = sub.value("ti_per_class", 0);
    c.subsample.test_per_class = sub.value("test_per_class", 0);

    c.evaluations = j.value("evaluations", std::vector<std::string>{});

    const json sim = j.value("similarity", json::object());
    c.similarity.embeddings_path = sim.value("embeddings", "");
    c.similarity.task_labels =
        sim.value("task_labels", std::vector<std::string>{});
    c.similarity.ti_labels = sim.value("ti_labels", std::vector<std::string>{});

    for (const auto& chk : j.value("checks", json::array())) {
      CheckSpec spec;
      spec.report = chk.at("report").get<std::string>();
      spec.metric = chk.value("metric", "overall");
      spec.min_value = chk.value("min", -1.0);
      spec.max_value = chk.value("max", -1.0);
      c.checks.push_back(spec);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResolutionError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& c) {
  json checks = json::array();
  for (const auto& chk : c.checks)
    checks.push_back({{"report", chk.report},
                      {"metric", chk.metric},
                      {"min", chk.min_value},
                      {"max", chk.max_value}});

  json hy{{"t_pretrain", hyper_to_json(c.t_pretrain)},
          {"step1", hyper_to_json(c.step1)},
          {"step2", hyper_to_json(c.step2)},
          {"step3", hyper_to_json(c.step3)},
          {"baseline", hyper_to_json(c.baseline)}};
  hy["step2"]["loss_weights"] = {c.w_softmax, c.w_l2};

  const json j{
      {"name", c.name},
      {"task", {{"tr_source", c.tr_source}, {"tr_target", c.tr_target}}},
      {"ti_pair", c.ti_pair},
      {"backbone", c.backbone},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"data_root", c.data_root},
      {"backgrounds",
       {{"train", c.backgrounds_train}, {"test", c.backgrounds_test}}},
      {"hyper", hy},
      {"noise",
       {{"models", c.noise.models},
        {"levels", c.noise.levels},
        {"p_train", c.noise.p_train}}},
      {"subsample",
       {{"tr_per_class", c.subsample.tr_per_class},
        {"ti_per_class", c.subsample.ti_per_class},
        {"test_per_class", c.subsample.test_per_class}}},
      {"evaluations", c.evaluations},
      {"similarity",
       {{"embeddings", c.similarity.embeddings_path},
        {"task_labels", c.similarity.task_labels},
        {"ti_labels", c.similarity.ti_labels}}},
      {"checks", checks}};
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(serialize_config(config));
}

}  // namespace zdda
