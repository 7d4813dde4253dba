// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/exp/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>

#include "zdda/colorize.hpp"
#include "zdda/dataset_store.hpp"
#include "zdda/eval/similarity.hpp"
#include "zdda/idx_io.hpp"
#include "zdda/image_io.hpp"
#include "zdda/net/checkpoint.hpp"
#include "zdda/pipeline/steps.hpp"

namespace zdda {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw FormatError("failed to write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResolutionError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::uint64_t file_fnv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResolutionError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

// Exclusive ownership of an output directory for the duration of a run.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f)
      throw ConfigError("output_dir is locked by another run: " +
                        path_.string());
    std::fprintf(f, "pid %d\n", static_cast<int>(::getpid()));
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

json report_to_json_obj(const EvalReport& r) {
  std::vector<std::vector<std::int64_t>> confusion(r.confusion.rows());
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    confusion[i].resize(r.confusion.cols());
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j)
      confusion[i][j] = r.confusion(i, j);
  }
  return json{{"overall_accuracy", r.overall_accuracy},
              {"per_class_accuracy", r.per_class_accuracy},
              {"mean_per_class_accuracy", r.mean_per_class_accuracy},
              {"confusion", confusion},
              {"n", r.n}};
}

EvalReport report_from_json_obj(const json& j) {
  EvalReport r;
  r.overall_accuracy = j.at("overall_accuracy").get<double>();
  r.per_class_accuracy =
      j.at("per_class_accuracy").get<std::vector<double>>();
  r.mean_per_class_accuracy = j.at("mean_per_class_accuracy").get<double>();
  const auto rows = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
  const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
  r.confusion.setZero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index jj = 0; jj < k; ++jj)
      r.confusion(i, jj) = rows[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(jj)];
  r.n = j.at("n").get<std::int64_t>();
  return r;
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  return report_to_json_obj(r).dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  return report_from_json_obj(json::parse(text));
}

std::string report_to_csv(const EvalReport& r) {
  std::string csv = "class,recall\n";
  for (std::size_t k = 0; k < r.per_class_accuracy.size(); ++k)
    csv += std::to_string(k) + "," + std::to_string(r.per_class_accuracy[k]) +
           "\n";
  csv += "overall," + std::to_string(r.overall_accuracy) + "\n";
  csv += "mean_per_class," + std::to_string(r.mean_per_class_accuracy) + "\n";
  return csv;
}

std::string grid_to_json(const NoiseGridResult& g) {
  const auto mat = [](const Mat<double>& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      rows[i].resize(m.cols());
      for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    }
    return rows;
  };
  return json{{"p_source_levels", g.p_source_levels},
              {"p_target_levels", g.p_target_levels},
              {"acc_zdda3", mat(g.acc_zdda3)},
              {"acc_naive", mat(g.acc_naive)},
              {"diff", mat(g.diff)},
              {"n", g.n},
              {"noise_model", g.noise_model}}
             .dump(2) +
         "\n";
}

NoiseGridResult grid_from_json(const std::string& text) {
  const json j = json::parse(text);
  NoiseGridResult g;
  g.p_source_levels = j.at("p_source_levels").get<std::vector<double>>();
  g.p_target_levels = j.at("p_target_levels").get<std::vector<double>>();
  const auto mat = [&](const char* key) {
    const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
    Mat<double> m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t jj = 0; jj < rows[i].size(); ++jj)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) =
            rows[i][jj];
    return m;
  };
  g.acc_zdda3 = mat("acc_zdda3");
  g.acc_naive = mat("acc_naive");
  g.diff = mat("diff");
  g.n = j.at("n").get<std::int64_t>();
  g.noise_model = j.at("noise_model").get<std::string>();
  return g;
}

std::string grid_to_csv(const NoiseGridResult& g) {
  std::string csv = "p_source,p_target,acc_zdda3,acc_naive,diff\n";
  char line[160];
  for (std::size_t i = 0; i < g.p_source_levels.size(); ++i)
    for (std::size_t j = 0; j < g.p_target_levels.size(); ++j) {
      std::snprintf(line, sizeof(line), "%g,%g,%.6f,%.6f,%.6f\n",
                    g.p_source_levels[i], g.p_target_levels[j],
                    g.acc_zdda3(static_cast<Eigen::Index>(i),
                                static_cast<Eigen::Index>(j)),
                    g.acc_naive(static_cast<Eigen::Index>(i),
                                static_cast<Eigen::Index>(j)),
                    g.diff(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(j)));
      csv += line;
    }
  return csv;
}

namespace {

// ---------------------------------------------------------------------------
// The experiment runner.

class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), out_(cfg.output_dir) {}

  RunRecord run() {
    validate_config(cfg_);
    DirLock lock(out_);
    fs::create_directories(out_ / "checkpoints");
    fs::create_directories(out_ / "reports");
    load_stage_state();

    record_.name = cfg_.name;
    record_.tr_source = cfg_.tr_source;
    record_.tr_target = cfg_.tr_target;
    record_.ti_pair = cfg_.ti_pair;
    record_.config_hash = hex64(config_hash(cfg_));
    record_.tool_version = kToolVersion;
    provenance_["master_seed"] = cfg_.seed;
    provenance_["config_hash"] = record_.config_hash;
    provenance_["step_order"] = json::array();

    const std::set<std::string> plan(cfg_.evaluations.begin(),
                                     cfg_.evaluations.end());
    const bool wants_zdda2 = plan.count("zdda2") || plan.count("naive_fusion") ||
                             plan.count("zdda3") || plan.count("noise_grid");
    const bool wants_step3 = plan.count("zdda3") || plan.count("noise_grid");

    if (wants_zdda2) {
      stage_t_pretrain();
      stage_step1();
      stage_step2();
    }
    if (wants_step3) stage_step3();
    if (plan.count("source_only")) stage_baseline_source();
    if (plan.count("target_only")) stage_baseline_target();

    // Training inputs are no longer needed once the checkpoints exist.
    ti_gray_.reset();
    ti_colored_.reset();
    tr_train_.reset();

    for (const auto& name : cfg_.evaluations) run_evaluation(name);

    write_text(out_ / "provenance.json", provenance_.dump(2) + "\n");
    write_text(out_ / "stages.json", stages_.dump(2) + "\n");
    save_run_record(out_, record_);
    write_text(out_ / "config.json", serialize_config(cfg_));
    return record_;
  }

 private:
  using Ds = LabeledDataset<float>;

  // ---- dataset resolution -------------------------------------------------

  fs::path data_root() {
    if (!cfg_.data_root.empty()) return cfg_.data_root;
    if (const char* env = std::getenv(kDataRootEnv)) return env;
    throw ResolutionError(
        "no data root: set config.data_root or the ZDDA_DATA_ROOT env var");
  }

  fs::path raw_file(const std::string& id, const std::string& split,
                    const std::string& kind) {
    const std::string prefix = split == "train" ? "train" : "t10k";
    const fs::path base = data_root() / id / (prefix + "-" + kind);
    for (const char* ext : {"", ".gz"}) {
      fs::path p = base;
      p += ext;
      if (fs::is_regular_file(p)) return p;
    }
    throw ResolutionError("dataset file not found: " + base.string() +
                          "[.gz]");
  }

  Ds load_raw(const std::string& id, const std::string& split) {
    Ds ds = load_idx_dataset(raw_file(id, split, "images-idx3-ubyte"),
                             raw_file(id, split, "labels-idx1-ubyte"),
                             id + "-" + split);
    return ds;
  }

  std::uint64_t raw_fingerprint(const std::string& id,
                                const std::string& split) {
    const std::string key = id + "/" + split;
    auto it = raw_fp_.find(key);
    if (it != raw_fp_.end()) return it->second;
    std::uint64_t h = file_fnv(raw_file(id, split, "images-idx3-ubyte"));
    h = fnv1a64(&h, sizeof(h),
                file_fnv(raw_file(id, split, "labels-idx1-ubyte")));
    raw_fp_[key] = h;
    return h;
  }

  const BackgroundCorpus& corpus(bool train_split) {
    auto& slot = train_split ? corpus_train_ : corpus_test_;
    if (!slot) {
      fs::path dir = train_split || cfg_.backgrounds_test.empty()
                         ? fs::path(cfg_.backgrounds_train)
                         : fs::path(cfg_.backgrounds_test);
      if (cfg_.backgrounds_train.empty())
        throw ResolutionError("config.backgrounds.train is required for "
                              "dataset synthesis");
      slot = load_background_corpus(dir);
    }
    return *slot;
  }

  // The colored "-m" variant of a gray dataset, synthesized on demand and
  // cached on disk with its manifest.
  Ds colored(const std::string& gray_id, const std::string& split) {
    const bool train_split = split == "train";
    const std::string name = gray_id + "-m-" + split;
    const fs::path dir = out_ / "synth" / name;
    const std::uint64_t seed =
        derive_seed(cfg_.seed, "synth/" + gray_id + "/" + split);

    if (is_dataset_dir(dir)) {
      StoredDataset stored = load_dataset_dir(dir);
      if (stored.manifest.seed == seed &&
          stored.manifest.blend_formula == kBlendFormulaId &&
          stored.manifest.background_corpus_hash ==
              corpus(train_split).content_hash)
        return std::move(stored.dataset);
    }

    Ds gray = load_raw(gray_id, split);
    Ds out = colorize_dataset(gray, corpus(train_split).images, seed);
    out.name = gray_id + "-m-" + split;
    DatasetManifest manifest;
    manifest.dataset_name = out.name;
    manifest.source_dataset = gray.name;
    manifest.seed = seed;
    manifest.blend_formula = kBlendFormulaId;
    manifest.background_corpus_hash = corpus(train_split).content_hash;
    manifest.background_corpus_split =
        train_split || cfg_.backgrounds_test.empty() ? "train" : "test";
    save_dataset_dir(dir, out, manifest);
    return out;
  }

  const Ds& tr_train() {
    if (!tr_train_) {
      Ds ds = load_raw(cfg_.tr_source, "train");
      if (cfg_.subsample.tr_per_class > 0)
        ds = subsample(ds, cfg_.subsample.tr_per_class,
                       derive_seed(cfg_.seed, "subsample/tr"));
      tr_train_ = std::move(ds);
    }
    return *tr_train_;
  }

  void ensure_ti_loaded() {
    if (ti_gray_) return;
    Ds gray = load_raw(cfg_.ti_pair, "train");
    Ds col = colored(cfg_.ti_pair, "train");
    if (cfg_.subsample.ti_per_class > 0) {
      // One index draw keeps the two streams aligned.
      const auto idx = subsample_indices(
          gray.labels, gray.class_count, cfg_.subsample.ti_per_class,
          derive_seed(cfg_.seed, "subsample/ti"), gray.name);
      Ds g2, c2;
      g2.name = gray.name;
      g2.shape = gray.shape;
      g2.class_count = gray.class_count;
      c2.name = col.name;
      c2.shape = col.shape;
      c2.class_count = col.class_count;
      g2.images.resize(gray.images.rows(), static_cast<Eigen::Index>(idx.size()));
      c2.images.resize(col.images.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        g2.images.col(static_cast<Eigen::Index>(i)) = gray.images.col(idx[i]);
        c2.images.col(static_cast<Eigen::Index>(i)) = col.images.col(idx[i]);
        g2.labels.push_back(gray.labels[static_cast<std::size_t>(idx[i])]);
        c2.labels.push_back(col.labels[static_cast<std::size_t>(idx[i])]);
      }
      gray = std::move(g2);
      col = std::move(c2);
    }
    ti_gray_ = std::move(gray);
    ti_colored_ = std::move(col);
  }

  DualDomainPairSet<float> ti_pairs() {
    ensure_ti_loaded();
    return make_pair_set(*ti_gray_, *ti_colored_);
  }

  // ---- stage machinery ----------------------------------------------------

  void load_stage_state() {
    const fs::path p = out_ / "stages.json";
    if (fs::is_regular_file(p)) {
      try {
        stages_ = json::parse(read_text(p));
      } catch (const json::exception&) {
        stages_ = json::object();
      }
    } else {
      stages_ = json::object();
    }
  }

  bool stage_cached(const std::string& name, std::uint64_t hash,
                    const std::vector<std::string>& artifacts) {
    if (!stages_.contains(name)) return false;
    if (stages_[name].value("hash", "") != hex64(hash)) return false;
    for (const auto& a : artifacts)
      if (!fs::is_regular_file(out_ / a)) return false;
    return true;
  }

  void mark_stage(const std::string& name, std::uint64_t hash,
                  const std::vector<std::string>& artifacts, double seconds,
                  bool reused) {
    stages_[name] = {{"hash", hex64(hash)}, {"artifacts", artifacts}};
    record_.step_wall_seconds[name] = seconds;
    for (const auto& a : artifacts)
      record_.artifact_paths[a.substr(a.find('/') + 1)] =
          (out_ / a).string();
    provenance_["step_order"].push_back(name);
    provenance_["stages"][name]["seconds"] = seconds;
    provenance_["stages"][name]["reused"] = reused;
    provenance_["stages"][name]["hash"] = hex64(hash);
  }

  static json hyper_provenance(const TrainHyper& h) {
    return json{{"batch_size", h.batch_size},
                {"learning_rate", h.learning_rate},
                {"iterations", h.iterations},
                {"momentum", h.momentum},
                {"w_softmax", h.w_softmax},
                {"w_l2", h.w_l2},
                {"seed", h.seed}};
  }

  static json stats_provenance(const TrainStats& s) {
    return json{{"initial_monitor_loss", s.initial_monitor_loss},
                {"final_monitor_loss", s.final_monitor_loss},
                {"monitor_curve", s.monitor_curve},
                {"monitor_stride", s.monitor_stride}};
  }

  std::uint64_t stage_hash(const std::string& name, const json& inputs) {
    json all = inputs;
    all["stage"] = name;
    all["backbone"] = cfg_.backbone;
    all["master_seed"] = cfg_.seed;
    return fnv1a64(all.dump());
  }

  template <class Fn>
  void run_stage(const std::string& name, std::uint64_t hash,
                 const std::vector<std::string>& artifacts, Fn&& body) {
    if (stage_cached(name, hash, artifacts)) {
      mark_stage(name, hash, artifacts, 0.0, true);
      return;
    }
    const auto start = std::chrono::steady_clock::now();
    body();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    mark_stage(name, hash, artifacts, seconds, false);
  }

  std::uint64_t ti_fingerprint() {
    std::uint64_t h = raw_fingerprint(cfg_.ti_pair, "train");
    const std::uint64_t synth =
        derive_seed(cfg_.seed, "synth/" + cfg_.ti_pair + "/train");
    h = fnv1a64(&synth, sizeof(synth), h);
    h = fnv1a64(kBlendFormulaId, h);
    const std::uint64_t corpus_h = corpus_file_hash(true);
    h = fnv1a64(&corpus_h, sizeof(corpus_h), h);
    const int sub = cfg_.subsample.ti_per_class;
    h = fnv1a64(&sub, sizeof(sub), h);
    return h;
  }

  std::uint64_t tr_fingerprint() {
    std::uint64_t h = raw_fingerprint(cfg_.tr_source, "train");
    const int sub = cfg_.subsample.tr_per_class;
    h = fnv1a64(&sub, sizeof(sub), h);
    return h;
  }

  std::uint64_t corpus_file_hash(bool train_split) {
    auto& slot = train_split ? corpus_fp_train_ : corpus_fp_test_;
    if (slot) return *slot;
    fs::path dir = train_split || cfg_.backgrounds_test.empty()
                       ? fs::path(cfg_.backgrounds_train)
                       : fs::path(cfg_.backgrounds_test);
    if (cfg_.backgrounds_train.empty())
      throw ResolutionError("config.backgrounds.train is required");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
      const std::uint64_t fh = file_fnv(f);
      h = fnv1a64(&fh, sizeof(fh), h);
    }
    slot = h;
    return h;
  }

  std::uint64_t checkpoint_checksum(const std::string& rel) {
    return file_fnv(out_ / rel);
  }

  // ---- training stages ----------------------------------------------------

  void stage_t_pretrain() {
    const TrainHyper hyper = cfg_.t_pretrain.with_seed(
        derive_seed(cfg_.seed, "t_pretrain"));
    const std::uint64_t hash = stage_hash(
        "t_pretrain",
        {{"hyper", hyper_provenance(hyper)}, {"ti", hex64(ti_fingerprint())}});
    run_stage("t_pretrain", hash, {"checkpoints/t.ckpt"}, [&] {
      ensure_ti_loaded();
      auto branch = build_branch<float>(lenet_spec(3),
                                        derive_seed(hyper.seed, "init"));
      auto cls = build_source_classifier<float>(
          branch.spec.feature_dim, ti_colored_->class_count,
          derive_seed(hyper.seed, "cls"));
      const TrainStats stats =
          train_supervised(branch, cls, *ti_colored_, hyper);
      branch.tag = BranchTag::t;
      branch.frozen = true;
      save_branch(out_ / "checkpoints/t.ckpt", branch, "t_pretrain");
      provenance_["stages"]["t_pretrain"]["hyper"] = hyper_provenance(hyper);
      provenance_["stages"]["t_pretrain"]["stats"] = stats_provenance(stats);
      provenance_["stages"]["t_pretrain"]["dataset"] = ti_colored_->name;
    });
  }

  void stage_step1() {
    const TrainHyper hyper =
        cfg_.step1.with_seed(derive_seed(cfg_.seed, "step1"));
    const std::uint64_t hash = stage_hash(
        "step1", {{"hyper", hyper_provenance(hyper)},
                  {"ti", hex64(ti_fingerprint())},
                  {"t", hex64(checkpoint_checksum("checkpoints/t.ckpt"))},
                  {"s1_init_seed", derive_seed(cfg_.seed, "s1_init")}});
    run_stage("step1", hash, {"checkpoints/s1.ckpt"}, [&] {
      const auto t = load_branch<float>(out_ / "checkpoints/t.ckpt");
      auto s1_init = build_branch<float>(
          lenet_spec(1), derive_seed(cfg_.seed, "s1_init"), BranchTag::s1);
      auto result = step1_align(ti_pairs(), t, s1_init, hyper);
      save_branch(out_ / "checkpoints/s1.ckpt", result.s1, "step1");
      provenance_["stages"]["step1"]["hyper"] = hyper_provenance(hyper);
      provenance_["stages"]["step1"]["stats"] = stats_provenance(result.stats);
      provenance_["stages"]["step1"]["pair_set_reused_in_step2"] = true;
    });
  }

  void stage_step2() {
    const TrainHyper hyper = cfg_.step2.with_seed(
        derive_seed(cfg_.seed, "step2"), cfg_.w_softmax, cfg_.w_l2);
    const std::uint64_t hash = stage_hash(
        "step2", {{"hyper", hyper_provenance(hyper)},
                  {"ti", hex64(ti_fingerprint())},
                  {"tr", hex64(tr_fingerprint())},
                  {"t", hex64(checkpoint_checksum("checkpoints/t.ckpt"))},
                  {"s1", hex64(checkpoint_checksum("checkpoints/s1.ckpt"))}});
    run_stage("step2", hash,
              {"checkpoints/s2.ckpt", "checkpoints/source_classifier.ckpt"},
              [&] {
                const auto t = load_branch<float>(out_ / "checkpoints/t.ckpt");
                const auto s1 = load_branch<float>(out_ / "checkpoints/s1.ckpt");
                auto result = step2_joint(tr_train(), ti_pairs(), t, s1, hyper);
                save_branch(out_ / "checkpoints/s2.ckpt", result.s2, "step2");
                save_classifier(out_ / "checkpoints/source_classifier.ckpt",
                                result.source_classifier, "step2");
                provenance_["stages"]["step2"]["hyper"] = hyper_provenance(hyper);
                provenance_["stages"]["step2"]["stats"] =
                    stats_provenance(result.stats);
                provenance_["stages"]["step2"]["softmax_term_initial"] =
                    result.softmax_term_initial;
                provenance_["stages"]["step2"]["l2_term_initial"] =
                    result.l2_term_initial;
                const double a = result.softmax_term_initial;
                const double b = result.l2_term_initial;
                if (a > 0 && b > 0 && (a / b > 100.0 || b / a > 100.0))
                  std::cerr << "[zdda] warning: step-2 loss terms differ by "
                               "more than two orders of magnitude ("
                            << a << " vs " << b << ")\n";
              });
  }

  void stage_step3() {
    const TrainHyper hyper =
        cfg_.step3.with_seed(derive_seed(cfg_.seed, "step3"));
    const std::uint64_t hash = stage_hash(
        "step3", {{"hyper", hyper_provenance(hyper)},
                  {"tr", hex64(tr_fingerprint())},
                  {"p_train", cfg_.noise.p_train},
                  {"s1", hex64(checkpoint_checksum("checkpoints/s1.ckpt"))},
                  {"s2", hex64(checkpoint_checksum("checkpoints/s2.ckpt"))}});
    run_stage("step3", hash,
              {"checkpoints/s3.ckpt", "checkpoints/s4.ckpt",
               "checkpoints/joint_classifier.ckpt"},
              [&] {
                const auto s1 = load_branch<float>(out_ / "checkpoints/s1.ckpt");
                const auto s2 = load_branch<float>(out_ / "checkpoints/s2.ckpt");
                auto result =
                    step3_fusion(tr_train(), s2, s1, cfg_.noise.p_train, hyper);
                save_branch(out_ / "checkpoints/s3.ckpt", result.s3, "step3");
                save_branch(out_ / "checkpoints/s4.ckpt", result.s4, "step3");
                save_classifier(out_ / "checkpoints/joint_classifier.ckpt",
                                result.joint_classifier, "step3");
                provenance_["stages"]["step3"]["hyper"] = hyper_provenance(hyper);
                provenance_["stages"]["step3"]["stats"] =
                    stats_provenance(result.stats);
                provenance_["stages"]["step3"]["p_train"] = cfg_.noise.p_train;
              });
  }

  void stage_baseline_source() {
    const TrainHyper hyper = cfg_.baseline.with_seed(
        derive_seed(cfg_.seed, "baseline_source"));
    const std::uint64_t hash = stage_hash(
        "baseline_source",
        {{"hyper", hyper_provenance(hyper)}, {"tr", hex64(tr_fingerprint())}});
    run_stage("baseline_source", hash,
              {"checkpoints/baseline_source.ckpt",
               "checkpoints/baseline_source_cls.ckpt"},
              [&] {
                // Trained on gray images replicated to three channels so the
                // same network consumes the color test stream directly.
                Ds tr3 = replicate_channels(tr_train());
                auto branch = build_branch<float>(
                    lenet_spec(3), derive_seed(hyper.seed, "init"));
                auto cls = build_source_classifier<float>(
                    branch.spec.feature_dim, tr3.class_count,
                    derive_seed(hyper.seed, "cls"));
                const TrainStats stats = train_supervised(branch, cls, tr3, hyper);
                save_branch(out_ / "checkpoints/baseline_source.ckpt", branch,
                            "baseline_source");
                save_classifier(out_ / "checkpoints/baseline_source_cls.ckpt",
                                cls, "baseline_source");
                provenance_["stages"]["baseline_source"]["hyper"] =
                    hyper_provenance(hyper);
                provenance_["stages"]["baseline_source"]["stats"] =
                    stats_provenance(stats);
              });
  }

  void stage_baseline_target() {
    const TrainHyper hyper = cfg_.baseline.with_seed(
        derive_seed(cfg_.seed, "baseline_target"));
    std::uint64_t ds_h = raw_fingerprint(cfg_.tr_source, "train");
    const std::uint64_t synth =
        derive_seed(cfg_.seed, "synth/" + cfg_.tr_source + "/train");
    ds_h = fnv1a64(&synth, sizeof(synth), ds_h);
    const std::uint64_t corpus_h = corpus_file_hash(true);
    ds_h = fnv1a64(&corpus_h, sizeof(corpus_h), ds_h);
    const std::uint64_t hash = stage_hash(
        "baseline_target",
        {{"hyper", hyper_provenance(hyper)},
         {"tr_colored", hex64(ds_h)},
         {"subsample", cfg_.subsample.tr_per_class}});
    run_stage("baseline_target", hash,
              {"checkpoints/baseline_target.ckpt",
               "checkpoints/baseline_target_cls.ckpt"},
              [&] {
                Ds ds = colored(cfg_.tr_source, "train");
                if (cfg_.subsample.tr_per_class > 0)
                  ds = subsample(ds, cfg_.subsample.tr_per_class,
                                 derive_seed(cfg_.seed, "subsample/tr"));
                auto branch = build_branch<float>(
                    lenet_spec(3), derive_seed(hyper.seed, "init"));
                auto cls = build_source_classifier<float>(
                    branch.spec.feature_dim, ds.class_count,
                    derive_seed(hyper.seed, "cls"));
                const TrainStats stats = train_supervised(branch, cls, ds, hyper);
                save_branch(out_ / "checkpoints/baseline_target.ckpt", branch,
                            "baseline_target");
                save_classifier(out_ / "checkpoints/baseline_target_cls.ckpt",
                                cls, "baseline_target");
                provenance_["stages"]["baseline_target"]["hyper"] =
                    hyper_provenance(hyper);
                provenance_["stages"]["baseline_target"]["stats"] =
                    stats_provenance(stats);
              });
  }

  // ---- evaluations ----------------------------------------------------------

  void store_report(const std::string& key, const EvalReport& r) {
    record_.reports[key] = r;
    write_text(out_ / "reports" / (key + ".json"), report_to_json(r));
    write_text(out_ / "reports" / (key + ".csv"), report_to_csv(r));
  }

  DualDomainPairSet<float> test_pairs() {
    Ds gray = load_raw(cfg_.tr_source, "test");
    Ds col = colored(cfg_.tr_source, "test");
    DualDomainPairSet<float> pairs = make_pair_set(gray, col);
    if (cfg_.subsample.test_per_class > 0)
      pairs = subsample_pairs(pairs, cfg_.subsample.test_per_class,
                              derive_seed(cfg_.seed, "subsample/test"));
    return pairs;
  }

  void run_evaluation(const std::string& name) {
    try {
      if (name == "zdda2") {
        const auto t = load_branch<float>(out_ / "checkpoints/t.ckpt");
        const auto s2 = load_branch<float>(out_ / "checkpoints/s2.ckpt");
        const auto cls = load_classifier<float>(
            out_ / "checkpoints/source_classifier.ckpt");
        const auto zdda2 = assemble_zdda2(s2, t, cls);
        store_report("zdda2.source",
                     evaluate_composed(zdda2.source,
                                       load_raw(cfg_.tr_source, "test")));
        store_report("zdda2.target",
                     evaluate_composed(zdda2.target,
                                       colored(cfg_.tr_source, "test")));
      } else if (name == "source_only") {
        const auto branch = load_branch<float>(
            out_ / "checkpoints/baseline_source.ckpt");
        const auto cls = load_classifier<float>(
            out_ / "checkpoints/baseline_source_cls.ckpt");
        const ComposedClassifier<float> c{&branch, &cls};
        store_report("source_only.source",
                     evaluate_composed(
                         c, replicate_channels(load_raw(cfg_.tr_source, "test"))));
        store_report("source_only.target",
                     evaluate_composed(c, colored(cfg_.tr_source, "test")));
      } else if (name == "target_only") {
        const auto branch = load_branch<float>(
            out_ / "checkpoints/baseline_target.ckpt");
        const auto cls = load_classifier<float>(
            out_ / "checkpoints/baseline_target_cls.ckpt");
        const ComposedClassifier<float> c{&branch, &cls};
        store_report("target_only.target",
                     evaluate_composed(c, colored(cfg_.tr_source, "test")));
      } else if (name == "naive_fusion") {
        const auto t = load_branch<float>(out_ / "checkpoints/t.ckpt");
        const auto s2 = load_branch<float>(out_ / "checkpoints/s2.ckpt");
        const auto cls = load_classifier<float>(
            out_ / "checkpoints/source_classifier.ckpt");
        const auto zdda2 = assemble_zdda2(s2, t, cls);
        store_report("naive_fusion",
                     evaluate_naive_fusion(zdda2.source, zdda2.target,
                                           test_pairs()));
      } else if (name == "zdda3") {
        const ZddaArtifacts<float> art = load_artifacts();
        const auto pairs = test_pairs();
        store_report("zdda3.dual",
                     evaluate_fusion(
                         assemble_fusion(art, FusionMode::test_dual), pairs));
        store_report(
            "zdda3.source_only",
            evaluate_fusion(assemble_fusion(art, FusionMode::test_source_only),
                            pairs));
      } else if (name == "noise_grid") {
        const ZddaArtifacts<float> art = load_artifacts();
        const auto fusion = assemble_fusion(art, FusionMode::test_dual);
        const auto zdda2 = art.zdda2();
        const auto pairs = test_pairs();
        for (const auto& model_name : cfg_.noise.models) {
          const NoiseSpec::Model model =
              model_name == "black_image" ? NoiseSpec::Model::black_image
                                          : NoiseSpec::Model::black_rectangle;
          const NoiseGridResult grid = noise_grid_eval(
              fusion, zdda2.source, zdda2.target, pairs, cfg_.noise.levels,
              cfg_.noise.levels, model,
              derive_seed(cfg_.seed, "noise_grid/" + model_name));
          const std::string stem = "noise_grid." + model_name;
          write_text(out_ / "reports" / (stem + ".json"), grid_to_json(grid));
          write_text(out_ / "reports" / (stem + ".csv"), grid_to_csv(grid));
          record_.grid_paths[model_name] =
              (out_ / "reports" / (stem + ".json")).string();
        }
      } else if (name == "similarity") {
        if (cfg_.similarity.embeddings_path.empty())
          throw ResolutionError("similarity: no embeddings table configured");
        const EmbeddingTable emb =
            load_embeddings(cfg_.similarity.embeddings_path);
        const double s = semantic_similarity(cfg_.similarity.task_labels,
                                             cfg_.similarity.ti_labels, emb);
        record_.similarity = s;
        write_text(out_ / "reports/similarity.json",
                   json{{"similarity", s}}.dump(2) + "\n");
      } else {
        throw ConfigError("unknown evaluation: " + name);
      }
    } catch (const Error& e) {
      record_.failures[name] = e.what();
    }
  }

  ZddaArtifacts<float> load_artifacts() {
    ZddaArtifacts<float> art;
    art.t = load_branch<float>(out_ / "checkpoints/t.ckpt");
    art.s1 = load_branch<float>(out_ / "checkpoints/s1.ckpt");
    art.s2 = load_branch<float>(out_ / "checkpoints/s2.ckpt");
    art.source_classifier =
        load_classifier<float>(out_ / "checkpoints/source_classifier.ckpt");
    art.has_step2 = true;
    art.s3 = load_branch<float>(out_ / "checkpoints/s3.ckpt");
    art.s4 = load_branch<float>(out_ / "checkpoints/s4.ckpt");
    art.joint_classifier =
        load_classifier<float>(out_ / "checkpoints/joint_classifier.ckpt");
    art.has_step3 = true;
    art.provenance = provenance_.dump();
    return art;
  }

  ExperimentConfig cfg_;
  fs::path out_;
  json stages_ = json::object();
  json provenance_ = json::object();
  RunRecord record_;

  std::optional<Ds> tr_train_, ti_gray_, ti_colored_;
  std::optional<BackgroundCorpus> corpus_train_, corpus_test_;
  std::optional<std::uint64_t> corpus_fp_train_, corpus_fp_test_;
  std::map<std::string, std::uint64_t> raw_fp_;
};

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  Runner runner(config);
  return runner.run();
}

void save_run_record(const std::filesystem::path& run_dir,
                     const RunRecord& r) {
  json reports = json::object();
  for (const auto& [key, rep] : r.reports)
    reports[key] = report_to_json_obj(rep);
  json j{{"name", r.name},
         {"tr_source", r.tr_source},
         {"tr_target", r.tr_target},
         {"ti_pair", r.ti_pair},
         {"config_hash", r.config_hash},
         {"tool_version", r.tool_version},
         {"step_wall_seconds", r.step_wall_seconds},
         {"artifact_paths", r.artifact_paths},
         {"reports", reports},
         {"grid_paths", r.grid_paths},
         {"failures", r.failures}};
  if (r.similarity) j["similarity"] = *r.similarity;
  write_text(run_dir / "run_record.json", j.dump(2) + "\n");
}

RunRecord load_run_record(const std::filesystem::path& run_dir) {
  const json j = json::parse(read_text(run_dir / "run_record.json"));
  RunRecord r;
  r.name = j.value("name", "");
  r.tr_source = j.value("tr_source", "");
  r.tr_target = j.value("tr_target", "");
  r.ti_pair = j.value("ti_pair", "");
  r.config_hash = j.value("config_hash", "");
  r.tool_version = j.value("tool_version", "");
  r.step_wall_seconds =
      j.value("step_wall_seconds", std::map<std::string, double>{});
  r.artifact_paths =
      j.value("artifact_paths", std::map<std::string, std::string>{});
  for (const auto& [key, rep] : j.value("reports", json::object()).items())
    r.reports[key] = report_from_json_obj(rep);
  r.grid_paths = j.value("grid_paths", std::map<std::string, std::string>{});
  r.failures = j.value("failures", std::map<std::string, std::string>{});
  if (j.contains("similarity")) r.similarity = j["similarity"].get<double>();
  return r;
}

std::vector<CheckOutcome> evaluate_checks(const ExperimentConfig& config,
                                          const RunRecord& record) {
  std::vector<CheckOutcome> outcomes;
  for (const auto& spec : config.checks) {
    CheckOutcome out;
    out.spec = spec;
    const auto it = record.reports.find(spec.report);
    if (it == record.reports.end()) {
      out.passed = false;
      out.detail = "report missing";
    } else {
      out.actual = spec.metric == "mean_per_class"
                       ? it->second.mean_per_class_accuracy
                       : it->second.overall_accuracy;
      out.passed = true;
      if (spec.min_value >= 0 && out.actual < spec.min_value)
        out.passed = false;
      if (spec.max_value >= 0 && out.actual > spec.max_value)
        out.passed = false;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s %s=%.4f (min %.4f, max %.4f)",
                    spec.report.c_str(), spec.metric.c_str(), out.actual,
                    spec.min_value, spec.max_value);
      out.detail = buf;
    }
    outcomes.push_back(out);
  }
  return outcomes;
}

}  // namespace zdda
