// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/dataset_store.hpp"

#include <fstream>
#include <json.hpp>

#include "zdda/errors.hpp"
#include "zdda/idx_io.hpp"

namespace zdda {

using nlohmann::json;

void save_dataset_dir(const std::filesystem::path& dir,
                      const LabeledDataset<float>& ds,
                      const DatasetManifest& manifest) {
  std::filesystem::create_directories(dir);
  save_idx_dataset(ds, dir / "images-idx-ubyte", dir / "labels-idx-ubyte");
  json j{{"dataset_name", manifest.dataset_name},
         {"source_dataset", manifest.source_dataset},
         {"seed", manifest.seed},
         {"blend_formula", manifest.blend_formula},
         {"background_corpus_hash", manifest.background_corpus_hash},
         {"background_corpus_split", manifest.background_corpus_split},
         {"class_count", ds.class_count},
         {"count", ds.size()}};
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << "\n";
  if (!out) throw FormatError("failed to write " + (dir / "manifest.json").string());
}

StoredDataset load_dataset_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw ResolutionError("no manifest.json in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError((dir / "manifest.json").string() + ": " + e.what());
  }

  StoredDataset out;
  out.manifest.dataset_name = j.value("dataset_name", "");
  out.manifest.source_dataset = j.value("source_dataset", "");
  out.manifest.seed = j.value("seed", std::uint64_t{0});
  out.manifest.blend_formula = j.value("blend_formula", "");
  out.manifest.background_corpus_hash =
      j.value("background_corpus_hash", std::uint64_t{0});
  out.manifest.background_corpus_split =
      j.value("background_corpus_split", "");

  out.dataset =
      load_idx_dataset(dir / "images-idx-ubyte", dir / "labels-idx-ubyte",
                       out.manifest.dataset_name, j.value("class_count", -1));
  if (j.contains("count") &&
      out.dataset.size() != j["count"].get<Eigen::Index>())
    throw ConsistencyError(dir.string() + ": manifest count disagrees with payload");
  return out;
}

bool is_dataset_dir(const std::filesystem::path& dir) {
  return std::filesystem::is_regular_file(dir / "manifest.json") &&
         std::filesystem::is_regular_file(dir / "images-idx-ubyte") &&
         std::filesystem::is_regular_file(dir / "labels-idx-ubyte");
}

}  // namespace zdda
