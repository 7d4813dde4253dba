// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_DATASET_STORE_HPP_
#define ZDDA_DATASET_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "zdda/image.hpp"

namespace zdda {

// Provenance of a synthesized dataset, stored as manifest.json next to the
// IDX payloads so the directory round-trips.
struct DatasetManifest {
  std::string dataset_name;
  std::string source_dataset;          // gray parent, empty for raw ingests
  std::uint64_t seed = 0;              // colorization seed
  std::string blend_formula;           // see kBlendFormulaId
  std::uint64_t background_corpus_hash = 0;
  std::string background_corpus_split;  // which corpus split was used
  bool operator==(const DatasetManifest&) const = default;
};

struct StoredDataset {
  LabeledDataset<float> dataset;
  DatasetManifest manifest;
};

void save_dataset_dir(const std::filesystem::path& dir,
                      const LabeledDataset<float>& ds,
                      const DatasetManifest& manifest);

StoredDataset load_dataset_dir(const std::filesystem::path& dir);

bool is_dataset_dir(const std::filesystem::path& dir);

}  // namespace zdda

#endif  // ZDDA_DATASET_STORE_HPP_
