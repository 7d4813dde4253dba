// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_IDX_IO_HPP_
#define ZDDA_IDX_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zdda/image.hpp"

namespace zdda {

// Raw contents of an IDX image file: unsigned bytes, n images.
struct IdxImages {
  ImageShape shape;
  Eigen::Index count = 0;
  std::vector<std::uint8_t> bytes;  // count * shape.pixels(), image-major
};

// IDX ingestion. Accepts the classic big-endian format: magic 0x00000803
// (n x rows x cols, grayscale) or 0x00000804 (n x rows x cols x channels)
// for images and 0x00000801 for labels. Files may be gzip-compressed.
IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

// Byte values are scaled by 1/255 into [0,1]; file order is preserved.
// class_count is inferred as (max label + 1) unless given explicitly.
LabeledDataset<float> load_idx_dataset(const std::filesystem::path& images_path,
                                       const std::filesystem::path& labels_path,
                                       const std::string& name = "",
                                       int class_count = -1);

// Writes a dataset back to a pair of IDX files, quantizing each value to
// round(v * 255). Gray datasets use the 3-dimensional magic, color the
// 4-dimensional one. Paths ending in ".gz" are gzip-compressed.
void save_idx_dataset(const LabeledDataset<float>& ds,
                      const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

}  // namespace zdda

#endif  // ZDDA_IDX_IO_HPP_
