// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_IMAGE_IO_HPP_
#define ZDDA_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zdda/image.hpp"

namespace zdda {

// Decodes a PNG or JPEG file (detected by content) into a 3-channel image
// with values in [0,1]. Grayscale files are replicated across channels.
Image<float> read_image(const std::filesystem::path& path);

// Writes interleaved RGB bytes (row-major, 3 bytes per pixel) as a PNG.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

// Writes a [0,1]-valued image (1- or 3-channel) as a PNG.
void write_png(const std::filesystem::path& path, const Image<float>& img);

// A background corpus: every PNG/JPEG in a directory, sorted by filename.
struct BackgroundCorpus {
  std::vector<Image<float>> images;
  std::uint64_t content_hash = 0;  // FNV-1a over the decoded pixel bytes
};

BackgroundCorpus load_background_corpus(const std::filesystem::path& dir);

}  // namespace zdda

#endif  // ZDDA_IMAGE_IO_HPP_
