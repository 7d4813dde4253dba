// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_COLORIZE_HPP_
#define ZDDA_COLORIZE_HPP_

#include <string>
#include <vector>

#include "zdda/image.hpp"
#include "zdda/rng.hpp"

namespace zdda {

// Identifier of the blend rule below, recorded in dataset manifests.
inline constexpr const char* kBlendFormulaId = "abs-diff-v1";

// Blends a gray image with a color patch of the same extent:
//   out[c][y][x] = |patch[c][y][x] - gray[y][x]|
// This is the construction used for the colored "-M" dataset variants.
template <class S>
Image<S> colorize(const Image<S>& gray, const Image<S>& patch) {
  if (gray.shape.channels != 1)
    throw DimensionError("colorize: gray input must be 1-channel");
  if (patch.shape.channels != 3)
    throw DimensionError("colorize: patch must be 3-channel");
  if (patch.shape.height != gray.shape.height ||
      patch.shape.width != gray.shape.width)
    throw DimensionError("colorize: patch extent must match the gray image");

  Image<S> out;
  out.shape = ImageShape{gray.shape.height, gray.shape.width, 3};
  out.data.resize(out.shape.pixels());
  const int plane = gray.shape.plane();
  for (int c = 0; c < 3; ++c)
    out.data.segment(c * plane, plane) =
        (patch.data.segment(c * plane, plane) - gray.data).cwiseAbs();
  return out;
}

// Crops a (h x w) window of a larger color image at (y0, x0).
template <class S>
Image<S> crop(const Image<S>& src, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > src.shape.height ||
      x0 + w > src.shape.width)
    throw DimensionError("crop out of bounds");
  Image<S> out;
  out.shape = ImageShape{h, w, src.shape.channels};
  out.data.resize(out.shape.pixels());
  for (int c = 0; c < src.shape.channels; ++c)
    for (int y = 0; y < h; ++y)
      out.data.segment(c * h * w + y * w, w) = src.data.segment(
          c * src.shape.plane() + (y0 + y) * src.shape.width + x0, w);
  return out;
}

// Colored variant of a gray dataset. For every image a background index and
// crop origin are drawn from one generator seeded with `seed`, so the result
// is a pure function of (ds, backgrounds, seed). Labels and order carry over.
template <class S>
LabeledDataset<S> colorize_dataset(const LabeledDataset<S>& ds,
                                   const std::vector<Image<S>>& backgrounds,
                                   std::uint64_t seed) {
  ds.validate();
  if (ds.shape.channels != 1)
    throw DimensionError("colorize_dataset: input must be gray");
  if (backgrounds.empty())
    throw CapacityError("colorize_dataset: empty background corpus");
  for (const auto& bg : backgrounds)
    if (bg.shape.height < ds.shape.height || bg.shape.width < ds.shape.width)
      throw DimensionError("colorize_dataset: background smaller than target");

  LabeledDataset<S> out;
  out.name = ds.name + "-m";
  out.shape = ImageShape{ds.shape.height, ds.shape.width, 3};
  out.labels = ds.labels;
  out.class_count = ds.class_count;
  out.images.resize(out.shape.pixels(), ds.size());

  Rng rng(seed);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const auto& bg =
        backgrounds[static_cast<std::size_t>(rng.uniform_below(backgrounds.size()))];
    const int y0 = static_cast<int>(
        rng.uniform_int(0, bg.shape.height - ds.shape.height));
    const int x0 =
        static_cast<int>(rng.uniform_int(0, bg.shape.width - ds.shape.width));
    const Image<S> patch =
        crop(bg, y0, x0, ds.shape.height, ds.shape.width);
    out.images.col(i) = colorize(ds.image(i), patch).data;
  }
  return out;
}

// Gray images replicated across three channels (used to evaluate a
// color-input network on source-modality data).
template <class S>
LabeledDataset<S> replicate_channels(const LabeledDataset<S>& ds) {
  ds.validate();
  if (ds.shape.channels != 1)
    throw DimensionError("replicate_channels: input must be gray");
  LabeledDataset<S> out;
  out.name = ds.name + "x3";
  out.shape = ImageShape{ds.shape.height, ds.shape.width, 3};
  out.labels = ds.labels;
  out.class_count = ds.class_count;
  out.images.resize(out.shape.pixels(), ds.size());
  const int plane = ds.shape.plane();
  for (int c = 0; c < 3; ++c)
    out.images.middleRows(c * plane, plane) = ds.images;
  return out;
}

// Zips a gray dataset with its colored variant into an index-aligned pair
// set. Lineage is enforced by element-wise label equality.
template <class S>
DualDomainPairSet<S> make_pair_set(const LabeledDataset<S>& gray,
                                   const LabeledDataset<S>& colored) {
  if (gray.size() != colored.size())
    throw ConsistencyError("make_pair_set: length mismatch");
  if (gray.labels != colored.labels)
    throw ConsistencyError("make_pair_set: label sequences differ");
  if (gray.size() > 0) {
    if (gray.shape.channels != 1)
      throw DimensionError("make_pair_set: gray side must be 1-channel");
    if (colored.shape.channels != 3)
      throw DimensionError("make_pair_set: colored side must be 3-channel");
  }
  DualDomainPairSet<S> pairs;
  pairs.name = gray.name + "+" + colored.name;
  pairs.source_shape = gray.shape;
  pairs.target_shape = colored.shape;
  pairs.source_images = gray.images;
  pairs.target_images = colored.images;
  pairs.labels = gray.labels;
  pairs.class_count = gray.class_count;
  pairs.validate();
  return pairs;
}

}  // namespace zdda

#endif  // ZDDA_COLORIZE_HPP_
