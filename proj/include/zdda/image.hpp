// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_IMAGE_HPP_
#define ZDDA_IMAGE_HPP_

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "zdda/errors.hpp"

namespace zdda {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Height/width/channel geometry shared by every image of a dataset.
// Pixel data is stored plane-major: value(c, y, x) lives at
// c * height * width + y * width + x.
struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  int plane() const { return height * width; }
  int pixels() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;

  void validate() const {
    if (height <= 0 || width <= 0)
      throw DimensionError("image shape must be positive");
    if (channels != 1 && channels != 3)
      throw DimensionError("channels must be 1 (gray) or 3 (color)");
  }
};

// One image with values in [0, 1].
template <class S>
struct Image {
  ImageShape shape;
  Vec<S> data;

  S operator()(int c, int y, int x) const {
    return data[c * shape.plane() + y * shape.width + x];
  }
  S& operator()(int c, int y, int x) {
    return data[c * shape.plane() + y * shape.width + x];
  }
};

// Images plus integer class labels; the unit of all training and evaluation.
// Images are columns of a (pixels x n) matrix so batches slice cheaply.
template <class S>
struct LabeledDataset {
  std::string name;
  ImageShape shape;
  Mat<S> images;            // shape.pixels() x size()
  std::vector<int> labels;  // each in [0, class_count)
  int class_count = 0;

  Eigen::Index size() const { return images.cols(); }

  Image<S> image(Eigen::Index i) const {
    return Image<S>{shape, images.col(i)};
  }

  void validate() const {
    shape.validate();
    if (static_cast<Eigen::Index>(labels.size()) != images.cols())
      throw ConsistencyError(name + ": image/label count mismatch");
    if (images.rows() != shape.pixels())
      throw DimensionError(name + ": image rows do not match shape");
    for (int l : labels)
      if (l < 0 || l >= class_count)
        throw ConsistencyError(name + ": label out of range");
  }
};

// Index-aligned (source image, target image) pairs of identical content.
// Labels are optional and are only ever used to pretrain the target branch.
template <class S>
struct DualDomainPairSet {
  std::string name;
  ImageShape source_shape;  // 1-channel
  ImageShape target_shape;  // 3-channel
  Mat<S> source_images;
  Mat<S> target_images;
  std::vector<int> labels;  // empty when unlabeled
  int class_count = 0;

  Eigen::Index size() const { return source_images.cols(); }

  void validate() const {
    if (source_images.cols() != target_images.cols())
      throw ConsistencyError(name + ": pair count mismatch");
    if (size() > 0) {
      source_shape.validate();
      target_shape.validate();
      if (source_shape.channels != 1)
        throw DimensionError(name + ": source domain must be 1-channel");
      if (target_shape.channels != 3)
        throw DimensionError(name + ": target domain must be 3-channel");
    }
    if (!labels.empty() &&
        static_cast<Eigen::Index>(labels.size()) != size())
      throw ConsistencyError(name + ": label count mismatch");
  }

  // The two streams as datasets (used by corruption and evaluation).
  LabeledDataset<S> source_dataset() const {
    return LabeledDataset<S>{name + ":source", source_shape, source_images,
                             labels, class_count};
  }
  LabeledDataset<S> target_dataset() const {
    return LabeledDataset<S>{name + ":target", target_shape, target_images,
                             labels, class_count};
  }
};

// Test-time corruption model.
struct NoiseSpec {
  enum class Model { black_image, black_rectangle };
  Model model = Model::black_image;
  double probability = 0.0;  // fraction of images corrupted, in [0, 1]
  std::uint64_t seed = 0;

  void validate() const {
    if (!(probability >= 0.0 && probability <= 1.0))
      throw ConfigError("noise probability must be in [0,1]");
  }
};

// Number of corrupted images for a corruption fraction: round-half-up of
// the expected count, so composition is exactly countable.
inline Eigen::Index corrupt_count(double probability, Eigen::Index n) {
  return static_cast<Eigen::Index>(
      std::floor(probability * static_cast<double>(n) + 0.5));
}

}  // namespace zdda

#endif  // ZDDA_IMAGE_HPP_
