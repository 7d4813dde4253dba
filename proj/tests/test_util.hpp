// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_TESTS_TEST_UTIL_HPP_
#define ZDDA_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <string>

#include "zdda/image.hpp"
#include "zdda/rng.hpp"

namespace zdda::testing {

// A scratch directory removed at scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("zdda_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const {
    return path_ / s;
  }

 private:
  std::filesystem::path path_;
};

// Random dataset with values quantized to the byte grid (so IDX persistence
// round-trips exactly).
template <class S>
LabeledDataset<S> random_dataset(Eigen::Index n, const ImageShape& shape,
                                 int class_count, std::uint64_t seed,
                                 bool quantized = true) {
  Rng rng(seed);
  LabeledDataset<S> ds;
  ds.name = "random";
  ds.shape = shape;
  ds.class_count = class_count;
  ds.images.resize(shape.pixels(), n);
  for (Eigen::Index i = 0; i < ds.images.size(); ++i) {
    double v = rng.uniform();
    if (quantized) v = std::round(v * 255.0) / 255.0;
    ds.images.data()[i] = static_cast<S>(v);
  }
  ds.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : ds.labels)
    l = static_cast<int>(rng.uniform_below(class_count));
  return ds;
}

template <class S>
Image<S> random_image(const ImageShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Image<S> img;
  img.shape = shape;
  img.data.resize(shape.pixels());
  for (Eigen::Index i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<S>(std::round(rng.uniform() * 255.0) / 255.0);
  return img;
}

}  // namespace zdda::testing

#endif  // ZDDA_TESTS_TEST_UTIL_HPP_
