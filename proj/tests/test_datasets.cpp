// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "test_util.hpp"
#include "zdda/colorize.hpp"
#include "zdda/corrupt.hpp"
#include "zdda/dataset_store.hpp"
#include "zdda/idx_io.hpp"

using namespace zdda;
using zdda::testing::TempDir;
using zdda::testing::random_dataset;
using zdda::testing::random_image;

namespace {

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u32be(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

}  // namespace

TEST_CASE("idx: hand-written two-image fixture maps byte endpoints to [0,1]") {
  TempDir dir("idx");
  std::vector<std::uint8_t> images;
  push_u32be(images, 0x00000803u);
  push_u32be(images, 2);  // count
  push_u32be(images, 2);  // rows
  push_u32be(images, 2);  // cols
  // image 0: all zeros; image 1: all 255
  for (int i = 0; i < 4; ++i) images.push_back(0);
  for (int i = 0; i < 4; ++i) images.push_back(255);
  std::vector<std::uint8_t> labels;
  push_u32be(labels, 0x00000801u);
  push_u32be(labels, 2);
  labels.push_back(0);
  labels.push_back(1);
  write_bytes(dir / "imgs", images);
  write_bytes(dir / "lbls", labels);

  const auto ds = load_idx_dataset(dir / "imgs", dir / "lbls", "fixture");
  CHECK(ds.size() == 2);
  CHECK(ds.class_count == 2);
  CHECK(ds.shape == ImageShape{2, 2, 1});
  CHECK(ds.images.col(0).maxCoeff() == 0.0f);
  CHECK(ds.images.col(1).minCoeff() == 1.0f);
  CHECK(ds.labels == std::vector<int>{0, 1});
}

TEST_CASE("idx: malformed magic and count mismatch are rejected") {
  TempDir dir("idx_bad");
  std::vector<std::uint8_t> bad;
  push_u32be(bad, 0xdeadbeefu);
  push_u32be(bad, 0);
  push_u32be(bad, 1);
  push_u32be(bad, 1);
  write_bytes(dir / "bad_imgs", bad);
  CHECK_THROWS_AS(load_idx_images(dir / "bad_imgs"), FormatError);

  std::vector<std::uint8_t> images;
  push_u32be(images, 0x00000803u);
  push_u32be(images, 1);
  push_u32be(images, 1);
  push_u32be(images, 1);
  images.push_back(7);
  std::vector<std::uint8_t> labels;
  push_u32be(labels, 0x00000801u);
  push_u32be(labels, 2);
  labels.push_back(0);
  labels.push_back(1);
  write_bytes(dir / "imgs", images);
  write_bytes(dir / "lbls", labels);
  CHECK_THROWS_AS(load_idx_dataset(dir / "imgs", dir / "lbls"),
                  ConsistencyError);

  std::vector<std::uint8_t> bad_labels;
  push_u32be(bad_labels, 0x00000803u);
  push_u32be(bad_labels, 0);
  write_bytes(dir / "bad_lbls", bad_labels);
  CHECK_THROWS_AS(load_idx_labels(dir / "bad_lbls"), FormatError);
}

TEST_CASE("idx: gray and color round-trips are exact, plain and gzip") {
  TempDir dir("idx_rt");
  for (const int channels : {1, 3}) {
    const auto ds = random_dataset<float>(11, ImageShape{5, 4, channels}, 3,
                                          /*seed=*/42 + channels);
    for (const char* suffix : {"", ".gz"}) {
      const auto imgs = dir / ("i" + std::to_string(channels) + suffix);
      const auto lbls = dir / ("l" + std::to_string(channels) + suffix);
      save_idx_dataset(ds, imgs, lbls);
      const auto back = load_idx_dataset(imgs, lbls, ds.name, ds.class_count);
      CHECK(back.shape == ds.shape);
      CHECK(back.labels == ds.labels);
      REQUIRE(back.images.rows() == ds.images.rows());
      CHECK(back.images == ds.images);  // byte-grid values survive exactly
    }
  }
}

TEST_CASE("colorize: zero gray returns the patch, equal inputs cancel") {
  const auto patch = random_image<float>(ImageShape{6, 5, 3}, 1);
  Image<float> gray{ImageShape{6, 5, 1}, Vec<float>::Zero(30)};
  const auto out = colorize(gray, patch);
  CHECK(out.data == patch.data);

  // gray equal to every channel of the patch -> all-zero output
  Image<float> gray2{ImageShape{6, 5, 1}, patch.data.segment(0, 30)};
  Image<float> patch2 = patch;
  for (int c = 0; c < 3; ++c) patch2.data.segment(30 * c, 30) = gray2.data;
  CHECK(colorize(gray2, patch2).data.isZero(0.0f));
}

TEST_CASE("colorize: element-wise loop oracle on 100 random instances") {
  for (int trial = 0; trial < 100; ++trial) {
    const auto gray = random_image<double>(ImageShape{4, 4, 1}, 100 + trial);
    const auto patch = random_image<double>(ImageShape{4, 4, 3}, 200 + trial);
    const auto out = colorize(gray, patch);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          const double expect = std::abs(patch(c, y, x) - gray(0, y, x));
          CHECK(out(c, y, x) == doctest::Approx(expect).epsilon(0));
          CHECK(out(c, y, x) >= 0.0);
          CHECK(out(c, y, x) <= 1.0);
        }
  }
}

TEST_CASE("colorize: shape mismatches are dimension errors") {
  const auto patch = random_image<float>(ImageShape{4, 4, 3}, 1);
  const auto small = random_image<float>(ImageShape{3, 4, 1}, 2);
  CHECK_THROWS_AS(colorize(small, patch), DimensionError);
  const auto not_gray = random_image<float>(ImageShape{4, 4, 3}, 3);
  CHECK_THROWS_AS(colorize(not_gray, patch), DimensionError);
}

TEST_CASE("colorize_dataset: deterministic, label-preserving, in range") {
  const auto ds = random_dataset<float>(23, ImageShape{8, 8, 1}, 4, 7);
  std::vector<Image<float>> backgrounds;
  for (int i = 0; i < 3; ++i)
    backgrounds.push_back(random_image<float>(ImageShape{20, 17, 3}, 50 + i));

  const auto a = colorize_dataset(ds, backgrounds, 7);
  const auto b = colorize_dataset(ds, backgrounds, 7);
  CHECK(a.images == b.images);  // bitwise determinism
  CHECK(a.labels == ds.labels);
  CHECK(a.shape.channels == 3);
  CHECK(a.images.minCoeff() >= 0.0f);
  CHECK(a.images.maxCoeff() <= 1.0f);

  const auto c = colorize_dataset(ds, backgrounds, 8);
  CHECK(a.images != c.images);
}

TEST_CASE("colorize_dataset: zero image + image-sized background = background") {
  LabeledDataset<float> ds;
  ds.name = "zero";
  ds.shape = ImageShape{9, 7, 1};
  ds.images = Mat<float>::Zero(63, 1);
  ds.labels = {0};
  ds.class_count = 1;
  const auto bg = random_image<float>(ImageShape{9, 7, 3}, 3);
  const auto out = colorize_dataset(ds, {bg}, 11);
  CHECK(out.images.col(0) == bg.data);  // the only possible crop is the whole
}

TEST_CASE("colorize_dataset: undersized background is a dimension error") {
  const auto ds = random_dataset<float>(2, ImageShape{8, 8, 1}, 2, 1);
  CHECK_THROWS_AS(
      colorize_dataset(ds, {random_image<float>(ImageShape{7, 9, 3}, 1)}, 0),
      DimensionError);
}

TEST_CASE("make_pair_set: aligned, label-carrying, validating") {
  const auto gray = random_dataset<float>(12, ImageShape{6, 6, 1}, 3, 21);
  std::vector<Image<float>> bgs{random_image<float>(ImageShape{10, 10, 3}, 4)};
  const auto colored = colorize_dataset(gray, bgs, 5);

  const auto pairs = make_pair_set(gray, colored);
  CHECK(pairs.size() == 12);
  for (Eigen::Index i = 0; i < pairs.size(); ++i)
    CHECK(pairs.labels[static_cast<std::size_t>(i)] ==
          gray.labels[static_cast<std::size_t>(i)]);

  // empty in, empty out
  LabeledDataset<float> empty_gray{"e", ImageShape{6, 6, 1},
                                   Mat<float>(36, 0), {}, 3};
  LabeledDataset<float> empty_col{"e-m", ImageShape{6, 6, 3},
                                  Mat<float>(108, 0), {}, 3};
  CHECK(make_pair_set(empty_gray, empty_col).size() == 0);

  auto short_col = colored;
  short_col.images = colored.images.leftCols(11);
  short_col.labels.resize(11);
  CHECK_THROWS_AS(make_pair_set(gray, short_col), ConsistencyError);

  auto relabeled = colored;
  relabeled.labels[0] = (relabeled.labels[0] + 1) % 3;
  CHECK_THROWS_AS(make_pair_set(gray, relabeled), ConsistencyError);
}

TEST_CASE("blacken_augment: exact composition at p_train=20, copies=10") {
  auto ds = random_dataset<float>(100, ImageShape{5, 5, 1}, 5, 77);
  ds.images.array() += 0.002f;  // no accidental all-zero originals
  ds.images = ds.images.cwiseMin(1.0f);

  const auto out = blacken_augment(ds, 20.0, 10, 123);
  CHECK(out.size() == 1000);
  Eigen::Index black = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out.images.col(i).isZero(0.0f)) ++black;
  CHECK(black == 200);
  // labels survive blackening, tiled in order
  for (Eigen::Index i = 0; i < out.size(); ++i)
    CHECK(out.labels[static_cast<std::size_t>(i)] ==
          ds.labels[static_cast<std::size_t>(i % 100)]);
}

TEST_CASE("blacken_augment: p=0 tiles unchanged; p=100 blackens everything") {
  const auto ds = random_dataset<float>(9, ImageShape{4, 4, 1}, 3, 5);
  const auto none = blacken_augment(ds, 0.0, 3, 9);
  CHECK(none.size() == 27);
  for (int c = 0; c < 3; ++c)
    CHECK(none.images.middleCols(c * 9, 9) == ds.images);

  const auto all = blacken_augment(ds, 100.0, 3, 9);
  CHECK(all.images.isZero(0.0f));
  CHECK(all.labels == none.labels);
}

TEST_CASE("corrupt_for_test: identity at p=0, black everywhere at p=1") {
  const auto ds = random_dataset<float>(37, ImageShape{6, 6, 1}, 4, 15);
  const auto same =
      corrupt_for_test(ds, NoiseSpec{NoiseSpec::Model::black_image, 0.0, 3});
  CHECK(same.images == ds.images);
  const auto black =
      corrupt_for_test(ds, NoiseSpec{NoiseSpec::Model::black_image, 1.0, 3});
  CHECK(black.images.isZero(0.0f));
  CHECK(black.labels == ds.labels);
}

TEST_CASE("corrupt_for_test: rectangle scan oracle on 380 images") {
  // All-positive pixels, so every zeroed rectangle is observable.
  LabeledDataset<float> ds;
  ds.name = "bright";
  ds.shape = ImageShape{28, 28, 1};
  ds.class_count = 2;
  ds.images = Mat<float>::Constant(28 * 28, 380, 0.5f);
  ds.labels.assign(380, 1);

  const NoiseSpec noise{NoiseSpec::Model::black_rectangle, 0.5, 99};
  const auto out = corrupt_for_test(ds, noise);
  CHECK(out.images == corrupt_for_test(ds, noise).images);  // deterministic

  const int lo = 7, hi = 21;  // side bounds: round(0.25*28), round(0.75*28)
  Eigen::Index changed = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out.images.col(i) == ds.images.col(i)) continue;
    ++changed;
    // Scan the diff: it must be exactly one zeroed axis-aligned rectangle.
    int min_x = 28, max_x = -1, min_y = 28, max_y = -1;
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 28; ++x)
        if (out.images(y * 28 + x, i) != ds.images(y * 28 + x, i)) {
          min_x = std::min(min_x, x);
          max_x = std::max(max_x, x);
          min_y = std::min(min_y, y);
          max_y = std::max(max_y, y);
        }
    const int w = max_x - min_x + 1;
    const int h = max_y - min_y + 1;
    CHECK(w >= lo);
    CHECK(w <= hi);
    CHECK(h >= lo);
    CHECK(h <= hi);
    for (int y = min_y; y <= max_y; ++y)
      for (int x = min_x; x <= max_x; ++x)
        CHECK(out.images(y * 28 + x, i) == 0.0f);
  }
  CHECK(changed == 190);
}

TEST_CASE("subsample: balanced, deterministic, capacity-checked") {
  auto ds = random_dataset<float>(400, ImageShape{4, 4, 1}, 10, 31);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    ds.labels[i] = static_cast<int>(i % 10);  // exactly 40 per class

  const auto small = subsample(ds, 10, 5);
  CHECK(small.size() == 100);
  // stable ordering by (class, draw order)
  for (Eigen::Index i = 0; i < small.size(); ++i)
    CHECK(small.labels[static_cast<std::size_t>(i)] == i / 10);
  CHECK(subsample(ds, 10, 5).images == small.images);
  CHECK_THROWS_AS(subsample(ds, 41, 5), CapacityError);
}

TEST_CASE("subsample_pairs keeps the two streams aligned") {
  const auto gray = random_dataset<float>(60, ImageShape{6, 6, 1}, 3, 77);
  std::vector<Image<float>> bgs{random_image<float>(ImageShape{8, 8, 3}, 6)};
  const auto pairs = make_pair_set(gray, colorize_dataset(gray, bgs, 2));
  const auto sub = subsample_pairs(pairs, 5, 9);
  CHECK(sub.size() == 15);
  for (Eigen::Index i = 0; i < sub.size(); ++i) {
    // the source column must still be the gray parent of the target column
    bool found = false;
    for (Eigen::Index j = 0; j < pairs.size(); ++j)
      if (sub.source_images.col(i) == pairs.source_images.col(j) &&
          sub.target_images.col(i) == pairs.target_images.col(j)) {
        found = true;
        break;
      }
    CHECK(found);
  }
}

TEST_CASE("all transformations keep pixel values in [0,1]") {
  const auto ds = random_dataset<float>(31, ImageShape{8, 8, 1}, 4, 3);
  std::vector<Image<float>> bgs{random_image<float>(ImageShape{12, 12, 3}, 8)};
  const auto colored = colorize_dataset(ds, bgs, 4);
  const auto aug = blacken_augment(colored, 35.0, 2, 5);
  const auto rect = corrupt_for_test(
      aug, NoiseSpec{NoiseSpec::Model::black_rectangle, 0.4, 6});
  for (const auto* d : {&colored, &aug, &rect}) {
    CHECK(d->images.minCoeff() >= 0.0f);
    CHECK(d->images.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("dataset_store: directory round-trips bitwise with its manifest") {
  TempDir dir("store");
  const auto ds = random_dataset<float>(17, ImageShape{7, 5, 3}, 4, 55);
  DatasetManifest manifest;
  manifest.dataset_name = "random-m";
  manifest.source_dataset = "random";
  manifest.seed = 99;
  manifest.blend_formula = kBlendFormulaId;
  manifest.background_corpus_hash = 0x1234;
  manifest.background_corpus_split = "train";

  save_dataset_dir(dir / "ds", ds, manifest);
  CHECK(is_dataset_dir(dir / "ds"));
  const auto back = load_dataset_dir(dir / "ds");
  CHECK(back.manifest == manifest);
  CHECK(back.dataset.images == ds.images);
  CHECK(back.dataset.labels == ds.labels);
  CHECK(back.dataset.shape == ds.shape);
}
