// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_CORRUPT_HPP_
#define ZDDA_CORRUPT_HPP_

#include <algorithm>
#include <vector>

#include "zdda/image.hpp"
#include "zdda/rng.hpp"

namespace zdda {

// The exact index set blacken_augment zeroes for a given draw; exposed so
// streaming consumers of the augmentation produce identical data.
inline std::vector<std::size_t> blacken_indices(Eigen::Index total,
                                                Eigen::Index black,
                                                std::uint64_t seed) {
  Rng rng(seed);
  return rng.sample_without_replacement(static_cast<std::size_t>(total),
                                        static_cast<std::size_t>(black));
}

// Training augmentation: the dataset tiled `copies` times, with exactly
// round(p_train/100 * copies * |ds|) images replaced by all-black images.
// Replaced indices are drawn without replacement; labels stay untouched.
template <class S>
LabeledDataset<S> blacken_augment(const LabeledDataset<S>& ds, double p_train,
                                  int copies, std::uint64_t seed) {
  ds.validate();
  if (p_train < 0.0 || p_train > 100.0)
    throw ConfigError("blacken_augment: p_train must be in [0,100]");
  if (copies < 1) throw ConfigError("blacken_augment: copies must be >= 1");

  const Eigen::Index n = ds.size();
  const Eigen::Index total = n * copies;
  LabeledDataset<S> out;
  out.name = ds.name + "+black";
  out.shape = ds.shape;
  out.class_count = ds.class_count;
  out.images.resize(ds.images.rows(), total);
  out.labels.resize(total);
  for (int c = 0; c < copies; ++c) {
    out.images.middleCols(c * n, n) = ds.images;
    std::copy(ds.labels.begin(), ds.labels.end(), out.labels.begin() + c * n);
  }

  const Eigen::Index black = corrupt_count(p_train / 100.0, total);
  for (std::size_t idx : blacken_indices(total, black, seed))
    out.images.col(static_cast<Eigen::Index>(idx)).setZero();
  return out;
}

// Test-time corruption. black_image zeroes whole images; black_rectangle
// zeroes one axis-aligned rectangle per corrupted image, with each side
// uniform in [25%, 75%] of the corresponding image side and position
// uniform over in-frame placements.
template <class S>
LabeledDataset<S> corrupt_for_test(const LabeledDataset<S>& ds,
                                   const NoiseSpec& noise) {
  ds.validate();
  noise.validate();

  LabeledDataset<S> out = ds;
  const Eigen::Index hit = corrupt_count(noise.probability, ds.size());
  Rng rng(noise.seed);
  const auto victims = rng.sample_without_replacement(ds.size(), hit);

  if (noise.model == NoiseSpec::Model::black_image) {
    for (std::size_t idx : victims)
      out.images.col(static_cast<Eigen::Index>(idx)).setZero();
    return out;
  }

  const int H = ds.shape.height;
  const int W = ds.shape.width;
  const auto side = [&rng](int extent) {
    const int lo = static_cast<int>(std::lround(0.25 * extent));
    const int hi = static_cast<int>(std::lround(0.75 * extent));
    return static_cast<int>(rng.uniform_int(std::max(lo, 1), std::max(hi, 1)));
  };
  for (std::size_t idx : victims) {
    const int rw = side(W);
    const int rh = side(H);
    const int x0 = static_cast<int>(rng.uniform_int(0, W - rw));
    const int y0 = static_cast<int>(rng.uniform_int(0, H - rh));
    auto col = out.images.col(static_cast<Eigen::Index>(idx));
    for (int c = 0; c < ds.shape.channels; ++c)
      for (int y = y0; y < y0 + rh; ++y)
        col.segment(c * ds.shape.plane() + y * W + x0, rw).setZero();
  }
  return out;
}

// The index selection behind subsample(): exactly per_class indices per
// class, ordered by (class, draw order). Exposed so index-aligned
// structures (e.g. pair sets) subsample consistently.
inline std::vector<Eigen::Index> subsample_indices(
    const std::vector<int>& labels, int class_count, int per_class,
    std::uint64_t seed, const std::string& context = "subsample") {
  if (per_class < 0) throw ConfigError(context + ": per_class must be >= 0");
  std::vector<std::vector<Eigen::Index>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));

  Rng rng(seed);
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(per_class) * class_count);
  for (int k = 0; k < class_count; ++k) {
    const auto& pool = by_class[k];
    if (static_cast<int>(pool.size()) < per_class)
      throw CapacityError(context + ": class " + std::to_string(k) +
                          " has fewer than " + std::to_string(per_class) +
                          " items");
    for (std::size_t idx :
         rng.sample_without_replacement(pool.size(), per_class))
      chosen.push_back(pool[idx]);
  }
  return chosen;
}

// Seeded class-balanced subsample: exactly per_class items per class,
// ordered by (class, draw order).
template <class S>
LabeledDataset<S> subsample(const LabeledDataset<S>& ds, int per_class,
                            std::uint64_t seed) {
  ds.validate();
  const std::vector<Eigen::Index> chosen = subsample_indices(
      ds.labels, ds.class_count, per_class, seed, ds.name);

  LabeledDataset<S> out;
  out.name = ds.name + "@" + std::to_string(per_class);
  out.shape = ds.shape;
  out.class_count = ds.class_count;
  out.images.resize(ds.images.rows(), static_cast<Eigen::Index>(chosen.size()));
  out.labels.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.images.col(static_cast<Eigen::Index>(i)) = ds.images.col(chosen[i]);
    out.labels[i] = ds.labels[chosen[i]];
  }
  return out;
}

// Class-balanced subsample of labeled pairs; both streams stay aligned.
template <class S>
DualDomainPairSet<S> subsample_pairs(const DualDomainPairSet<S>& pairs,
                                     int per_class, std::uint64_t seed) {
  pairs.validate();
  if (pairs.labels.empty())
    throw CapacityError("subsample_pairs: pair set has no labels");
  const std::vector<Eigen::Index> chosen = subsample_indices(
      pairs.labels, pairs.class_count, per_class, seed, pairs.name);

  DualDomainPairSet<S> out;
  out.name = pairs.name + "@" + std::to_string(per_class);
  out.source_shape = pairs.source_shape;
  out.target_shape = pairs.target_shape;
  out.class_count = pairs.class_count;
  out.source_images.resize(pairs.source_images.rows(),
                           static_cast<Eigen::Index>(chosen.size()));
  out.target_images.resize(pairs.target_images.rows(),
                           static_cast<Eigen::Index>(chosen.size()));
  out.labels.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.source_images.col(static_cast<Eigen::Index>(i)) =
        pairs.source_images.col(chosen[i]);
    out.target_images.col(static_cast<Eigen::Index>(i)) =
        pairs.target_images.col(chosen[i]);
    out.labels[i] = pairs.labels[chosen[i]];
  }
  return out;
}

}  // namespace zdda

#endif  // ZDDA_CORRUPT_HPP_
