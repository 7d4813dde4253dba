// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EVAL_NOISE_GRID_HPP_
#define ZDDA_EVAL_NOISE_GRID_HPP_

#include "zdda/corrupt.hpp"
#include "zdda/eval/fusion_baseline.hpp"

namespace zdda {

// Accuracy of the two fusion methods over a grid of independent corruption
// rates (percent) for the source and target test streams.
struct NoiseGridResult {
  std::vector<double> p_source_levels;  // percents, grid rows
  std::vector<double> p_target_levels;  // percents, grid columns
  Mat<double> acc_zdda3;
  Mat<double> acc_naive;
  Mat<double> diff;  // acc_zdda3 - acc_naive, cell-wise
  std::int64_t n = 0;
  std::string noise_model;

  bool complete() const {
    const auto rows = static_cast<Eigen::Index>(p_source_levels.size());
    const auto cols = static_cast<Eigen::Index>(p_target_levels.size());
    const auto ok = [&](const Mat<double>& m) {
      return m.rows() == rows && m.cols() == cols && m.allFinite();
    };
    return rows > 0 && cols > 0 && ok(acc_zdda3) && ok(acc_naive) && ok(diff);
  }
};

inline std::vector<double> default_noise_levels() {
  return {0, 20, 40, 60, 80, 100};
}

inline const char* to_string(NoiseSpec::Model m) {
  return m == NoiseSpec::Model::black_image ? "black_image" : "black_rectangle";
}

// For each cell (i, j) the two test streams are corrupted independently at
// (p_source_levels[i], p_target_levels[j]) and both methods are evaluated
// on the identical corrupted data. Cell seeds derive from (seed, i, j), so
// evaluation order cannot change any number.
template <class S>
NoiseGridResult noise_grid_eval(const FusionAssembly<S>& fusion,
                                const ComposedClassifier<S>& c_source,
                                const ComposedClassifier<S>& c_target,
                                const DualDomainPairSet<S>& test_pairs,
                                const std::vector<double>& p_source_levels,
                                const std::vector<double>& p_target_levels,
                                NoiseSpec::Model model, std::uint64_t seed) {
  test_pairs.validate();
  if (test_pairs.labels.empty())
    throw CapacityError("noise_grid_eval needs labeled pairs");
  if (fusion.mode != FusionMode::test_dual)
    throw ConfigError("noise_grid_eval expects the test_dual assembly");

  NoiseGridResult grid;
  grid.p_source_levels = p_source_levels;
  grid.p_target_levels = p_target_levels;
  grid.noise_model = to_string(model);
  grid.n = test_pairs.size();
  const auto rows = static_cast<Eigen::Index>(p_source_levels.size());
  const auto cols = static_cast<Eigen::Index>(p_target_levels.size());
  grid.acc_zdda3.resize(rows, cols);
  grid.acc_naive.resize(rows, cols);
  grid.diff.resize(rows, cols);

  const LabeledDataset<S> clean_src = test_pairs.source_dataset();
  const LabeledDataset<S> clean_tgt = test_pairs.target_dataset();

  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const std::uint64_t cell = derive_seed(seed, "cell", i, j);
      NoiseSpec src_noise{model, p_source_levels[i] / 100.0,
                          derive_seed(cell, "source")};
      NoiseSpec tgt_noise{model, p_target_levels[j] / 100.0,
                          derive_seed(cell, "target")};
      const LabeledDataset<S> src = corrupt_for_test(clean_src, src_noise);
      const LabeledDataset<S> tgt = corrupt_for_test(clean_tgt, tgt_noise);

      DualDomainPairSet<S> corrupted = test_pairs;
      corrupted.source_images = src.images;
      corrupted.target_images = tgt.images;

      grid.acc_zdda3(i, j) =
          evaluate_fusion(fusion, corrupted).overall_accuracy;
      grid.acc_naive(i, j) =
          evaluate_naive_fusion(c_source, c_target, corrupted).overall_accuracy;
      grid.diff(i, j) = grid.acc_zdda3(i, j) - grid.acc_naive(i, j);
    }
  }
  return grid;
}

}  // namespace zdda

#endif  // ZDDA_EVAL_NOISE_GRID_HPP_
