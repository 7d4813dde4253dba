// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EVAL_REPORT_HPP_
#define ZDDA_EVAL_REPORT_HPP_

#include <vector>

#include "zdda/image.hpp"

namespace zdda {

// Accuracy summary of one classifier on one dataset. confusion(i, j) counts
// items of true class i predicted as class j, so the trace is the number of
// correct predictions.
struct EvalReport {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // recall per class; 0 if untested
  double mean_per_class_accuracy = 0.0;    // over classes with >= 1 item
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> confusion;
  std::int64_t n = 0;
};

// Argmax with ties resolved to the lowest class index.
template <class S>
int argmax_lowest(const Eigen::Ref<const Vec<S>>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline EvalReport report_from_predictions(const std::vector<int>& predicted,
                                          const std::vector<int>& labels,
                                          int class_count) {
  if (predicted.size() != labels.size())
    throw ConsistencyError("report: prediction/label count mismatch");
  EvalReport r;
  r.n = static_cast<std::int64_t>(labels.size());
  r.confusion.setZero(class_count, class_count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    r.confusion(labels[i], predicted[i]) += 1;

  std::int64_t correct = 0;
  double recall_sum = 0.0;
  int tested_classes = 0;
  r.per_class_accuracy.assign(class_count, 0.0);
  for (int k = 0; k < class_count; ++k) {
    const std::int64_t row_total = r.confusion.row(k).sum();
    correct += r.confusion(k, k);
    if (row_total > 0) {
      r.per_class_accuracy[k] =
          static_cast<double>(r.confusion(k, k)) / static_cast<double>(row_total);
      recall_sum += r.per_class_accuracy[k];
      ++tested_classes;
    }
  }
  r.overall_accuracy =
      r.n > 0 ? static_cast<double>(correct) / static_cast<double>(r.n) : 0.0;
  r.mean_per_class_accuracy =
      tested_classes > 0 ? recall_sum / tested_classes : 0.0;
  return r;
}

inline constexpr Eigen::Index kEvalChunk = 512;

// Evaluates a logits function over a dataset in chunks. The predictor must
// map (images, shape) -> (class_count x n) logits.
template <class S, class LogitsFn>
EvalReport evaluate(LogitsFn&& logits_fn, const LabeledDataset<S>& ds,
                    int class_count) {
  ds.validate();
  if (ds.size() == 0) throw CapacityError("evaluate: empty dataset");
  if (ds.class_count != class_count)
    throw ConsistencyError("evaluate: class count mismatch");

  std::vector<int> predicted(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index at = 0; at < ds.size(); at += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, ds.size() - at);
    const Mat<S> logits =
        logits_fn(Mat<S>(ds.images.middleCols(at, len)), ds.shape);
    if (logits.rows() != class_count || logits.cols() != len)
      throw DimensionError("evaluate: predictor returned wrong logits shape");
    for (Eigen::Index j = 0; j < len; ++j)
      predicted[static_cast<std::size_t>(at + j)] =
          argmax_lowest<S>(logits.col(j));
  }
  return report_from_predictions(predicted, ds.labels, class_count);
}

// Convenience overload for branch+head compositions.
template <class S, class Composed>
EvalReport evaluate_composed(const Composed& c, const LabeledDataset<S>& ds) {
  return evaluate<S>(
      [&](const Mat<S>& x, const ImageShape& shape) { return c.logits(x, shape); },
      ds, c.class_count());
}

}  // namespace zdda

#endif  // ZDDA_EVAL_REPORT_HPP_
