// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EVAL_FUSION_BASELINE_HPP_
#define ZDDA_EVAL_FUSION_BASELINE_HPP_

#include "zdda/eval/report.hpp"
#include "zdda/pipeline/assemblies.hpp"

namespace zdda {

// Numerically stable column-wise softmax.
template <class S>
Mat<S> softmax_probs(const Mat<S>& logits) {
  Mat<S> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Vec<S> e = (logits.col(i).array() - logits.col(i).maxCoeff()).exp();
    p.col(i) = e / e.sum();
  }
  return p;
}

// Naive fusion rule on per-classifier probability tables (K x n each):
// the label of the single highest probability among the concatenated 2K
// values. A cross-classifier tie goes to the source classifier; a tie
// within one classifier goes to the lowest class index.
template <class S>
std::vector<int> naive_fusion_from_probs(const Mat<S>& source_probs,
                                         const Mat<S>& target_probs) {
  if (source_probs.rows() != target_probs.rows() ||
      source_probs.cols() != target_probs.cols())
    throw ConsistencyError("naive fusion: probability table shape mismatch");
  std::vector<int> labels(static_cast<std::size_t>(source_probs.cols()));
  for (Eigen::Index i = 0; i < source_probs.cols(); ++i) {
    const int a_s = argmax_lowest<S>(source_probs.col(i));
    const int a_t = argmax_lowest<S>(target_probs.col(i));
    labels[static_cast<std::size_t>(i)] =
        source_probs(a_s, i) >= target_probs(a_t, i) ? a_s : a_t;
  }
  return labels;
}

// Naive fusion over index-aligned batches through the two single-domain
// classifiers.
template <class S>
std::vector<int> naive_fusion_predict(const ComposedClassifier<S>& c_source,
                                      const ComposedClassifier<S>& c_target,
                                      const Mat<S>& source_batch,
                                      const ImageShape& source_shape,
                                      const Mat<S>& target_batch,
                                      const ImageShape& target_shape) {
  if (source_batch.cols() != target_batch.cols())
    throw ConsistencyError("naive fusion: batch length mismatch");
  const Mat<S> ps = softmax_probs(c_source.logits(source_batch, source_shape));
  const Mat<S> pt = softmax_probs(c_target.logits(target_batch, target_shape));
  return naive_fusion_from_probs(ps, pt);
}

// Full-dataset naive-fusion evaluation over labeled test pairs.
template <class S>
EvalReport evaluate_naive_fusion(const ComposedClassifier<S>& c_source,
                                 const ComposedClassifier<S>& c_target,
                                 const DualDomainPairSet<S>& pairs) {
  pairs.validate();
  if (pairs.size() == 0 || pairs.labels.empty())
    throw CapacityError("naive fusion evaluation needs labeled pairs");
  std::vector<int> predicted;
  predicted.reserve(static_cast<std::size_t>(pairs.size()));
  for (Eigen::Index at = 0; at < pairs.size(); at += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pairs.size() - at);
    const auto batch = naive_fusion_predict(
        c_source, c_target, Mat<S>(pairs.source_images.middleCols(at, len)),
        pairs.source_shape, Mat<S>(pairs.target_images.middleCols(at, len)),
        pairs.target_shape);
    predicted.insert(predicted.end(), batch.begin(), batch.end());
  }
  return report_from_predictions(predicted, pairs.labels, pairs.class_count);
}

// Fusion-assembly evaluation over labeled test pairs.
template <class S>
EvalReport evaluate_fusion(const FusionAssembly<S>& fusion,
                           const DualDomainPairSet<S>& pairs) {
  pairs.validate();
  if (pairs.size() == 0 || pairs.labels.empty())
    throw CapacityError("fusion evaluation needs labeled pairs");
  std::vector<int> predicted;
  predicted.reserve(static_cast<std::size_t>(pairs.size()));
  for (Eigen::Index at = 0; at < pairs.size(); at += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pairs.size() - at);
    const Mat<S> logits = fusion.logits(
        Mat<S>(pairs.source_images.middleCols(at, len)), pairs.source_shape,
        Mat<S>(pairs.target_images.middleCols(at, len)), pairs.target_shape);
    for (Eigen::Index j = 0; j < len; ++j)
      predicted.push_back(argmax_lowest<S>(logits.col(j)));
  }
  return report_from_predictions(predicted, pairs.labels, pairs.class_count);
}

}  // namespace zdda

#endif  // ZDDA_EVAL_FUSION_BASELINE_HPP_
