// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_LOSSES_HPP_
#define ZDDA_NET_LOSSES_HPP_

#include <cmath>
#include <vector>

#include "zdda/image.hpp"

namespace zdda {

template <class S>
struct SoftmaxLoss {
  double value = 0.0;
  Mat<S> dlogits;  // (K x n), gradient of the mean loss
};

// Mean cross-entropy of softmax(logits) against integer labels.
// loss = mean_i -log softmax(logits_i)[label_i]
// dlogits = (softmax - one_hot) / n
template <class S>
SoftmaxLoss<S> softmax_cross_entropy(const Mat<S>& logits,
                                     const std::vector<int>& labels) {
  const Eigen::Index n = logits.cols();
  const Eigen::Index k = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ConsistencyError("softmax_cross_entropy: label count mismatch");
  for (int l : labels)
    if (l < 0 || l >= k)
      throw ConsistencyError("softmax_cross_entropy: label out of range");

  SoftmaxLoss<S> out;
  out.dlogits.resize(k, n);
  double total = 0.0;
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = logits.col(i);
    const S m = col.maxCoeff();
    Vec<S> e = (col.array() - m).exp();
    const S z = e.sum();
    total += -(static_cast<double>(col[labels[i]] - m) -
               std::log(static_cast<double>(z)));
    out.dlogits.col(i) = e * (S(1) / z) * static_cast<S>(inv_n);
    out.dlogits(labels[i], i) -= static_cast<S>(inv_n);
  }
  out.value = n > 0 ? total * inv_n : 0.0;
  return out;
}

template <class S>
struct AlignmentLoss {
  double value = 0.0;
  Mat<S> dfa, dfb;
};

// Feature alignment: loss = (1/n) sum_i ||fa_i - fb_i||^2 (mean over the
// batch, sum over feature dimensions). dfa = 2 (fa - fb) / n, dfb = -dfa.
template <class S>
AlignmentLoss<S> l2_alignment_loss(const Mat<S>& fa, const Mat<S>& fb) {
  if (fa.rows() != fb.rows() || fa.cols() != fb.cols())
    throw DimensionError("l2_alignment_loss: shape mismatch");
  const Eigen::Index n = fa.cols();
  AlignmentLoss<S> out;
  Mat<S> diff = fa - fb;
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  out.value = static_cast<double>(diff.squaredNorm()) * inv_n;
  out.dfa = diff * static_cast<S>(2.0 * inv_n);
  out.dfb = -out.dfa;
  return out;
}

}  // namespace zdda

#endif  // ZDDA_NET_LOSSES_HPP_
