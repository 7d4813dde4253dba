// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_TRAIN_HPP_
#define ZDDA_NET_TRAIN_HPP_

#include <vector>

#include "zdda/net/losses.hpp"
#include "zdda/net/sgd.hpp"

namespace zdda {

template <class S>
Mat<S> gather_columns(const Mat<S>& all, const std::vector<Eigen::Index>& idx) {
  Mat<S> out(all.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = all.col(idx[i]);
  return out;
}

template <class T>
std::vector<T> gather(const std::vector<T>& all,
                      const std::vector<Eigen::Index>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (Eigen::Index i : idx) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

// Cycles through a fixed index pool in seeded-shuffled epochs; one call
// yields the indices of one mini-batch.
class EpochSampler {
 public:
  EpochSampler(std::vector<Eigen::Index> pool, int batch_size,
               std::uint64_t seed)
      : pool_(std::move(pool)), batch_(batch_size), rng_(seed) {
    if (pool_.empty()) throw CapacityError("EpochSampler: empty index pool");
    rng_.shuffle(pool_);
  }

  static std::vector<Eigen::Index> full_pool(Eigen::Index n) {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    return pool;
  }

  std::vector<Eigen::Index> next() {
    std::vector<Eigen::Index> out;
    out.reserve(batch_);
    for (int i = 0; i < batch_; ++i) {
      if (cursor_ == pool_.size()) {
        rng_.shuffle(pool_);
        cursor_ = 0;
      }
      out.push_back(pool_[cursor_++]);
    }
    return out;
  }

 private:
  std::vector<Eigen::Index> pool_;
  int batch_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

// Splits [0, n) into a training pool and a small held-out monitoring set
// (about n/5, capped at 512). Tiny inputs monitor on everything instead of
// starving the training pool.
struct MonitorSplit {
  std::vector<Eigen::Index> train_idx;
  std::vector<Eigen::Index> monitor_idx;
};

inline MonitorSplit make_monitor_split(Eigen::Index n, std::uint64_t seed) {
  MonitorSplit split;
  const Eigen::Index monitor_n = std::min<Eigen::Index>(512, n / 5);
  if (monitor_n < 1) {
    split.train_idx = EpochSampler::full_pool(n);
    split.monitor_idx = split.train_idx;
    return split;
  }
  Rng rng(derive_seed(seed, "monitor"));
  std::vector<bool> held(static_cast<std::size_t>(n), false);
  for (std::size_t idx : rng.sample_without_replacement(
           static_cast<std::size_t>(n), static_cast<std::size_t>(monitor_n))) {
    held[idx] = true;
    split.monitor_idx.push_back(static_cast<Eigen::Index>(idx));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!held[static_cast<std::size_t>(i)]) split.train_idx.push_back(i);
  return split;
}

// Loss on the held-out monitoring set at initialization and after training,
// plus a curve sampled every `monitor_stride` iterations.
struct TrainStats {
  double initial_monitor_loss = 0.0;
  double final_monitor_loss = 0.0;
  std::vector<double> monitor_curve;
  long monitor_stride = 500;
  long iterations = 0;

  bool monitor_decreased() const {
    return final_monitor_loss < initial_monitor_loss;
  }
};

inline constexpr long kMonitorStride = 500;

// Supervised training of a feature branch plus classifier head with
// mini-batch momentum SGD over seeded-shuffled epochs.
template <class S>
TrainStats train_supervised(BranchState<S>& branch, ClassifierState<S>& cls,
                            const LabeledDataset<S>& ds,
                            const TrainHyper& hyper) {
  ds.validate();
  hyper.validate();
  if (ds.size() == 0) throw CapacityError("train_supervised: empty dataset");
  if (branch.frozen)
    throw ContractViolation("train_supervised: branch is frozen");
  if (ds.class_count != cls.class_count)
    throw ConsistencyError("train_supervised: class count mismatch");

  const MonitorSplit split = make_monitor_split(ds.size(), hyper.seed);
  const Mat<S> monitor_x = gather_columns(ds.images, split.monitor_idx);
  const std::vector<int> monitor_y = gather(ds.labels, split.monitor_idx);

  const auto monitor_loss = [&]() {
    const Mat<S> f = forward_features(branch, monitor_x, ds.shape);
    const Mat<S> logits = forward_logits(cls, f);
    return softmax_cross_entropy(logits, monitor_y).value;
  };

  TrainStats stats;
  stats.monitor_stride = kMonitorStride;
  stats.iterations = hyper.iterations;
  stats.initial_monitor_loss = monitor_loss();
  stats.monitor_curve.push_back(stats.initial_monitor_loss);

  EpochSampler sampler(split.train_idx, hyper.batch_size,
                       derive_seed(hyper.seed, "batches"));
  ParamSet<S> branch_grads = branch.params.zeros_like();
  ParamSet<S> cls_grads = cls.params.zeros_like();
  ParamSet<S> branch_vel = branch.params.zeros_like();
  ParamSet<S> cls_vel = cls.params.zeros_like();
  BranchTrace<S> trace;
  HeadTrace<S> head_trace;

  for (long it = 0; it < hyper.iterations; ++it) {
    const auto idx = sampler.next();
    const Mat<S> x = gather_columns(ds.images, idx);
    const std::vector<int> y = gather(ds.labels, idx);

    const Mat<S> f = forward_features(branch, x, ds.shape, &trace);
    const Mat<S> logits = forward_logits(cls, f, &head_trace);
    const SoftmaxLoss<S> loss = softmax_cross_entropy(logits, y);

    branch_grads.set_zero();
    cls_grads.set_zero();
    const Mat<S> dfeatures =
        head_backward(cls, head_trace, loss.dlogits, cls_grads);
    branch_backward(branch, trace, dfeatures, branch_grads);

    sgd_step(branch, branch_grads, branch_vel, hyper);
    sgd_step(cls, cls_grads, cls_vel, hyper);

    if ((it + 1) % kMonitorStride == 0)
      stats.monitor_curve.push_back(monitor_loss());
  }

  stats.final_monitor_loss =
      hyper.iterations > 0 ? monitor_loss() : stats.initial_monitor_loss;
  return stats;
}

}  // namespace zdda

#endif  // ZDDA_NET_TRAIN_HPP_
