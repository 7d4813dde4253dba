// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_PIPELINE_STEPS_HPP_
#define ZDDA_PIPELINE_STEPS_HPP_

#include <utility>

#include "zdda/corrupt.hpp"
#include "zdda/pipeline/assemblies.hpp"

namespace zdda {

// Forward pass over an arbitrary number of images, chunked to bound the
// im2col scratch memory.
template <class S>
Mat<S> forward_features_all(const BranchState<S>& branch, const Mat<S>& images,
                            const ImageShape& shape,
                            Eigen::Index chunk = 256) {
  Mat<S> out(branch.spec.feature_dim, images.cols());
  for (Eigen::Index at = 0; at < images.cols(); at += chunk) {
    const Eigen::Index len = std::min(chunk, images.cols() - at);
    out.middleCols(at, len) =
        forward_features(branch, Mat<S>(images.middleCols(at, len)), shape);
  }
  return out;
}

template <class S>
struct Step1Result {
  BranchState<S> s1;
  TrainStats stats;
};

// Step 1: simulate the target representation from source-modality input.
// Trains s1 so that s1(source_i) approaches t(target_i) on the
// task-irrelevant pairs, under the L2 alignment loss; t stays fixed.
template <class S>
Step1Result<S> step1_align(const DualDomainPairSet<S>& pairs,
                           const BranchState<S>& t,
                           const BranchState<S>& s1_init,
                           const TrainHyper& hyper) {
  pairs.validate();
  hyper.validate();
  if (!t.frozen)
    throw ContractViolation("step1_align: t must be frozen");
  if (pairs.size() == 0) throw CapacityError("step1_align: empty pair set");
  if (t.spec.input_channels != pairs.target_shape.channels ||
      s1_init.spec.input_channels != pairs.source_shape.channels)
    throw DimensionError("step1_align: branch/pair channel mismatch");
  if (t.spec.feature_dim != s1_init.spec.feature_dim)
    throw DimensionError("step1_align: feature widths differ");

  Step1Result<S> out{s1_init, {}};
  out.s1.tag = BranchTag::s1;
  BranchState<S>& s1 = out.s1;

  // t is frozen, so its features over the whole pair set are constants.
  const Mat<S> t_features = forward_features_all(
      t, pairs.target_images, pairs.target_shape);

  const MonitorSplit split = make_monitor_split(pairs.size(), hyper.seed);
  const Mat<S> monitor_x =
      gather_columns(pairs.source_images, split.monitor_idx);
  const Mat<S> monitor_t = gather_columns(t_features, split.monitor_idx);

  const auto monitor_loss = [&]() {
    const Mat<S> f = forward_features(s1, monitor_x, pairs.source_shape);
    return l2_alignment_loss(f, monitor_t).value;
  };

  TrainStats& stats = out.stats;
  stats.monitor_stride = kMonitorStride;
  stats.iterations = hyper.iterations;
  stats.initial_monitor_loss = monitor_loss();
  stats.monitor_curve.push_back(stats.initial_monitor_loss);

  EpochSampler sampler(split.train_idx, hyper.batch_size,
                       derive_seed(hyper.seed, "batches"));
  ParamSet<S> grads = s1.params.zeros_like();
  ParamSet<S> velocity = s1.params.zeros_like();
  BranchTrace<S> trace;

  for (long it = 0; it < hyper.iterations; ++it) {
    const auto idx = sampler.next();
    const Mat<S> xs = gather_columns(pairs.source_images, idx);
    const Mat<S> ft = gather_columns(t_features, idx);

    const Mat<S> fs = forward_features(s1, xs, pairs.source_shape, &trace);
    const AlignmentLoss<S> loss = l2_alignment_loss(fs, ft);

    grads.set_zero();
    branch_backward(s1, trace, loss.dfa, grads);
    sgd_step(s1, grads, velocity, hyper);

    if ((it + 1) % kMonitorStride == 0)
      stats.monitor_curve.push_back(monitor_loss());
  }
  stats.final_monitor_loss =
      hyper.iterations > 0 ? monitor_loss() : stats.initial_monitor_loss;
  return out;
}

template <class S>
struct Step2Result {
  BranchState<S> s2;
  ClassifierState<S> source_classifier;
  TrainStats stats;
  // The two weighted loss terms at initialization, for the
  // "comparable numerical values" sanity check.
  double softmax_term_initial = 0.0;
  double l2_term_initial = 0.0;
};

// Step 2: train s2 (initialized from s1, sharing one parameter set across
// both of its roles) and a fresh source classifier, minimizing
//   w_softmax * CE(classifier(s2(T-R batch)), labels)
// + w_l2      * L2(s2(T-I source batch), t(T-I target batch)).
// The two streams are batched in lockstep with equal batch size.
template <class S>
Step2Result<S> step2_joint(const LabeledDataset<S>& tr_source,
                           const DualDomainPairSet<S>& pairs,
                           const BranchState<S>& t, const BranchState<S>& s1,
                           const TrainHyper& hyper) {
  tr_source.validate();
  pairs.validate();
  hyper.validate();
  if (!t.frozen)
    throw ContractViolation("step2_joint: t must be frozen");
  if (tr_source.size() == 0 || pairs.size() == 0)
    throw CapacityError("step2_joint: empty training input");
  if (tr_source.class_count < 2)
    throw ConsistencyError("step2_joint: need at least two classes");
  if (tr_source.shape.channels != s1.spec.input_channels)
    throw DimensionError("step2_joint: T-R data channel mismatch");

  Step2Result<S> out;
  out.s2 = s1;  // pre-trained from s1
  out.s2.tag = BranchTag::s2;
  out.s2.frozen = false;
  out.source_classifier = build_source_classifier<S>(
      s1.spec.feature_dim, tr_source.class_count,
      derive_seed(hyper.seed, "classifier"));
  BranchState<S>& s2 = out.s2;
  ClassifierState<S>& cls = out.source_classifier;

  const Mat<S> t_features =
      forward_features_all(t, pairs.target_images, pairs.target_shape);

  const MonitorSplit tr_split =
      make_monitor_split(tr_source.size(), derive_seed(hyper.seed, "tr"));
  const MonitorSplit ti_split =
      make_monitor_split(pairs.size(), derive_seed(hyper.seed, "ti"));
  const Mat<S> mon_tr_x = gather_columns(tr_source.images, tr_split.monitor_idx);
  const std::vector<int> mon_tr_y = gather(tr_source.labels, tr_split.monitor_idx);
  const Mat<S> mon_ti_x = gather_columns(pairs.source_images, ti_split.monitor_idx);
  const Mat<S> mon_ti_t = gather_columns(t_features, ti_split.monitor_idx);

  const auto monitor_terms = [&]() {
    const Mat<S> f = forward_features(s2, mon_tr_x, tr_source.shape);
    const double ce =
        softmax_cross_entropy(forward_logits(cls, f), mon_tr_y).value;
    const Mat<S> fs = forward_features(s2, mon_ti_x, pairs.source_shape);
    const double l2 = l2_alignment_loss(fs, mon_ti_t).value;
    return std::pair<double, double>{hyper.w_softmax * ce, hyper.w_l2 * l2};
  };

  TrainStats& stats = out.stats;
  stats.monitor_stride = kMonitorStride;
  stats.iterations = hyper.iterations;
  {
    const auto [ws_term, wl2_term] = monitor_terms();
    out.softmax_term_initial = ws_term;
    out.l2_term_initial = wl2_term;
    stats.initial_monitor_loss = ws_term + wl2_term;
    stats.monitor_curve.push_back(stats.initial_monitor_loss);
  }

  EpochSampler tr_sampler(tr_split.train_idx, hyper.batch_size,
                          derive_seed(hyper.seed, "tr_batches"));
  EpochSampler ti_sampler(ti_split.train_idx, hyper.batch_size,
                          derive_seed(hyper.seed, "ti_batches"));
  ParamSet<S> s2_grads = s2.params.zeros_like();
  ParamSet<S> cls_grads = cls.params.zeros_like();
  ParamSet<S> s2_vel = s2.params.zeros_like();
  ParamSet<S> cls_vel = cls.params.zeros_like();
  BranchTrace<S> tr_trace, ti_trace;
  HeadTrace<S> head_trace;

  for (long it = 0; it < hyper.iterations; ++it) {
    const auto tr_idx = tr_sampler.next();
    const auto ti_idx = ti_sampler.next();
    const Mat<S> x_tr = gather_columns(tr_source.images, tr_idx);
    const std::vector<int> y_tr = gather(tr_source.labels, tr_idx);
    const Mat<S> x_ti = gather_columns(pairs.source_images, ti_idx);
    const Mat<S> f_t = gather_columns(t_features, ti_idx);

    s2_grads.set_zero();
    cls_grads.set_zero();

    // Task-relevant stream: softmax supervision through the classifier.
    const Mat<S> f_tr = forward_features(s2, x_tr, tr_source.shape, &tr_trace);
    const Mat<S> logits = forward_logits(cls, f_tr, &head_trace);
    SoftmaxLoss<S> ce = softmax_cross_entropy(logits, y_tr);
    ce.dlogits *= static_cast<S>(hyper.w_softmax);
    const Mat<S> df_tr = head_backward(cls, head_trace, ce.dlogits, cls_grads);
    branch_backward(s2, tr_trace, df_tr, s2_grads);

    // Task-irrelevant stream: alignment against the frozen t features,
    // through the same s2 parameters.
    const Mat<S> f_ti = forward_features(s2, x_ti, pairs.source_shape, &ti_trace);
    AlignmentLoss<S> l2 = l2_alignment_loss(f_ti, f_t);
    l2.dfa *= static_cast<S>(hyper.w_l2);
    branch_backward(s2, ti_trace, l2.dfa, s2_grads);

    sgd_step(s2, s2_grads, s2_vel, hyper);
    sgd_step(cls, cls_grads, cls_vel, hyper);

    if ((it + 1) % kMonitorStride == 0) {
      const auto [a, b] = monitor_terms();
      stats.monitor_curve.push_back(a + b);
    }
  }
  if (hyper.iterations > 0) {
    const auto [a, b] = monitor_terms();
    stats.final_monitor_loss = a + b;
  } else {
    stats.final_monitor_loss = stats.initial_monitor_loss;
  }
  return out;
}

template <class S>
struct Step3Result {
  BranchState<S> s3;
  BranchState<S> s4;  // frozen copy of s1
  ClassifierState<S> joint_classifier;
  TrainStats stats;
};

inline constexpr int kAugmentCopies = 10;

// Step 3: sensor-fusion training on source-modality data only. Two
// independently blackened augmentations of the T-R source data (copies=10,
// p_train percent) feed s3 and s4 index-aligned; the concatenated features
// drive a fresh joint classifier under softmax loss. Only s3 and the joint
// classifier update; s4 stays a frozen copy of s1.
//
// The augmented streams are sampled lazily but reproduce blacken_augment
// exactly: the blackened index sets come from the same draw.
template <class S>
Step3Result<S> step3_fusion(const LabeledDataset<S>& tr_source,
                            const BranchState<S>& s2, const BranchState<S>& s1,
                            double p_train, const TrainHyper& hyper) {
  tr_source.validate();
  hyper.validate();
  if (tr_source.size() == 0)
    throw CapacityError("step3_fusion: empty training input");
  if (p_train < 0.0 || p_train > 100.0)
    throw ConfigError("step3_fusion: p_train must be in [0,100]");
  if (s2.spec.feature_dim != s1.spec.feature_dim)
    throw DimensionError("step3_fusion: feature widths differ");

  Step3Result<S> out;
  out.s3 = s2;
  out.s3.tag = BranchTag::s3;
  out.s3.frozen = false;
  out.s4 = s1;
  out.s4.tag = BranchTag::s4;
  out.s4.frozen = true;
  out.joint_classifier = build_joint_classifier<S>(
      2 * s1.spec.feature_dim, tr_source.class_count,
      derive_seed(hyper.seed, "joint"));
  BranchState<S>& s3 = out.s3;
  ClassifierState<S>& joint = out.joint_classifier;

  const Eigen::Index n = tr_source.size();
  const Eigen::Index total = n * kAugmentCopies;
  const Eigen::Index black = corrupt_count(p_train / 100.0, total);
  std::vector<bool> black_a(static_cast<std::size_t>(total), false);
  std::vector<bool> black_b(static_cast<std::size_t>(total), false);
  for (std::size_t i :
       blacken_indices(total, black, derive_seed(hyper.seed, "augment", 0)))
    black_a[i] = true;
  for (std::size_t i :
       blacken_indices(total, black, derive_seed(hyper.seed, "augment", 1)))
    black_b[i] = true;

  const auto gather_augmented = [&](const std::vector<Eigen::Index>& idx,
                                    const std::vector<bool>& blacked) {
    Mat<S> x(tr_source.images.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (blacked[static_cast<std::size_t>(idx[j])])
        x.col(static_cast<Eigen::Index>(j)).setZero();
      else
        x.col(static_cast<Eigen::Index>(j)) = tr_source.images.col(idx[j] % n);
    }
    return x;
  };
  const auto gather_labels = [&](const std::vector<Eigen::Index>& idx) {
    std::vector<int> y(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
      y[j] = tr_source.labels[static_cast<std::size_t>(idx[j] % n)];
    return y;
  };

  const MonitorSplit split = make_monitor_split(total, hyper.seed);
  const Mat<S> mon_a = gather_augmented(split.monitor_idx, black_a);
  const Mat<S> mon_b = gather_augmented(split.monitor_idx, black_b);
  const std::vector<int> mon_y = gather_labels(split.monitor_idx);

  const auto fuse_logits = [&](const Mat<S>& xa, const Mat<S>& xb,
                               BranchTrace<S>* tr, HeadTrace<S>* ht) {
    const Mat<S> fa = forward_features(s3, xa, tr_source.shape, tr);
    const Mat<S> fb = forward_features(out.s4, xb, tr_source.shape);
    Mat<S> concat(fa.rows() + fb.rows(), fa.cols());
    concat.topRows(fa.rows()) = fa;
    concat.bottomRows(fb.rows()) = fb;
    return forward_logits(joint, concat, ht);
  };

  const auto monitor_loss = [&]() {
    return softmax_cross_entropy(fuse_logits(mon_a, mon_b, nullptr, nullptr),
                                 mon_y)
        .value;
  };

  TrainStats& stats = out.stats;
  stats.monitor_stride = kMonitorStride;
  stats.iterations = hyper.iterations;
  stats.initial_monitor_loss = monitor_loss();
  stats.monitor_curve.push_back(stats.initial_monitor_loss);

  EpochSampler sampler(split.train_idx, hyper.batch_size,
                       derive_seed(hyper.seed, "batches"));
  ParamSet<S> s3_grads = s3.params.zeros_like();
  ParamSet<S> joint_grads = joint.params.zeros_like();
  ParamSet<S> s3_vel = s3.params.zeros_like();
  ParamSet<S> joint_vel = joint.params.zeros_like();
  BranchTrace<S> trace;
  HeadTrace<S> head_trace;

  const int d = s1.spec.feature_dim;
  for (long it = 0; it < hyper.iterations; ++it) {
    const auto idx = sampler.next();
    const Mat<S> xa = gather_augmented(idx, black_a);
    const Mat<S> xb = gather_augmented(idx, black_b);
    const std::vector<int> y = gather_labels(idx);

    const Mat<S> logits = fuse_logits(xa, xb, &trace, &head_trace);
    const SoftmaxLoss<S> loss = softmax_cross_entropy(logits, y);

    s3_grads.set_zero();
    joint_grads.set_zero();
    const Mat<S> dconcat =
        head_backward(joint, head_trace, loss.dlogits, joint_grads);
    branch_backward(s3, trace, Mat<S>(dconcat.topRows(d)), s3_grads);

    sgd_step(s3, s3_grads, s3_vel, hyper);
    sgd_step(joint, joint_grads, joint_vel, hyper);

    if ((it + 1) % kMonitorStride == 0)
      stats.monitor_curve.push_back(monitor_loss());
  }
  stats.final_monitor_loss =
      hyper.iterations > 0 ? monitor_loss() : stats.initial_monitor_loss;
  return out;
}

}  // namespace zdda

#endif  // ZDDA_PIPELINE_STEPS_HPP_
