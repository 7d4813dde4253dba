// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_NETWORK_HPP_
#define ZDDA_NET_NETWORK_HPP_

#include <array>
#include <string>

#include "zdda/net/layers.hpp"
#include "zdda/net/params.hpp"

namespace zdda {

// Backbone identity plus the layer that separates "feature extractor" from
// "classifier" (inclusive). Only the LeNet-class backbone is registered;
// the abstraction leaves room for deeper ones.
struct SplitNetworkSpec {
  std::string backbone_id = "lenet";
  std::string split_layer = "ip1";
  int feature_dim = 500;
  int input_channels = 1;
  bool operator==(const SplitNetworkSpec&) const = default;
};

inline SplitNetworkSpec lenet_spec(int input_channels) {
  return SplitNetworkSpec{"lenet", "ip1", 500, input_channels};
}

// LeNet feature geometry: conv(20,5) -> pool -> conv(50,5) -> pool -> fc500.
namespace lenet {
inline constexpr int kInputSide = 28;
inline constexpr int kConv1Out = 20;
inline constexpr int kConv2Out = 50;
inline constexpr int kKernel = 5;
inline constexpr int kFeatureDim = 500;
inline constexpr int kFlattenDim = kConv2Out * 4 * 4;  // 800
inline constexpr std::array<const char*, 5> kLayers = {"conv1", "pool1",
                                                       "conv2", "pool2", "ip1"};

inline ImageShape input_shape(int channels) {
  return ImageShape{kInputSide, kInputSide, channels};
}
}  // namespace lenet

enum class BranchTag { t, s1, s2, s3, s4, reference };

inline const char* to_string(BranchTag tag) {
  switch (tag) {
    case BranchTag::t: return "t";
    case BranchTag::s1: return "s1";
    case BranchTag::s2: return "s2";
    case BranchTag::s3: return "s3";
    case BranchTag::s4: return "s4";
    default: return "reference";
  }
}

inline BranchTag branch_tag_from_string(const std::string& s) {
  if (s == "t") return BranchTag::t;
  if (s == "s1") return BranchTag::s1;
  if (s == "s2") return BranchTag::s2;
  if (s == "s3") return BranchTag::s3;
  if (s == "s4") return BranchTag::s4;
  if (s == "reference") return BranchTag::reference;
  throw ConfigError("unknown branch tag: " + s);
}

// One feature extractor: its parameters, a freeze flag honored by every
// training operation, and a provenance tag.
template <class S>
struct BranchState {
  SplitNetworkSpec spec;
  ParamSet<S> params;
  bool frozen = false;
  BranchTag tag = BranchTag::reference;

  std::uint64_t checksum() const { return params_checksum(params); }
};

template <class S>
void validate_spec(const SplitNetworkSpec& spec) {
  if (spec.backbone_id != "lenet")
    throw ConfigError("unknown backbone: " + spec.backbone_id);
  bool known = false;
  for (const char* l : lenet::kLayers)
    if (spec.split_layer == l) known = true;
  if (!known)
    throw ConfigError("split layer not in backbone: " + spec.split_layer);
  if (spec.split_layer != "ip1")
    throw ConfigError("lenet split is only supported at ip1");
  if (spec.feature_dim != lenet::kFeatureDim)
    throw ConfigError("lenet feature_dim at ip1 is 500");
  if (spec.input_channels != 1 && spec.input_channels != 3)
    throw ConfigError("input_channels must be 1 or 3");
}

template <class S>
BranchState<S> build_branch(const SplitNetworkSpec& spec, std::uint64_t seed,
                            BranchTag tag = BranchTag::reference) {
  validate_spec<S>(spec);
  BranchState<S> b;
  b.spec = spec;
  b.tag = tag;
  Rng rng(seed);

  const int k = lenet::kKernel;
  auto& w1 = b.params.add("conv1.weight", lenet::kConv1Out,
                          spec.input_channels * k * k);
  b.params.add("conv1.bias", lenet::kConv1Out, 1);
  auto& w2 = b.params.add("conv2.weight", lenet::kConv2Out,
                          lenet::kConv1Out * k * k);
  b.params.add("conv2.bias", lenet::kConv2Out, 1);
  auto& w3 = b.params.add("ip1.weight", lenet::kFeatureDim, lenet::kFlattenDim);
  b.params.add("ip1.bias", lenet::kFeatureDim, 1);

  init_uniform_fan_in(w1, spec.input_channels * k * k, rng);
  init_uniform_fan_in(w2, lenet::kConv1Out * k * k, rng);
  init_uniform_fan_in(w3, lenet::kFlattenDim, rng);
  return b;
}

// Intermediates of one branch forward pass, kept for the backward pass.
template <class S>
struct BranchTrace {
  Mat<S> input;
  ConvTrace<S> conv1, conv2;
  Mat<S> act1, pooled1, act2, pooled2;
  IndexMat argmax1, argmax2;
};

namespace detail {

template <class S>
void check_branch_input(const BranchState<S>& branch, const Mat<S>& images,
                        const ImageShape& shape) {
  if (shape.channels != branch.spec.input_channels)
    throw DimensionError("branch expects " +
                         std::to_string(branch.spec.input_channels) +
                         "-channel input, got " +
                         std::to_string(shape.channels));
  if (shape.height != lenet::kInputSide || shape.width != lenet::kInputSide)
    throw DimensionError("lenet expects 28x28 input");
  if (images.rows() != shape.pixels())
    throw DimensionError("image batch rows do not match shape");
}

}  // namespace detail

// Feature matrix for a batch: (feature_dim x n), one column per image.
// Pure: no parameter mutation, deterministic given parameters and batch.
template <class S>
Mat<S> forward_features(const BranchState<S>& branch, const Mat<S>& images,
                        const ImageShape& shape,
                        BranchTrace<S>* trace = nullptr) {
  detail::check_branch_input(branch, images, shape);
  const int k = lenet::kKernel;
  const ImageShape s1{24, 24, lenet::kConv1Out};
  const ImageShape s1p{12, 12, lenet::kConv1Out};
  const ImageShape s2{8, 8, lenet::kConv2Out};

  BranchTrace<S> local;
  BranchTrace<S>& t = trace ? *trace : local;
  if (trace) t.input = images;

  t.act1 = conv_forward(images, shape, k, branch.params.at("conv1.weight"),
                        branch.params.at("conv1.bias"),
                        trace ? &t.conv1 : nullptr);
  t.pooled1 = maxpool2_forward(t.act1, s1, t.argmax1);
  t.act2 = conv_forward(t.pooled1, s1p, k, branch.params.at("conv2.weight"),
                        branch.params.at("conv2.bias"),
                        trace ? &t.conv2 : nullptr);
  t.pooled2 = maxpool2_forward(t.act2, s2, t.argmax2);
  return dense_forward(t.pooled2, branch.params.at("ip1.weight"),
                       branch.params.at("ip1.bias"));
}

// Accumulates parameter gradients for dL/dfeatures into `grads`
// (shaped like branch.params). The input gradient is not needed anywhere,
// so it is not computed.
template <class S>
void branch_backward(const BranchState<S>& branch, const BranchTrace<S>& trace,
                     const Mat<S>& dfeatures, ParamSet<S>& grads) {
  const int k = lenet::kKernel;
  const ImageShape in{28, 28, branch.spec.input_channels};
  const ImageShape s1{24, 24, lenet::kConv1Out};
  const ImageShape s1p{12, 12, lenet::kConv1Out};
  const ImageShape s2{8, 8, lenet::kConv2Out};

  Mat<S> dpooled2;
  dense_backward(dfeatures, trace.pooled2, branch.params.at("ip1.weight"),
                 grads.at("ip1.weight"), grads.at("ip1.bias"), &dpooled2);
  Mat<S> dact2 = maxpool2_backward(dpooled2, trace.argmax2, s2.pixels());
  Mat<S> dpooled1;
  conv_backward(dact2, s1p, k, branch.params.at("conv2.weight"), trace.conv2,
                grads.at("conv2.weight"), grads.at("conv2.bias"), &dpooled1);
  Mat<S> dact1 = maxpool2_backward(dpooled1, trace.argmax1, s1.pixels());
  conv_backward(dact1, in, k, branch.params.at("conv1.weight"), trace.conv1,
                grads.at("conv1.weight"), grads.at("conv1.bias"),
                static_cast<Mat<S>*>(nullptr));
}

// ---------------------------------------------------------------------------
// Classifier heads.

enum class ClassifierKind { source, joint };

// source: the backbone remainder past the split point — for LeNet a
// rectifier followed by one fully connected layer.
// joint: two fully connected layers (hidden width 1024) over concatenated
// features, rectifier after the hidden layer.
template <class S>
struct ClassifierState {
  ClassifierKind kind = ClassifierKind::source;
  ParamSet<S> params;
  int class_count = 0;
  int input_dim = 0;
  bool input_relu = true;  // backbone remainder applies its activation
};

inline constexpr int kJointHiddenDim = 1024;

template <class S>
ClassifierState<S> build_source_classifier(int feature_dim, int class_count,
                                           std::uint64_t seed) {
  if (feature_dim <= 0 || class_count <= 0)
    throw ConfigError("classifier dimensions must be positive");
  ClassifierState<S> c;
  c.kind = ClassifierKind::source;
  c.class_count = class_count;
  c.input_dim = feature_dim;
  c.input_relu = true;
  Rng rng(seed);
  auto& w = c.params.add("ip2.weight", class_count, feature_dim);
  c.params.add("ip2.bias", class_count, 1);
  init_uniform_fan_in(w, feature_dim, rng);
  return c;
}

template <class S>
ClassifierState<S> build_joint_classifier(int concat_dim, int class_count,
                                          std::uint64_t seed) {
  if (concat_dim <= 0 || class_count <= 0)
    throw ConfigError("classifier dimensions must be positive");
  ClassifierState<S> c;
  c.kind = ClassifierKind::joint;
  c.class_count = class_count;
  c.input_dim = concat_dim;
  c.input_relu = false;
  Rng rng(seed);
  auto& w1 = c.params.add("fc1.weight", kJointHiddenDim, concat_dim);
  c.params.add("fc1.bias", kJointHiddenDim, 1);
  auto& w2 = c.params.add("fc2.weight", class_count, kJointHiddenDim);
  c.params.add("fc2.bias", class_count, 1);
  init_uniform_fan_in(w1, concat_dim, rng);
  init_uniform_fan_in(w2, kJointHiddenDim, rng);
  return c;
}

template <class S>
struct HeadTrace {
  Mat<S> input;      // raw features
  Mat<S> activated;  // post input-relu (source kind)
  Mat<S> hidden_pre; // joint hidden pre-activation
  Mat<S> hidden;     // joint hidden post-relu
};

// Logits matrix (class_count x n). Pure.
template <class S>
Mat<S> forward_logits(const ClassifierState<S>& cls, const Mat<S>& features,
                      HeadTrace<S>* trace = nullptr) {
  if (features.rows() != cls.input_dim)
    throw DimensionError("classifier expects " + std::to_string(cls.input_dim) +
                         "-dim features, got " + std::to_string(features.rows()));
  HeadTrace<S> local;
  HeadTrace<S>& t = trace ? *trace : local;
  if (trace) t.input = features;

  if (cls.kind == ClassifierKind::source) {
    t.activated = cls.input_relu ? relu(features) : features;
    return dense_forward(t.activated, cls.params.at("ip2.weight"),
                         cls.params.at("ip2.bias"));
  }
  t.activated = cls.input_relu ? relu(features) : features;
  t.hidden_pre = dense_forward(t.activated, cls.params.at("fc1.weight"),
                               cls.params.at("fc1.bias"));
  t.hidden = relu(t.hidden_pre);
  return dense_forward(t.hidden, cls.params.at("fc2.weight"),
                       cls.params.at("fc2.bias"));
}

// Accumulates classifier gradients and returns dL/dfeatures.
template <class S>
Mat<S> head_backward(const ClassifierState<S>& cls, const HeadTrace<S>& trace,
                     const Mat<S>& dlogits, ParamSet<S>& grads) {
  Mat<S> dactivated;
  if (cls.kind == ClassifierKind::source) {
    dense_backward(dlogits, trace.activated, cls.params.at("ip2.weight"),
                   grads.at("ip2.weight"), grads.at("ip2.bias"), &dactivated);
  } else {
    Mat<S> dhidden;
    dense_backward(dlogits, trace.hidden, cls.params.at("fc2.weight"),
                   grads.at("fc2.weight"), grads.at("fc2.bias"), &dhidden);
    Mat<S> dhidden_pre = relu_backward(dhidden, trace.hidden_pre);
    dense_backward(dhidden_pre, trace.activated, cls.params.at("fc1.weight"),
                   grads.at("fc1.weight"), grads.at("fc1.bias"), &dactivated);
  }
  if (cls.input_relu) return relu_backward(dactivated, trace.input);
  return dactivated;
}

}  // namespace zdda

#endif  // ZDDA_NET_NETWORK_HPP_
