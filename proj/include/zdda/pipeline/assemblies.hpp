// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_PIPELINE_ASSEMBLIES_HPP_
#define ZDDA_PIPELINE_ASSEMBLIES_HPP_

#include <string>

#include "zdda/net/train.hpp"

namespace zdda {

// A branch composed with a classifier head. Holds references only; the
// underlying states stay owned by the caller, so assemblies that share a
// head really share one parameter object.
template <class S>
struct ComposedClassifier {
  const BranchState<S>* branch = nullptr;
  const ClassifierState<S>* head = nullptr;

  int class_count() const { return head->class_count; }

  Mat<S> logits(const Mat<S>& images, const ImageShape& shape) const {
    if (branch->spec.feature_dim != head->input_dim)
      throw DimensionError("classifier input width does not match features");
    return forward_logits(*head, forward_features(*branch, images, shape));
  }
};

// The two single-domain classifiers obtained after training step 2:
// C_source = classifier o s2 over source-modality input,
// C_target = classifier o t over target-modality input.
template <class S>
struct Zdda2Classifiers {
  ComposedClassifier<S> source;
  ComposedClassifier<S> target;
};

template <class S>
Zdda2Classifiers<S> assemble_zdda2(const BranchState<S>& s2,
                                   const BranchState<S>& t,
                                   const ClassifierState<S>& classifier) {
  if (s2.spec.feature_dim != classifier.input_dim ||
      t.spec.feature_dim != classifier.input_dim)
    throw DimensionError("assemble_zdda2: feature width mismatch");
  return Zdda2Classifiers<S>{{&s2, &classifier}, {&t, &classifier}};
}

// Everything the three training steps produce, plus a provenance record
// (seeds, hyperparameters, dataset manifests per step) kept as JSON text.
template <class S>
struct ZddaArtifacts {
  BranchState<S> t;
  BranchState<S> s1;
  BranchState<S> s2;
  ClassifierState<S> source_classifier;
  BranchState<S> s3;
  BranchState<S> s4;
  ClassifierState<S> joint_classifier;
  bool has_step2 = false;
  bool has_step3 = false;
  std::string provenance;

  Zdda2Classifiers<S> zdda2() const {
    if (!has_step2) throw ConfigError("step-2 artifacts missing");
    return assemble_zdda2(s2, t, source_classifier);
  }
};

enum class FusionMode { train, test_dual, test_source_only };

// The step-3 network wired for evaluation. test_dual feeds the source
// stream to s3 and the target stream to t; test_source_only feeds the
// source stream to both s3 and s4 and ignores the target stream.
template <class S>
struct FusionAssembly {
  const BranchState<S>* branch_for_source_input = nullptr;
  const BranchState<S>* branch_for_target_input = nullptr;
  const ClassifierState<S>* joint_classifier = nullptr;
  FusionMode mode = FusionMode::test_dual;

  int class_count() const { return joint_classifier->class_count; }

  Mat<S> logits(const Mat<S>& source_images, const ImageShape& source_shape,
                const Mat<S>& target_images,
                const ImageShape& target_shape) const {
    const Mat<S> fa =
        forward_features(*branch_for_source_input, source_images, source_shape);
    Mat<S> fb;
    if (mode == FusionMode::test_source_only)
      fb = forward_features(*branch_for_target_input, source_images,
                            source_shape);
    else
      fb = forward_features(*branch_for_target_input, target_images,
                            target_shape);
    Mat<S> concat(fa.rows() + fb.rows(), fa.cols());
    concat.topRows(fa.rows()) = fa;
    concat.bottomRows(fb.rows()) = fb;
    return forward_logits(*joint_classifier, concat);
  }
};

template <class S>
FusionAssembly<S> assemble_fusion(const ZddaArtifacts<S>& artifacts,
                                  FusionMode mode) {
  if (mode == FusionMode::train)
    throw ConfigError("train wiring exists only inside training step 3");
  if (!artifacts.has_step3)
    throw ConfigError("step-3 artifacts missing");
  FusionAssembly<S> f;
  f.branch_for_source_input = &artifacts.s3;
  f.branch_for_target_input = mode == FusionMode::test_dual
                                  ? &artifacts.t
                                  : &artifacts.s4;
  f.joint_classifier = &artifacts.joint_classifier;
  f.mode = mode;
  return f;
}

}  // namespace zdda

#endif  // ZDDA_PIPELINE_ASSEMBLIES_HPP_
