// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_util.hpp"
#include "zdda/colorize.hpp"
#include "zdda/pipeline/steps.hpp"

using namespace zdda;
using zdda::testing::random_dataset;
using zdda::testing::random_image;

namespace {

struct Miniature {
  LabeledDataset<float> tr;          // task-relevant gray set
  DualDomainPairSet<float> pairs;    // task-irrelevant pairs
};

Miniature make_miniature(Eigen::Index n_tr, Eigen::Index n_ti,
                         std::uint64_t seed) {
  Miniature m;
  m.tr = random_dataset<float>(n_tr, ImageShape{28, 28, 1}, 4, seed);
  const auto ti_gray =
      random_dataset<float>(n_ti, ImageShape{28, 28, 1}, 4, seed + 1);
  std::vector<Image<float>> bgs;
  for (int i = 0; i < 4; ++i)
    bgs.push_back(random_image<float>(ImageShape{40, 40, 3}, seed + 10 + i));
  m.pairs = make_pair_set(ti_gray, colorize_dataset(ti_gray, bgs, seed + 2));
  return m;
}

BranchState<float> frozen_t(std::uint64_t seed) {
  auto t = build_branch<float>(lenet_spec(3), seed, BranchTag::t);
  t.frozen = true;
  return t;
}

TrainHyper quick_hyper(long iterations, double lr, std::uint64_t seed,
                       int batch = 16) {
  TrainHyper h;
  h.batch_size = batch;
  h.learning_rate = lr;
  h.iterations = iterations;
  h.momentum = 0.9;
  h.seed = seed;
  return h;
}

}  // namespace

TEST_CASE("step1: zero iterations returns the initial branch") {
  const auto m = make_miniature(8, 64, 1);
  const auto t = frozen_t(2);
  const auto s1_init = build_branch<float>(lenet_spec(1), 3);
  const auto result = step1_align(m.pairs, t, s1_init, quick_hyper(0, 1e-3, 4));
  CHECK(result.s1.params.bitwise_equal(s1_init.params));
  CHECK(result.s1.tag == BranchTag::s1);
}

TEST_CASE("step1: contract and capacity errors") {
  const auto m = make_miniature(8, 32, 5);
  auto t = frozen_t(6);
  const auto s1_init = build_branch<float>(lenet_spec(1), 7);

  auto unfrozen = t;
  unfrozen.frozen = false;
  CHECK_THROWS_AS(step1_align(m.pairs, unfrozen, s1_init, quick_hyper(1, 1e-3, 8)),
                  ContractViolation);

  DualDomainPairSet<float> empty;
  empty.source_shape = m.pairs.source_shape;
  empty.target_shape = m.pairs.target_shape;
  empty.source_images.resize(784, 0);
  empty.target_images.resize(784 * 3, 0);
  CHECK_THROWS_AS(step1_align(empty, t, s1_init, quick_hyper(1, 1e-3, 8)),
                  CapacityError);
}

TEST_CASE("step1: t is conserved and the alignment objective decreases") {
  const auto m = make_miniature(8, 128, 9);
  auto t = frozen_t(10);
  const auto t_checksum = t.checksum();
  const auto s1_init = build_branch<float>(lenet_spec(1), 11);

  const auto result =
      step1_align(m.pairs, t, s1_init, quick_hyper(200, 2e-3, 12));
  CHECK(t.checksum() == t_checksum);
  CHECK(result.stats.final_monitor_loss < result.stats.initial_monitor_loss);
  // The degenerate zero-feature target drives the loss toward zero as well.
  auto zero_t = frozen_t(13);
  zero_t.params.set_zero();
  const auto toward_zero =
      step1_align(m.pairs, zero_t, s1_init, quick_hyper(200, 2e-3, 14));
  CHECK(toward_zero.stats.final_monitor_loss <
        toward_zero.stats.initial_monitor_loss);
}

TEST_CASE("step2: zero iterations keeps s2 at its s1 initialization") {
  const auto m = make_miniature(64, 64, 15);
  const auto t = frozen_t(16);
  const auto s1 = build_branch<float>(lenet_spec(1), 17, BranchTag::s1);
  const auto result = step2_joint(m.tr, m.pairs, t, s1, quick_hyper(0, 1e-4, 18));
  CHECK(result.s2.params.bitwise_equal(s1.params));  // initialization lineage
  CHECK(result.s2.tag == BranchTag::s2);
  // loss composition: the composite monitor loss is exactly the weighted sum
  CHECK(result.stats.initial_monitor_loss ==
        result.softmax_term_initial + result.l2_term_initial);
}

TEST_CASE("step2: w_softmax=0 leaves the classifier untrained") {
  const auto m = make_miniature(64, 64, 19);
  const auto t = frozen_t(20);
  const auto s1 = build_branch<float>(lenet_spec(1), 21, BranchTag::s1);
  auto hyper = quick_hyper(25, 1e-3, 22);
  hyper.w_softmax = 0.0;
  hyper.w_l2 = 1.0;
  const auto result = step2_joint(m.tr, m.pairs, t, s1, hyper);
  const auto fresh = build_source_classifier<float>(
      500, m.tr.class_count, derive_seed(hyper.seed, "classifier"));
  CHECK(result.source_classifier.params.bitwise_equal(fresh.params));
  CHECK(!result.s2.params.bitwise_equal(s1.params));  // alignment still trains
}

TEST_CASE("step2: the two streams share one s2 parameter set") {
  const auto m = make_miniature(64, 64, 23);
  const auto t = frozen_t(24);
  const auto s1 = build_branch<float>(lenet_spec(1), 25, BranchTag::s1);

  // With both weights nonzero the run must differ from either single-loss
  // run, which can only happen if both losses update the same parameters.
  auto both = quick_hyper(20, 1e-3, 26);
  both.w_softmax = 100.0;
  both.w_l2 = 1.0;
  auto ce_only = both;
  ce_only.w_l2 = 0.0;
  auto l2_only = both;
  l2_only.w_softmax = 0.0;

  const auto r_both = step2_joint(m.tr, m.pairs, t, s1, both);
  const auto r_ce = step2_joint(m.tr, m.pairs, t, s1, ce_only);
  const auto r_l2 = step2_joint(m.tr, m.pairs, t, s1, l2_only);
  CHECK(!r_both.s2.params.bitwise_equal(r_ce.s2.params));
  CHECK(!r_both.s2.params.bitwise_equal(r_l2.s2.params));

  auto unfrozen = t;
  unfrozen.frozen = false;
  CHECK_THROWS_AS(step2_joint(m.tr, m.pairs, unfrozen, s1,
                              quick_hyper(1, 1e-4, 1)),
                  ContractViolation);
}

TEST_CASE("step2: rejects degenerate class structure") {
  auto m = make_miniature(16, 32, 27);
  for (auto& l : m.tr.labels) l = 0;
  m.tr.class_count = 1;
  const auto t = frozen_t(28);
  const auto s1 = build_branch<float>(lenet_spec(1), 29);
  CHECK_THROWS_AS(step2_joint(m.tr, m.pairs, t, s1, quick_hyper(1, 1e-4, 30)),
                  ConsistencyError);
}

TEST_CASE("step3: initialization lineage and freeze contract") {
  const auto m = make_miniature(48, 32, 31);
  const auto s1 = build_branch<float>(lenet_spec(1), 32, BranchTag::s1);
  auto s2 = s1;
  s2.tag = BranchTag::s2;
  s2.params.at("ip1.bias").array() += 0.25f;  // make s2 distinguishable

  // p_train=0 and zero iterations: s3 is s2 bitwise, the joint classifier
  // sits at its seeded initialization, s4 is a frozen copy of s1.
  const auto unchanged = step3_fusion(m.tr, s2, s1, 0.0, quick_hyper(0, 1e-3, 33));
  CHECK(unchanged.s3.params.bitwise_equal(s2.params));
  CHECK(unchanged.s4.params.bitwise_equal(s1.params));
  CHECK(unchanged.s4.frozen);
  const auto fresh_joint = build_joint_classifier<float>(
      1000, m.tr.class_count, derive_seed(std::uint64_t{33}, "joint"));
  CHECK(unchanged.joint_classifier.params.bitwise_equal(fresh_joint.params));

  // After training, s4 still equals s1 bitwise; s3 moved.
  const auto trained =
      step3_fusion(m.tr, s2, s1, 20.0, quick_hyper(30, 1e-3, 34));
  CHECK(trained.s4.params.bitwise_equal(s1.params));
  CHECK(!trained.s3.params.bitwise_equal(s2.params));
}

TEST_CASE("step3: lazy augmentation equals materialized blacken_augment") {
  const auto m = make_miniature(20, 16, 35);
  const auto s1 = build_branch<float>(lenet_spec(1), 36, BranchTag::s1);
  const auto s2 = s1;
  const std::uint64_t seed = 37;
  const double p_train = 30.0;

  const auto result =
      step3_fusion(m.tr, s2, s1, p_train, quick_hyper(0, 1e-3, seed));

  // Reproduce the monitor loss from materialized augmentations.
  const auto aug_a = blacken_augment(m.tr, p_train, kAugmentCopies,
                                     derive_seed(seed, "augment", 0));
  const auto aug_b = blacken_augment(m.tr, p_train, kAugmentCopies,
                                     derive_seed(seed, "augment", 1));
  const auto split = make_monitor_split(aug_a.size(), seed);
  const Mat<float> xa = gather_columns(aug_a.images, split.monitor_idx);
  const Mat<float> xb = gather_columns(aug_b.images, split.monitor_idx);
  const std::vector<int> y = gather(aug_a.labels, split.monitor_idx);

  const Mat<float> fa = forward_features(result.s3, xa, m.tr.shape);
  const Mat<float> fb = forward_features(result.s4, xb, m.tr.shape);
  Mat<float> concat(1000, fa.cols());
  concat.topRows(500) = fa;
  concat.bottomRows(500) = fb;
  const double expected =
      softmax_cross_entropy(forward_logits(result.joint_classifier, concat), y)
          .value;
  CHECK(result.stats.initial_monitor_loss == expected);
}

TEST_CASE("assemblies: shared classifier, channel checks, wiring") {
  const auto m = make_miniature(32, 32, 38);
  const auto t = frozen_t(39);
  const auto s1 = build_branch<float>(lenet_spec(1), 40, BranchTag::s1);
  const auto r2 = step2_joint(m.tr, m.pairs, t, s1, quick_hyper(5, 1e-4, 41));
  const auto r3 = step3_fusion(m.tr, r2.s2, s1, 20.0, quick_hyper(5, 1e-3, 42));

  const auto zdda2 = assemble_zdda2(r2.s2, t, r2.source_classifier);
  CHECK(zdda2.source.head == zdda2.target.head);  // one classifier object

  const Mat<float> gray_batch = m.tr.images.leftCols(3);
  CHECK_THROWS_AS(zdda2.target.logits(gray_batch, m.tr.shape), DimensionError);
  CHECK(zdda2.source.logits(gray_batch, m.tr.shape).rows() ==
        m.tr.class_count);

  ZddaArtifacts<float> art;
  art.t = t;
  art.s1 = s1;
  art.s2 = r2.s2;
  art.source_classifier = r2.source_classifier;
  art.has_step2 = true;
  CHECK_THROWS_AS(assemble_fusion(art, FusionMode::test_dual), ConfigError);

  art.s3 = r3.s3;
  art.s4 = r3.s4;
  art.joint_classifier = r3.joint_classifier;
  art.has_step3 = true;
  CHECK_THROWS_AS(assemble_fusion(art, FusionMode::train), ConfigError);

  const auto dual = assemble_fusion(art, FusionMode::test_dual);
  const auto source_only = assemble_fusion(art, FusionMode::test_source_only);
  CHECK(dual.branch_for_target_input == &art.t);
  CHECK(source_only.branch_for_target_input == &art.s4);

  // test_source_only ignores the target stream entirely.
  const Mat<float> src = m.pairs.source_images.leftCols(4);
  const Mat<float> tgt = m.pairs.target_images.leftCols(4);
  const Mat<float> corrupted_tgt = Mat<float>::Zero(tgt.rows(), tgt.cols());
  const Mat<float> a = source_only.logits(src, m.pairs.source_shape, tgt,
                                          m.pairs.target_shape);
  const Mat<float> b = source_only.logits(src, m.pairs.source_shape,
                                          corrupted_tgt, m.pairs.target_shape);
  CHECK(a == b);

  // test_dual does consume the target stream.
  const Mat<float> c =
      dual.logits(src, m.pairs.source_shape, tgt, m.pairs.target_shape);
  const Mat<float> d = dual.logits(src, m.pairs.source_shape, corrupted_tgt,
                                   m.pairs.target_shape);
  CHECK(c != d);
}

TEST_CASE("three-step miniature run is bitwise deterministic end to end") {
  const auto run_once = [&]() {
    const auto m = make_miniature(160, 160, 43);
    TrainHyper pre = quick_hyper(50, 0.01, 44);
    auto t_branch = build_branch<float>(lenet_spec(3), 45);
    auto t_cls = build_source_classifier<float>(500, 4, 46);
    const auto ti_colored = m.pairs.target_dataset();
    train_supervised(t_branch, t_cls, ti_colored, pre);
    t_branch.tag = BranchTag::t;
    t_branch.frozen = true;

    const auto s1_init = build_branch<float>(lenet_spec(1), 47);
    const auto r1 = step1_align(m.pairs, t_branch, s1_init,
                                quick_hyper(50, 1e-3, 48));
    auto h2 = quick_hyper(50, 1e-4, 49);
    h2.w_softmax = 1000.0;
    h2.w_l2 = 1.0;
    const auto r2 = step2_joint(m.tr, m.pairs, t_branch, r1.s1, h2);
    const auto r3 =
        step3_fusion(m.tr, r2.s2, r1.s1, 20.0, quick_hyper(50, 1e-3, 50));

    struct Checksums {
      std::uint64_t t, s1, s2, cls, s3, s4, joint;
    };
    return Checksums{t_branch.checksum(),
                     r1.s1.checksum(),
                     r2.s2.checksum(),
                     params_checksum(r2.source_classifier.params),
                     r3.s3.checksum(),
                     r3.s4.checksum(),
                     params_checksum(r3.joint_classifier.params)};
  };

  const auto a = run_once();
  const auto b = run_once();
  CHECK(a.t == b.t);
  CHECK(a.s1 == b.s1);
  CHECK(a.s2 == b.s2);
  CHECK(a.cls == b.cls);
  CHECK(a.s3 == b.s3);
  CHECK(a.s4 == b.s4);
  CHECK(a.joint == b.joint);
}
