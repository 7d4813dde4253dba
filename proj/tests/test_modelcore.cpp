// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_util.hpp"
#include "zdda/net/checkpoint.hpp"
#include "zdda/net/train.hpp"

using namespace zdda;
using zdda::testing::TempDir;
using zdda::testing::random_dataset;

namespace {

template <class S>
Mat<S> random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                     double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>(rng.uniform(lo, hi));
  return m;
}

// Central finite difference of a scalar functional with respect to one
// coefficient.
template <class Fn>
double central_diff(Fn&& f, double& coeff, double h = 1e-3) {
  const double keep = coeff;
  coeff = keep + h;
  const double up = f();
  coeff = keep - h;
  const double down = f();
  coeff = keep;
  return (up - down) / (2.0 * h);
}

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

TEST_CASE("build_branch: lenet dimension trace gives 500-wide features") {
  const auto branch = build_branch<float>(lenet_spec(1), 42);
  const Mat<float> x = random_matrix<float>(28 * 28, 3, 7, 0.0, 1.0);
  const Mat<float> f = forward_features(branch, x, ImageShape{28, 28, 1});
  CHECK(f.rows() == 500);
  CHECK(f.cols() == 3);

  const auto color = build_branch<float>(lenet_spec(3), 42);
  const Mat<float> x3 = random_matrix<float>(3 * 28 * 28, 2, 8, 0.0, 1.0);
  CHECK(forward_features(color, x3, ImageShape{28, 28, 3}).rows() == 500);
}

TEST_CASE("build_branch: seeded init reproduces bitwise; bad specs rejected") {
  const auto a = build_branch<float>(lenet_spec(1), 9);
  const auto b = build_branch<float>(lenet_spec(1), 9);
  CHECK(a.params.bitwise_equal(b.params));
  const auto c = build_branch<float>(lenet_spec(1), 10);
  CHECK(!a.params.bitwise_equal(c.params));

  SplitNetworkSpec bad = lenet_spec(1);
  bad.backbone_id = "resnet50";
  CHECK_THROWS_AS(build_branch<float>(bad, 1), ConfigError);
  bad = lenet_spec(1);
  bad.split_layer = "ip9";
  CHECK_THROWS_AS(build_branch<float>(bad, 1), ConfigError);
  bad = lenet_spec(1);
  bad.feature_dim = 100;
  CHECK_THROWS_AS(build_branch<float>(bad, 1), ConfigError);
}

TEST_CASE("forward_features: pure and deterministic; shape checked") {
  const auto branch = build_branch<float>(lenet_spec(1), 3);
  const Mat<float> x = random_matrix<float>(784, 5, 11, 0.0, 1.0);
  const auto before = params_checksum(branch.params);
  const Mat<float> f1 = forward_features(branch, x, ImageShape{28, 28, 1});
  const Mat<float> f2 = forward_features(branch, x, ImageShape{28, 28, 1});
  CHECK(f1 == f2);
  CHECK(params_checksum(branch.params) == before);

  CHECK_THROWS_AS(forward_features(branch, x, ImageShape{28, 28, 3}),
                  DimensionError);
  const Mat<float> small = random_matrix<float>(100, 2, 1, 0.0, 1.0);
  CHECK_THROWS_AS(forward_features(branch, small, ImageShape{10, 10, 1}),
                  DimensionError);
}

TEST_CASE("forward_features: zero final layer maps zero input to zero") {
  auto branch = build_branch<float>(lenet_spec(1), 5);
  branch.params.at("ip1.weight").setZero();
  branch.params.at("ip1.bias").setZero();
  const Mat<float> zero = Mat<float>::Zero(784, 1);
  CHECK(forward_features(branch, zero, ImageShape{28, 28, 1}).isZero(0.0f));
}

TEST_CASE("forward_logits: identity classifier passes features through") {
  auto cls = build_source_classifier<float>(4, 4, 1);
  cls.input_relu = false;  // bare single layer
  cls.params.at("ip2.weight") = Mat<float>::Identity(4, 4);
  cls.params.at("ip2.bias").setZero();
  const Mat<float> f = random_matrix<float>(4, 6, 2);
  CHECK(forward_logits(cls, f) == f);

  // zero features through zero-bias classifier -> zero logits
  const Mat<float> z = Mat<float>::Zero(4, 2);
  CHECK(forward_logits(cls, z).isZero(0.0f));

  // n = 0 gives a 0-column logits matrix
  const Mat<float> none(4, 0);
  const auto empty = forward_logits(cls, none);
  CHECK(empty.rows() == 4);
  CHECK(empty.cols() == 0);

  const Mat<float> wrong = random_matrix<float>(5, 2, 3);
  CHECK_THROWS_AS(forward_logits(cls, wrong), DimensionError);
}

TEST_CASE("softmax_cross_entropy: analytic endpoints") {
  // uniform logits over 10 classes -> ln 10 regardless of labels
  const Mat<double> uniform = Mat<double>::Constant(10, 4, 0.7);
  const auto loss = softmax_cross_entropy(uniform, {0, 3, 9, 5});
  CHECK(loss.value == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  // dominant correct logit -> loss near zero
  Mat<double> dominant = Mat<double>::Zero(4, 2);
  dominant(1, 0) = 50.0;
  dominant(2, 1) = 50.0;
  CHECK(softmax_cross_entropy(dominant, {1, 2}).value ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(softmax_cross_entropy(dominant, {1, 4}), ConsistencyError);
  CHECK_THROWS_AS(softmax_cross_entropy(dominant, {1}), ConsistencyError);
}

TEST_CASE("softmax_cross_entropy: gradient matches central differences") {
  Mat<double> logits = random_matrix<double>(4, 3, 17, -2.0, 2.0);
  const std::vector<int> labels = {2, 0, 3};
  const auto analytic = softmax_cross_entropy(logits, labels);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double numeric = central_diff(
        [&]() { return softmax_cross_entropy(logits, labels).value; },
        logits.data()[i]);
    CHECK(rel_err(analytic.dlogits.data()[i], numeric) < 1e-4);
  }
}

TEST_CASE("l2_alignment_loss: exact cases and finite differences") {
  const Mat<double> f = random_matrix<double>(5, 3, 23);
  const auto zero = l2_alignment_loss(f, f);
  CHECK(zero.value == 0.0);
  CHECK(zero.dfa.isZero(0.0));
  CHECK(zero.dfb.isZero(0.0));

  Mat<double> a(2, 1), b(2, 1);
  a << 3.0, 4.0;
  b << 0.0, 0.0;
  CHECK(l2_alignment_loss(a, b).value == doctest::Approx(25.0).epsilon(1e-15));

  Mat<double> fa = random_matrix<double>(5, 7, 29);
  Mat<double> fb = random_matrix<double>(5, 7, 31);
  const auto analytic = l2_alignment_loss(fa, fb);
  for (Eigen::Index i = 0; i < fa.size(); ++i) {
    const double numeric = central_diff(
        [&]() { return l2_alignment_loss(fa, fb).value; }, fa.data()[i]);
    CHECK(rel_err(analytic.dfa.data()[i], numeric) < 1e-4);
  }
  for (Eigen::Index i = 0; i < fb.size(); ++i) {
    const double numeric = central_diff(
        [&]() { return l2_alignment_loss(fa, fb).value; }, fb.data()[i]);
    CHECK(rel_err(analytic.dfb.data()[i], numeric) < 1e-4);
  }

  CHECK_THROWS_AS(l2_alignment_loss(fa, Mat<double>(fb.leftCols(3))),
                  DimensionError);
}

TEST_CASE("layer backward passes match finite differences") {
  // conv: objective = sum(R .* conv(x)), small 1->2 channel instance
  const ImageShape in{6, 6, 1};
  Mat<double> w = random_matrix<double>(2, 9, 41, -0.5, 0.5);
  Mat<double> bias = random_matrix<double>(2, 1, 43, -0.1, 0.1);
  Mat<double> x = random_matrix<double>(36, 2, 47, 0.0, 1.0);
  const Mat<double> r = random_matrix<double>(2 * 16, 2, 53);

  const auto conv_objective = [&]() {
    return (conv_forward(x, in, 3, w, bias).array() * r.array()).sum();
  };
  ConvTrace<double> trace;
  conv_forward(x, in, 3, w, bias, &trace);
  Mat<double> dw = Mat<double>::Zero(2, 9);
  Mat<double> db = Mat<double>::Zero(2, 1);
  Mat<double> dx;
  conv_backward(r, in, 3, w, trace, dw, db, &dx);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    CHECK(rel_err(dw.data()[i], central_diff(conv_objective, w.data()[i])) <
          1e-4);
  for (Eigen::Index i = 0; i < bias.size(); ++i)
    CHECK(rel_err(db.data()[i], central_diff(conv_objective, bias.data()[i])) <
          1e-4);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    CHECK(rel_err(dx.data()[i], central_diff(conv_objective, x.data()[i])) <
          1e-4);

  // maxpool: distinct values so the argmax is stable under the probe
  const ImageShape pin{4, 4, 2};
  Mat<double> px = random_matrix<double>(32, 2, 59);
  const Mat<double> pr = random_matrix<double>(8, 2, 61);
  const auto pool_objective = [&]() {
    IndexMat am;
    return (maxpool2_forward(px, pin, am).array() * pr.array()).sum();
  };
  IndexMat argmax;
  maxpool2_forward(px, pin, argmax);
  const Mat<double> pdx = maxpool2_backward(pr, argmax, 32);
  for (Eigen::Index i = 0; i < px.size(); ++i)
    CHECK(rel_err(pdx.data()[i], central_diff(pool_objective, px.data()[i], 1e-5)) <
          1e-3);

  // dense
  Mat<double> dwgt = random_matrix<double>(3, 5, 67);
  Mat<double> dbias = random_matrix<double>(3, 1, 71);
  Mat<double> dxin = random_matrix<double>(5, 4, 73);
  const Mat<double> dr = random_matrix<double>(3, 4, 79);
  const auto dense_objective = [&]() {
    return (dense_forward(dxin, dwgt, dbias).array() * dr.array()).sum();
  };
  Mat<double> gdw = Mat<double>::Zero(3, 5);
  Mat<double> gdb = Mat<double>::Zero(3, 1);
  Mat<double> gdx;
  dense_backward(dr, dxin, dwgt, gdw, gdb, &gdx);
  for (Eigen::Index i = 0; i < dwgt.size(); ++i)
    CHECK(rel_err(gdw.data()[i], central_diff(dense_objective, dwgt.data()[i])) <
          1e-4);
  for (Eigen::Index i = 0; i < dxin.size(); ++i)
    CHECK(rel_err(gdx.data()[i], central_diff(dense_objective, dxin.data()[i])) <
          1e-4);
}

TEST_CASE("full branch + joint head gradients match finite differences") {
  auto branch = build_branch<double>(lenet_spec(1), 83);
  auto joint = build_joint_classifier<double>(1000, 3, 89);
  Mat<double> x = random_matrix<double>(784, 2, 97, 0.0, 1.0);
  const std::vector<int> labels = {1, 2};

  const auto objective = [&]() {
    const Mat<double> f = forward_features(branch, x, ImageShape{28, 28, 1});
    Mat<double> concat(1000, f.cols());
    concat.topRows(500) = f;
    concat.bottomRows(500) = f;
    return softmax_cross_entropy(forward_logits(joint, concat), labels).value;
  };

  BranchTrace<double> trace;
  HeadTrace<double> head_trace;
  const Mat<double> f = forward_features(branch, x, ImageShape{28, 28, 1}, &trace);
  Mat<double> concat(1000, f.cols());
  concat.topRows(500) = f;
  concat.bottomRows(500) = f;
  const auto loss = softmax_cross_entropy(
      forward_logits(joint, concat, &head_trace), labels);
  ParamSet<double> bgrads = branch.params.zeros_like();
  ParamSet<double> jgrads = joint.params.zeros_like();
  const Mat<double> dconcat =
      head_backward(joint, head_trace, loss.dlogits, jgrads);
  const Mat<double> dfeat = dconcat.topRows(500) + dconcat.bottomRows(500);
  branch_backward(branch, trace, dfeat, bgrads);

  // Spot-check a deterministic sample of coordinates in every array.
  Rng rng(101);
  for (auto& [name, grad] : bgrads) {
    auto& param = branch.params.at(name);
    for (int probe = 0; probe < 6; ++probe) {
      const Eigen::Index i =
          static_cast<Eigen::Index>(rng.uniform_below(param.size()));
      const double numeric = central_diff(objective, param.data()[i]);
      CHECK(rel_err(grad.data()[i], numeric) < 1e-4);
    }
  }
  for (auto& [name, grad] : jgrads) {
    auto& param = joint.params.at(name);
    for (int probe = 0; probe < 6; ++probe) {
      const Eigen::Index i =
          static_cast<Eigen::Index>(rng.uniform_below(param.size()));
      const double numeric = central_diff(objective, param.data()[i]);
      CHECK(rel_err(grad.data()[i], numeric) < 1e-4);
    }
  }
}

TEST_CASE("sgd_step: definitional cases and the momentum recurrence") {
  auto cls = build_source_classifier<double>(3, 2, 7);
  const auto w0 = cls.params.at("ip2.weight");

  ParamSet<double> zero_grads = cls.params.zeros_like();
  ParamSet<double> velocity = cls.params.zeros_like();
  sgd_step(cls.params, zero_grads, velocity, 0.5, 0.9);
  CHECK(cls.params.at("ip2.weight") == w0);  // zero gradients, no movement

  // momentum 0: w - lr * g
  ParamSet<double> grads = cls.params.zeros_like();
  grads.at("ip2.weight").setConstant(2.0);
  ParamSet<double> v2 = cls.params.zeros_like();
  sgd_step(cls.params, grads, v2, 0.25, 0.0);
  CHECK((cls.params.at("ip2.weight") - (w0.array() - 0.5).matrix()).norm() ==
        doctest::Approx(0.0).epsilon(1e-15));

  // two steps at momentum 0.9 follow the hand-computed recurrence
  double w = 1.0, v = 0.0;
  const double g1 = 0.3, g2 = -0.2, lr = 0.1, mu = 0.9;
  v = mu * v - lr * g1;
  w += v;
  const double w_after1 = w;
  v = mu * v - lr * g2;
  w += v;
  const double w_after2 = w;

  ParamSet<double> scalar;
  scalar.add("w", 1, 1).setConstant(1.0);
  ParamSet<double> sv = scalar.zeros_like();
  ParamSet<double> g = scalar.zeros_like();
  g.at("w").setConstant(g1);
  sgd_step(scalar, g, sv, lr, mu);
  CHECK(scalar.at("w")(0, 0) == doctest::Approx(w_after1).epsilon(1e-15));
  g.at("w").setConstant(g2);
  sgd_step(scalar, g, sv, lr, mu);
  CHECK(scalar.at("w")(0, 0) == doctest::Approx(w_after2).epsilon(1e-15));
}

TEST_CASE("sgd_step: frozen branches are contract violations") {
  auto branch = build_branch<float>(lenet_spec(1), 11);
  branch.frozen = true;
  ParamSet<float> grads = branch.params.zeros_like();
  ParamSet<float> velocity = branch.params.zeros_like();
  CHECK_THROWS_AS(sgd_step(branch, grads, velocity, TrainHyper{}),
                  ContractViolation);
}

TEST_CASE("parameter sharing: one state serves several forward roles") {
  auto branch = build_branch<float>(lenet_spec(1), 13);
  const Mat<float> x = random_matrix<float>(784, 2, 3, 0.0, 1.0);
  const Mat<float> role_a = forward_features(branch, x, ImageShape{28, 28, 1});
  branch.params.at("ip1.bias").array() += 1.0f;  // mutate through "role b"
  const Mat<float> role_a_again =
      forward_features(branch, x, ImageShape{28, 28, 1});
  CHECK((role_a_again - role_a).cwiseAbs().minCoeff() > 0.5f);
}

TEST_CASE("train_supervised: zero iterations is the identity") {
  const auto ds = random_dataset<float>(40, ImageShape{28, 28, 1}, 4, 19);
  auto branch = build_branch<float>(lenet_spec(1), 21);
  auto cls = build_source_classifier<float>(500, 4, 23);
  const auto b0 = params_checksum(branch.params);
  const auto c0 = params_checksum(cls.params);
  TrainHyper hyper;
  hyper.iterations = 0;
  hyper.batch_size = 8;
  const auto stats = train_supervised(branch, cls, ds, hyper);
  CHECK(params_checksum(branch.params) == b0);
  CHECK(params_checksum(cls.params) == c0);
  CHECK(stats.final_monitor_loss == stats.initial_monitor_loss);
}

TEST_CASE("train_supervised: deterministic, learns, validates inputs") {
  // Learnable miniature: class = which image half is bright.
  LabeledDataset<float> ds;
  ds.name = "halves";
  ds.shape = ImageShape{28, 28, 1};
  ds.class_count = 2;
  const int n = 64;
  ds.images = Mat<float>::Zero(784, n);
  Rng rng(5);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    ds.labels.push_back(label);
    for (int p = 0; p < 392; ++p)
      ds.images(label == 0 ? p : 392 + p, i) =
          static_cast<float>(0.5 + 0.5 * rng.uniform());
  }

  TrainHyper hyper;
  hyper.batch_size = 16;
  hyper.iterations = 60;
  hyper.learning_rate = 0.01;
  hyper.seed = 77;

  auto b1 = build_branch<float>(lenet_spec(1), 31);
  auto c1 = build_source_classifier<float>(500, 2, 33);
  const auto s1 = train_supervised(b1, c1, ds, hyper);
  CHECK(s1.final_monitor_loss < s1.initial_monitor_loss);

  auto b2 = build_branch<float>(lenet_spec(1), 31);
  auto c2 = build_source_classifier<float>(500, 2, 33);
  train_supervised(b2, c2, ds, hyper);
  CHECK(b1.params.bitwise_equal(b2.params));
  CHECK(c1.params.bitwise_equal(c2.params));

  LabeledDataset<float> empty{"e", ImageShape{28, 28, 1}, Mat<float>(784, 0),
                              {}, 2};
  CHECK_THROWS_AS(train_supervised(b1, c1, empty, hyper), CapacityError);

  auto frozen = build_branch<float>(lenet_spec(1), 2);
  frozen.frozen = true;
  CHECK_THROWS_AS(train_supervised(frozen, c1, ds, hyper), ContractViolation);

  auto wrong_k = build_source_classifier<float>(500, 7, 1);
  CHECK_THROWS_AS(train_supervised(b1, wrong_k, ds, hyper), ConsistencyError);
}

TEST_CASE("checkpoints: bit-exact round-trips for both state kinds") {
  TempDir dir("ckpt");
  auto branch = build_branch<float>(lenet_spec(3), 101, BranchTag::t);
  branch.frozen = true;
  save_branch(dir / "t.ckpt", branch, "seed 101");
  std::string lineage;
  const auto back = load_branch<float>(dir / "t.ckpt", &lineage);
  CHECK(back.params.bitwise_equal(branch.params));
  CHECK(back.frozen == true);
  CHECK(back.tag == BranchTag::t);
  CHECK(back.spec == branch.spec);
  CHECK(lineage == "seed 101");

  auto joint = build_joint_classifier<double>(1000, 10, 5);
  save_classifier(dir / "joint.ckpt", joint);
  const auto jback = load_classifier<double>(dir / "joint.ckpt");
  CHECK(jback.params.bitwise_equal(joint.params));
  CHECK(jback.kind == ClassifierKind::joint);
  CHECK(jback.input_dim == 1000);
  CHECK(jback.input_relu == false);

  // dtype and kind confusion are format errors
  CHECK_THROWS_AS(load_branch<double>(dir / "t.ckpt"), FormatError);
  CHECK_THROWS_AS(load_classifier<float>(dir / "t.ckpt"), FormatError);
}
