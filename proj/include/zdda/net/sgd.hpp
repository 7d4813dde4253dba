// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_SGD_HPP_
#define ZDDA_NET_SGD_HPP_

#include "zdda/net/network.hpp"

namespace zdda {

// Per-step training hyperparameters.
struct TrainHyper {
  int batch_size = 32;
  double learning_rate = 0.01;
  long iterations = 0;
  double momentum = 0.9;
  double w_softmax = 1.0;  // composite-loss weights (step 2)
  double w_l2 = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  }
};

// Momentum SGD:  v <- momentum * v - lr * g;  w <- w + v.
// With momentum 0 this is exactly w - lr * g.
template <class S>
void sgd_step(ParamSet<S>& params, const ParamSet<S>& grads,
              ParamSet<S>& velocity, double learning_rate, double momentum) {
  if (!params.same_structure(grads) || !params.same_structure(velocity))
    throw ContractViolation("sgd_step: mismatched parameter structure");
  const S lr = static_cast<S>(learning_rate);
  const S mu = static_cast<S>(momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = velocity[i].second;
    v = mu * v - lr * grads[i].second;
    params[i].second += v;
  }
}

// Branch-level wrapper enforcing the freeze contract.
template <class S>
void sgd_step(BranchState<S>& branch, const ParamSet<S>& grads,
              ParamSet<S>& velocity, const TrainHyper& hyper) {
  if (branch.frozen)
    throw ContractViolation(std::string("frozen branch '") +
                            to_string(branch.tag) + "' passed as trainable");
  sgd_step(branch.params, grads, velocity, hyper.learning_rate,
           hyper.momentum);
}

template <class S>
void sgd_step(ClassifierState<S>& cls, const ParamSet<S>& grads,
              ParamSet<S>& velocity, const TrainHyper& hyper) {
  sgd_step(cls.params, grads, velocity, hyper.learning_rate, hyper.momentum);
}

}  // namespace zdda

#endif  // ZDDA_NET_SGD_HPP_
