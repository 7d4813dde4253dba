// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_PARAMS_HPP_
#define ZDDA_NET_PARAMS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "zdda/image.hpp"
#include "zdda/rng.hpp"

namespace zdda {

// An ordered collection of named parameter arrays. Order is structural
// (fixed by the network builder), which keeps iteration, checksums and
// checkpoints deterministic.
template <class S>
class ParamSet {
 public:
  using Entry = std::pair<std::string, Mat<S>>;

  Mat<S>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    entries_.emplace_back(name, Mat<S>::Zero(rows, cols));
    return entries_.back().second;
  }

  Mat<S>& at(const std::string& name) {
    for (auto& [n, m] : entries_)
      if (n == name) return m;
    throw ConsistencyError("no parameter named " + name);
  }
  const Mat<S>& at(const std::string& name) const {
    for (const auto& [n, m] : entries_)
      if (n == name) return m;
    throw ConsistencyError("no parameter named " + name);
  }

  bool has(const std::string& name) const {
    for (const auto& [n, m] : entries_)
      if (n == name) return true;
    return false;
  }

  std::size_t size() const { return entries_.size(); }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void set_zero() {
    for (auto& [n, m] : entries_) m.setZero();
  }

  // A zero ParamSet with the same names and shapes (gradients, velocity).
  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& [n, m] : entries_) out.add(n, m.rows(), m.cols());
    return out;
  }

  bool same_structure(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].first != other.entries_[i].first ||
          entries_[i].second.rows() != other.entries_[i].second.rows() ||
          entries_[i].second.cols() != other.entries_[i].second.cols())
        return false;
    return true;
  }

  bool bitwise_equal(const ParamSet& other) const {
    if (!same_structure(other)) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i].second;
      const auto& b = other.entries_[i].second;
      if (std::memcmp(a.data(), b.data(), sizeof(S) * a.size()) != 0)
        return false;
    }
    return true;
  }

  Eigen::Index coefficient_count() const {
    Eigen::Index n = 0;
    for (const auto& [name, m] : entries_) n += m.size();
    return n;
  }

 private:
  std::vector<Entry> entries_;
};

// Content checksum over names and raw coefficient bytes; used by the freeze
// contracts and by stage caching.
template <class S>
std::uint64_t params_checksum(const ParamSet<S>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, m] : params) {
    h = fnv1a64(name, h);
    h = fnv1a64(m.data(), sizeof(S) * static_cast<std::size_t>(m.size()), h);
  }
  return h;
}

// Seeded uniform fan-in initialization: W ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]
// where fan_in is the number of inputs feeding one output coefficient.
// Biases stay zero. Coefficients are filled in storage order.
template <class S>
void init_uniform_fan_in(Mat<S>& w, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  S* p = w.data();
  for (Eigen::Index i = 0; i < w.size(); ++i)
    p[i] = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace zdda

#endif  // ZDDA_NET_PARAMS_HPP_
