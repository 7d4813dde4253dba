// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_CHECKPOINT_HPP_
#define ZDDA_NET_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "zdda/net/network.hpp"

namespace zdda {

// Single-file parameter archive: a JSON header (spec/tag/frozen flag/seed
// lineage and the array directory) followed by the raw coefficient bytes.
// Round-trips are bit-exact.

template <class S>
void save_branch(const std::filesystem::path& path, const BranchState<S>& b,
                 const std::string& seed_lineage = "");

template <class S>
BranchState<S> load_branch(const std::filesystem::path& path,
                           std::string* seed_lineage = nullptr);

template <class S>
void save_classifier(const std::filesystem::path& path,
                     const ClassifierState<S>& c,
                     const std::string& seed_lineage = "");

template <class S>
ClassifierState<S> load_classifier(const std::filesystem::path& path,
                                   std::string* seed_lineage = nullptr);

}  // namespace zdda

#endif  // ZDDA_NET_CHECKPOINT_HPP_
