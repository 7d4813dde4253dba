// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EXP_TABLES_HPP_
#define ZDDA_EXP_TABLES_HPP_

#include "zdda/exp/runner.hpp"

namespace zdda {

struct TableOutput {
  std::string text;
  std::string csv;
};

// Result-table rendering. Layout "table4" arranges adaptation tasks as
// columns with a source-only row, one row per task-irrelevant dataset
// choice (overall/per-class accuracy, similarity in parentheses when
// available) and a target-only row. Cells without a record render N/A.
TableOutput emit_table(const std::vector<RunRecord>& records,
                       const std::string& layout = "table4");

}  // namespace zdda

#endif  // ZDDA_EXP_TABLES_HPP_
