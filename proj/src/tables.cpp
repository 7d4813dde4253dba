// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/exp/tables.hpp"

#include <algorithm>
#include <cstdio>

namespace zdda {
namespace {

std::string cell_from_report(const RunRecord& r, const std::string& key,
                             std::optional<double> similarity = {}) {
  const auto it = r.reports.find(key);
  if (it == r.reports.end()) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f/%.2f",
                100.0 * it->second.overall_accuracy,
                100.0 * it->second.mean_per_class_accuracy);
  std::string cell = buf;
  if (similarity) {
    std::snprintf(buf, sizeof(buf), " (%.3f)", *similarity);
    cell += buf;
  }
  return cell;
}

std::string render_text(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());

  const auto line = [&](const std::vector<std::string>& row) {
    std::string s = "|";
    for (std::size_t c = 0; c < row.size(); ++c) {
      s += " " + row[c] + std::string(widths[c] - row[c].size(), ' ') + " |";
    }
    return s + "\n";
  };
  std::string rule = "+";
  for (std::size_t w : widths) rule += std::string(w + 2, '-') + "+";
  rule += "\n";

  std::string out = rule + line(header) + rule;
  for (const auto& row : rows) out += line(row);
  out += rule;
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find(',') == std::string::npos) return s;
  return "\"" + s + "\"";
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c)
    out += (c ? "," : "") + csv_escape(header[c]);
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out += (c ? "," : "") + csv_escape(row[c]);
    out += "\n";
  }
  return out;
}

}  // namespace

TableOutput emit_table(const std::vector<RunRecord>& records,
                       const std::string& layout) {
  if (layout != "table4" && layout != "runs")
    throw ConfigError("unknown table layout: " + layout);

  if (layout == "runs") {
    std::vector<std::string> header = {"run", "report", "overall",
                                       "mean_per_class"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records)
      for (const auto& [key, rep] : r.reports) {
        char a[32], b[32];
        std::snprintf(a, sizeof(a), "%.4f", rep.overall_accuracy);
        std::snprintf(b, sizeof(b), "%.4f", rep.mean_per_class_accuracy);
        rows.push_back({r.name, key, a, b});
      }
    return TableOutput{render_text(header, rows), render_csv(header, rows)};
  }

  // Column per adaptation task, in first-seen order.
  std::vector<std::string> tasks;
  std::vector<std::string> ti_ids;
  for (const auto& r : records) {
    const std::string task = r.tr_source + "->" + r.tr_target;
    if (std::find(tasks.begin(), tasks.end(), task) == tasks.end())
      tasks.push_back(task);
    if (!r.ti_pair.empty() &&
        std::find(ti_ids.begin(), ti_ids.end(), r.ti_pair) == ti_ids.end())
      ti_ids.push_back(r.ti_pair);
  }
  std::sort(ti_ids.begin(), ti_ids.end());

  const auto find_record = [&](const std::string& task,
                               const std::string& ti) -> const RunRecord* {
    for (const auto& r : records)
      if (r.tr_source + "->" + r.tr_target == task &&
          (ti.empty() || r.ti_pair == ti))
        return &r;
    return nullptr;
  };

  std::vector<std::string> header = {"T-I data"};
  header.insert(header.end(), tasks.begin(), tasks.end());
  std::vector<std::vector<std::string>> rows;

  {
    std::vector<std::string> row = {"source only"};
    for (const auto& task : tasks) {
      std::string cell = "N/A";
      for (const auto& r : records)
        if (r.tr_source + "->" + r.tr_target == task &&
            r.reports.count("source_only.target")) {
          cell = cell_from_report(r, "source_only.target");
          break;
        }
      row.push_back(cell);
    }
    rows.push_back(row);
  }
  for (const auto& ti : ti_ids) {
    std::vector<std::string> row = {ti + ", " + ti + "-m"};
    for (const auto& task : tasks) {
      const RunRecord* r = find_record(task, ti);
      row.push_back(r ? cell_from_report(*r, "zdda2.target", r->similarity)
                      : "N/A");
    }
    rows.push_back(row);
  }
  {
    std::vector<std::string> row = {"target only"};
    for (const auto& task : tasks) {
      std::string cell = "N/A";
      for (const auto& r : records)
        if (r.tr_source + "->" + r.tr_target == task &&
            r.reports.count("target_only.target")) {
          cell = cell_from_report(r, "target_only.target");
          break;
        }
      row.push_back(cell);
    }
    rows.push_back(row);
  }

  return TableOutput{render_text(header, rows), render_csv(header, rows)};
}

}  // namespace zdda
