// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EXP_HEATMAP_HPP_
#define ZDDA_EXP_HEATMAP_HPP_

#include <filesystem>

#include "zdda/eval/noise_grid.hpp"

namespace zdda {

// Geometry of one rendered heatmap; kept alongside the image so layout can
// be asserted without pixel snapshots.
struct HeatmapLayout {
  struct Box {
    int x = 0, y = 0, w = 0, h = 0;
    std::string text;
    bool overlaps(const Box& o) const {
      return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }
  };
  std::string png_path;
  int width = 0, height = 0;
  std::vector<Box> cells;        // one rect per grid cell
  std::vector<Box> cell_labels;  // per-cell value annotations
  std::vector<Box> axis_labels;  // tick labels, axis captions, title
};

// Renders one matrix as an annotated heatmap PNG. Rows are p_source levels
// (top to bottom), columns p_target levels. `diverging` selects the
// zero-centered palette used for difference grids.
HeatmapLayout render_heatmap_png(const std::filesystem::path& path,
                                 const Mat<double>& values,
                                 const std::vector<double>& row_levels,
                                 const std::vector<double>& col_levels,
                                 const std::string& title, bool diverging);

// Writes the three heatmaps for a noise grid (naive, zdda3, diff) plus the
// layout metadata JSON and the grid CSV. Throws ConsistencyError when the
// grid is incomplete.
std::vector<HeatmapLayout> emit_heatmap(const std::filesystem::path& dir,
                                        const NoiseGridResult& grid);

}  // namespace zdda

#endif  // ZDDA_EXP_HEATMAP_HPP_
