// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/exp/heatmap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>

#include "zdda/image_io.hpp"

namespace zdda {
namespace {

// 5x7 bitmap glyphs, one byte per row, low 5 bits used (MSB = left).
const std::map<char, std::array<std::uint8_t, 7>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 7>> table = {
      {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
      {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
      {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
      {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
      {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
      {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
      {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
      {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
      {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
      {'%', {0x19, 0x1a, 0x02, 0x04, 0x08, 0x0b, 0x13}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
      {'a', {0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f}},
      {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e}},
      {'c', {0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e}},
      {'d', {0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f}},
      {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
      {'f', {0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08}},
      {'g', {0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'i', {0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e}},
      {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c}},
      {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
      {'l', {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
      {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'o', {0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e}},
      {'p', {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10}},
      {'q', {0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01}},
      {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
      {'s', {0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e}},
      {'t', {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06}},
      {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d}},
      {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04}},
      {'w', {0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a}},
      {'x', {0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11}},
      {'y', {0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'z', {0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f}},
  };
  return table;
}

constexpr int kScale = 2;
constexpr int kCharW = 6 * kScale;  // 5 px glyph + 1 px spacing
constexpr int kCharH = 7 * kScale;
constexpr int kCell = 64;
constexpr int kLeft = 92;
constexpr int kTop = 28;
constexpr int kRight = 16;
constexpr int kBottom = 56;

struct Canvas {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Canvas(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 255) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t at = (std::size_t(y) * width + x) * 3;
    rgb[at] = r;
    rgb[at + 1] = g;
    rgb[at + 2] = b;
  }

  void fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b) {
    for (int yy = y; yy < y + h; ++yy)
      for (int xx = x; xx < x + w; ++xx) set(xx, yy, r, g, b);
  }

  int text_width(const std::string& s) const {
    return static_cast<int>(s.size()) * kCharW - kScale;
  }

  void draw_text(int x, int y, const std::string& s, std::uint8_t r,
                 std::uint8_t g, std::uint8_t b) {
    int cx = x;
    for (char ch : s) {
      const auto it = glyphs().find(ch);
      if (it != glyphs().end()) {
        for (int row = 0; row < 7; ++row)
          for (int col = 0; col < 5; ++col)
            if (it->second[row] & (1 << (4 - col)))
              fill_rect(cx + col * kScale, y + row * kScale, kScale, kScale, r,
                        g, b);
      }
      cx += kCharW;
    }
  }
};

struct Color {
  std::uint8_t r, g, b;
};

Color lerp(const Color& a, const Color& b, double t) {
  const auto mix = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + t * (y - x)));
  };
  return Color{mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Sequential palette for accuracies in [0,1].
Color sequential(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const Color lo{13, 8, 84};     // dark violet
  const Color mid{45, 112, 142}; // teal
  const Color hi{253, 231, 37};  // yellow
  return v < 0.5 ? lerp(lo, mid, v * 2) : lerp(mid, hi, (v - 0.5) * 2);
}

// Zero-centered palette for differences; range scales to the data.
Color diverging_color(double v, double half_range) {
  const double t = std::clamp(v / half_range, -1.0, 1.0);
  const Color neg{33, 102, 172};
  const Color mid{247, 247, 247};
  const Color pos{178, 24, 43};
  return t < 0 ? lerp(mid, neg, -t) : lerp(mid, pos, t);
}

double luminance(const Color& c) {
  return (0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0;
}

std::string format_level(double v) {
  char buf[32];
  if (v == std::floor(v))
    std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(v));
  else
    std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

HeatmapLayout render_heatmap_png(const std::filesystem::path& path,
                                 const Mat<double>& values,
                                 const std::vector<double>& row_levels,
                                 const std::vector<double>& col_levels,
                                 const std::string& title, bool diverging) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  if (rows != static_cast<int>(row_levels.size()) ||
      cols != static_cast<int>(col_levels.size()))
    throw ConsistencyError("heatmap: level lists do not match the grid");

  HeatmapLayout layout;
  layout.png_path = path.string();
  layout.width = kLeft + cols * kCell + kRight;
  layout.height = kTop + rows * kCell + kBottom;
  Canvas canvas(layout.width, layout.height);

  double half_range = 0.01;
  if (diverging)
    half_range = std::max(half_range, values.cwiseAbs().maxCoeff());

  const auto add_label = [&](int x, int y, const std::string& text) {
    layout.axis_labels.push_back(
        {x, y, canvas.text_width(text), kCharH, text});
  };

  canvas.draw_text(kLeft, 8, title, 0, 0, 0);
  add_label(kLeft, 8, title);

  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int x = kLeft + j * kCell;
      const int y = kTop + i * kCell;
      const double v = values(i, j);
      const Color c = diverging ? diverging_color(v, half_range)
                                : sequential(v);
      canvas.fill_rect(x, y, kCell, kCell, c.r, c.g, c.b);
      layout.cells.push_back({x, y, kCell, kCell, ""});

      const std::string text = format_value(v);
      const int tx = x + (kCell - canvas.text_width(text)) / 2;
      const int ty = y + (kCell - kCharH) / 2;
      const bool dark_text = luminance(c) > 0.6;
      canvas.draw_text(tx, ty, text, dark_text ? 0 : 255, dark_text ? 0 : 255,
                       dark_text ? 0 : 255);
      layout.cell_labels.push_back(
          {tx, ty, canvas.text_width(text), kCharH, text});
    }
  }

  // Row ticks (p_source) on the left, column ticks (p_target) below.
  for (int i = 0; i < rows; ++i) {
    const std::string text = format_level(row_levels[i]);
    const int tx = kLeft - 10 - canvas.text_width(text);
    const int ty = kTop + i * kCell + (kCell - kCharH) / 2;
    canvas.draw_text(tx, ty, text, 0, 0, 0);
    add_label(tx, ty, text);
  }
  for (int j = 0; j < cols; ++j) {
    const std::string text = format_level(col_levels[j]);
    const int tx = kLeft + j * kCell + (kCell - canvas.text_width(text)) / 2;
    const int ty = kTop + rows * kCell + 8;
    canvas.draw_text(tx, ty, text, 0, 0, 0);
    add_label(tx, ty, text);
  }

  // Axis captions: p_source stacked vertically, p_target centered below.
  {
    const std::string caption = "p_source";
    const int total = static_cast<int>(caption.size()) * (kCharH + 2);
    int ty = kTop + (rows * kCell - total) / 2;
    for (char ch : caption) {
      canvas.draw_text(6, ty, std::string(1, ch), 0, 0, 0);
      layout.axis_labels.push_back(
          {6, ty, kCharW - kScale, kCharH, std::string(1, ch)});
      ty += kCharH + 2;
    }
  }
  {
    const std::string caption = "p_target (%)";
    const int tx = kLeft + (cols * kCell - canvas.text_width(caption)) / 2;
    const int ty = kTop + rows * kCell + 8 + kCharH + 8;
    canvas.draw_text(tx, ty, caption, 0, 0, 0);
    add_label(tx, ty, caption);
  }

  write_png_rgb8(path, layout.width, layout.height, canvas.rgb);
  return layout;
}

std::vector<HeatmapLayout> emit_heatmap(const std::filesystem::path& dir,
                                        const NoiseGridResult& grid) {
  if (!grid.complete())
    throw ConsistencyError("emit_heatmap: incomplete noise grid");
  std::filesystem::create_directories(dir);
  const std::string stem = "heatmap_" + grid.noise_model;

  std::vector<HeatmapLayout> layouts;
  layouts.push_back(render_heatmap_png(
      dir / (stem + "_naive.png"), grid.acc_naive, grid.p_source_levels,
      grid.p_target_levels, "naive fusion accuracy (%)", false));
  layouts.push_back(render_heatmap_png(
      dir / (stem + "_zdda3.png"), grid.acc_zdda3, grid.p_source_levels,
      grid.p_target_levels, "zdda3 accuracy (%)", false));
  layouts.push_back(render_heatmap_png(
      dir / (stem + "_diff.png"), grid.diff, grid.p_source_levels,
      grid.p_target_levels, "accuracy diff (zdda3 - naive)", true));

  nlohmann::json meta = nlohmann::json::array();
  for (const auto& l : layouts) {
    nlohmann::json boxes = nlohmann::json::array();
    const auto dump_boxes = [&](const std::vector<HeatmapLayout::Box>& bs,
                                const char* kind) {
      for (const auto& b : bs)
        boxes.push_back({{"kind", kind},
                         {"x", b.x},
                         {"y", b.y},
                         {"w", b.w},
                         {"h", b.h},
                         {"text", b.text}});
    };
    dump_boxes(l.cells, "cell");
    dump_boxes(l.cell_labels, "cell_label");
    dump_boxes(l.axis_labels, "axis_label");
    meta.push_back({{"png", l.png_path},
                    {"width", l.width},
                    {"height", l.height},
                    {"boxes", boxes}});
  }
  std::ofstream out(dir / (stem + "_layout.json"));
  out << meta.dump(2) << "\n";

  std::ofstream csv(dir / (stem + ".csv"));
  csv << grid_to_csv(grid);
  return layouts;
}

}  // namespace zdda
