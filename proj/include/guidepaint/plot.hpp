#ifndef GUIDEPAINT_PLOT_HPP_
#define GUIDEPAINT_PLOT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "guidepaint/image_io.hpp"

namespace guidepaint {

// Minimal line-plot renderer for the experiment reports (loss and
// gradient-norm curves). Hand-rolled on purpose: the only consumer is the
// probe output and a PNG with axes, grid, curves and a small legend is all
// that is needed.

namespace plotfont {

// 5x7 bitmap glyphs, rows top-down, '#' = set pixel.
inline const std::array<std::string, 7>* glyph(char c) {
  using G = std::array<std::string, 7>;
  static const std::map<char, G> table = {
      {'0', G{".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
      {'1', G{"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'2', G{".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
      {'3', G{".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."}},
      {'4', G{"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
      {'5', G{"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
      {'6', G{".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."}},
      {'7', G{"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
      {'8', G{".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
      {'9', G{".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."}},
      {'a', G{".....", ".....", ".###.", "....#", ".####", "#...#", ".####"}},
      {'b', G{"#....", "#....", "####.", "#...#", "#...#", "#...#", "####."}},
      {'c', G{".....", ".....", ".###.", "#....", "#....", "#...#", ".###."}},
      {'d', G{"....#", "....#", ".####", "#...#", "#...#", "#...#", ".####"}},
      {'e', G{".....", ".....", ".###.", "#...#", "#####", "#....", ".###."}},
      {'f', G{"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."}},
      {'g', G{".....", ".####", "#...#", "#...#", ".####", "....#", ".###."}},
      {'h', G{"#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#"}},
      {'i', G{"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."}},
      {'j', G{"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."}},
      {'k', G{"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."}},
      {'l', G{".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'m', G{".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#...#"}},
      {'n', G{".....", ".....", "####.", "#...#", "#...#", "#...#", "#...#"}},
      {'o', G{".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."}},
      {'p', G{".....", ".....", "####.", "#...#", "####.", "#....", "#...."}},
      {'q', G{".....", ".....", ".####", "#...#", ".####", "....#", "....#"}},
      {'r', G{".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."}},
      {'s', G{".....", ".....", ".####", "#....", ".###.", "....#", "####."}},
      {'t', G{".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."}},
      {'u', G{".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####"}},
      {'v', G{".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
      {'w', G{".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."}},
      {'x', G{".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"}},
      {'y', G{".....", ".....", "#...#", "#...#", ".####", "....#", ".###."}},
      {'z', G{".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"}},
      {'.', G{".....", ".....", ".....", ".....", ".....", ".##..", ".##.."}},
      {'-', G{".....", ".....", ".....", ".###.", ".....", ".....", "....."}},
      {'_', G{".....", ".....", ".....", ".....", ".....", ".....", "#####"}},
      {'+', G{".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."}},
      {'/', G{"....#", "...#.", "...#.", "..#..", ".#...", ".#...", "#...."}},
      {':', G{".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."}},
      {'=', G{".....", ".....", "#####", ".....", "#####", ".....", "....."}},
      {' ', G{".....", ".....", ".....", ".....", ".....", ".....", "....."}},
  };
  auto it = table.find(c);
  return it == table.end() ? nullptr : &it->second;
}

}  // namespace plotfont

struct PlotSeries {
  std::string label;
  std::vector<double> values;        // y per step (x = index)
  std::array<float, 3> color = {0.8f, 0.2f, 0.2f};
};

struct PlotOptions {
  int64_t width = 720;
  int64_t height = 480;
  bool log_y = false;
  std::string title;  // drawn in the top-left corner
};

class Plot {
 public:
  explicit Plot(PlotOptions opts = {})
      : opts_(opts), canvas_(Tensor::full({3, opts.height, opts.width}, 1.0f)) {}

  void add_series(PlotSeries s) { series_.push_back(std::move(s)); }

  void save(const std::string& path) {
    render();
    save_png(canvas_, path);
  }

 private:
  static constexpr int64_t kMargin = 40;

  void set_pixel(int64_t x, int64_t y, const std::array<float, 3>& c) {
    if (x < 0 || x >= opts_.width || y < 0 || y >= opts_.height) return;
    const int64_t hw = opts_.height * opts_.width;
    canvas_[y * opts_.width + x] = c[0];
    canvas_[hw + y * opts_.width + x] = c[1];
    canvas_[2 * hw + y * opts_.width + x] = c[2];
  }

  void draw_line(double x0, double y0, double x1, double y1,
                 const std::array<float, 3>& c) {
    double dx = x1 - x0, dy = y1 - y0;
    int64_t steps = static_cast<int64_t>(std::max(std::fabs(dx), std::fabs(dy))) + 1;
    for (int64_t i = 0; i <= steps; ++i) {
      double t = static_cast<double>(i) / static_cast<double>(steps);
      set_pixel(static_cast<int64_t>(std::lround(x0 + t * dx)),
                static_cast<int64_t>(std::lround(y0 + t * dy)), c);
    }
  }

  void draw_text(int64_t x, int64_t y, const std::string& text,
                 const std::array<float, 3>& c) {
    for (char ch : text) {
      const auto* g = plotfont::glyph(
          static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      if (g) {
        for (int row = 0; row < 7; ++row)
          for (int col = 0; col < 5; ++col)
            if ((*g)[static_cast<size_t>(row)][static_cast<size_t>(col)] == '#')
              set_pixel(x + col, y + row, c);
      }
      x += 6;
    }
  }

  std::string format_tick(double v) const {
    char buf[32];
    if (v != 0 && (std::fabs(v) < 1e-3 || std::fabs(v) >= 1e4))
      std::snprintf(buf, sizeof(buf), "%.1e", v);
    else
      std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  void render() {
    const std::array<float, 3> axis = {0.25f, 0.25f, 0.25f};
    const std::array<float, 3> grid = {0.87f, 0.87f, 0.87f};
    double lo = 0, hi = 1;
    size_t max_len = 1;
    bool first = true;
    for (const auto& s : series_) {
      max_len = std::max(max_len, s.values.size());
      for (double v : s.values) {
        double y = opts_.log_y ? std::log10(std::max(v, 1e-12)) : v;
        if (first) {
          lo = hi = y;
          first = false;
        }
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
    if (hi - lo < 1e-12) hi = lo + 1;
    const double x0 = kMargin, x1 = static_cast<double>(opts_.width - 20);
    const double y0 = static_cast<double>(opts_.height - kMargin), y1 = 20;

    for (int i = 0; i <= 4; ++i) {
      double frac = static_cast<double>(i) / 4.0;
      double gy = y0 + (y1 - y0) * frac;
      draw_line(x0, gy, x1, gy, grid);
      double v = lo + (hi - lo) * frac;
      draw_text(2, static_cast<int64_t>(gy) - 3,
                format_tick(opts_.log_y ? std::pow(10.0, v) : v), axis);
    }
    draw_line(x0, y0, x1, y0, axis);
    draw_line(x0, y0, x0, y1, axis);
    draw_text(static_cast<int64_t>(x1) - 60, static_cast<int64_t>(y0) + 8,
              "step " + format_tick(static_cast<double>(max_len - 1)), axis);
    if (!opts_.title.empty())
      draw_text(static_cast<int64_t>(x0) + 8, 6, opts_.title, axis);

    int64_t legend_y = 18;
    for (const auto& s : series_) {
      for (size_t i = 0; i + 1 < s.values.size(); ++i) {
        auto map = [&](size_t idx, double v) {
          double fx = max_len > 1
                          ? static_cast<double>(idx) / static_cast<double>(max_len - 1)
                          : 0.0;
          double yv = opts_.log_y ? std::log10(std::max(v, 1e-12)) : v;
          double fy = (yv - lo) / (hi - lo);
          return std::pair<double, double>(x0 + (x1 - x0) * fx, y0 + (y1 - y0) * fy);
        };
        auto [ax, ay] = map(i, s.values[i]);
        auto [bx, by] = map(i + 1, s.values[i + 1]);
        draw_line(ax, ay, bx, by, s.color);
      }
      draw_line(x1 - 110, legend_y + 3, x1 - 95, legend_y + 3, s.color);
      draw_text(static_cast<int64_t>(x1) - 90, legend_y, s.label, axis);
      legend_y += 12;
    }
  }

  PlotOptions opts_;
  Tensor canvas_;
  std::vector<PlotSeries> series_;
};

}  // namespace guidepaint

#endif  // GUIDEPAINT_PLOT_HPP_
