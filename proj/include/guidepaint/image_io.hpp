#ifndef GUIDEPAINT_IMAGE_IO_HPP_
#define GUIDEPAINT_IMAGE_IO_HPP_

#include <png.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "guidepaint/tensor.hpp"

namespace guidepaint {

// Images move through the library as (C,H,W) float tensors in [0,1]
// (C = 1 grayscale, C = 3 RGB). PNG files are 8-bit.

namespace detail {
struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f) std::fclose(f);
  }
};
}  // namespace detail

inline void save_png(const Tensor& image, const std::string& path) {
  GP_CHECK_SHAPE(image.rank() == 3 && (image.dim(0) == 1 || image.dim(0) == 3),
                 "save_png expects (1|3,H,W), got ", shape_str(image.shape()));
  const int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  detail::PngCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed for '" + path + "'");
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
               C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<size_t>(W * C));
  for (int64_t h = 0; h < H; ++h) {
    for (int64_t w = 0; w < W; ++w)
      for (int64_t c = 0; c < C; ++c) {
        float v = image[(c * H + h) * W + w];
        v = std::min(1.0f, std::max(0.0f, v));
        row[static_cast<size_t>(w * C + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline Tensor load_png(const std::string& path) {
  detail::PngCloser fc{std::fopen(path.c_str(), "rb")};
  if (!fc.f) throw IoError("cannot open '" + path + "'");
  unsigned char header[8];
  if (std::fread(header, 1, 8, fc.f) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw IoError("'" + path + "' is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode failed for '" + path + "'");
  }
  png_init_io(png, fc.f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int64_t H = png_get_image_height(png, info);
  const int64_t W = png_get_image_width(png, info);
  const int64_t C = png_get_channels(png, info);
  if (C != 1 && C != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("'" + path + "' has unsupported channel count " + std::to_string(C));
  }
  std::vector<unsigned char> row(static_cast<size_t>(W * C));
  Tensor out({C, H, W});
  for (int64_t h = 0; h < H; ++h) {
    png_read_row(png, row.data(), nullptr);
    for (int64_t w = 0; w < W; ++w)
      for (int64_t c = 0; c < C; ++c)
        out[(c * H + h) * W + w] =
            static_cast<float>(row[static_cast<size_t>(w * C + c)]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

// ---- color utilities ----

struct Hsv {
  float h;  // degrees [0, 360)
  float s;
  float v;
};

inline Hsv rgb_to_hsv(float r, float g, float b) {
  float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  float d = mx - mn;
  Hsv out{0.0f, mx > 0 ? d / mx : 0.0f, mx};
  if (d > 1e-12f) {
    if (mx == r)
      out.h = 60.0f * std::fmod((g - b) / d + 6.0f, 6.0f);
    else if (mx == g)
      out.h = 60.0f * ((b - r) / d + 2.0f);
    else
      out.h = 60.0f * ((r - g) / d + 4.0f);
  }
  return out;
}

inline std::array<float, 3> hsv_to_rgb(float h, float s, float v) {
  h = std::fmod(std::fmod(h, 360.0f) + 360.0f, 360.0f);
  float c = v * s;
  float x = c * (1.0f - std::fabs(std::fmod(h / 60.0f, 2.0f) - 1.0f));
  float m = v - c;
  std::array<float, 3> rgb{};
  switch (static_cast<int>(h / 60.0f) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

// Saturation*value weighted hue histogram, normalized to unit mass (zero
// vector for a fully gray image). image: (3,H,W).
inline std::vector<double> hue_histogram(const Tensor& image, int bins = 36) {
  GP_CHECK_SHAPE(image.rank() == 3 && image.dim(0) == 3,
                 "hue_histogram expects (3,H,W), got ", shape_str(image.shape()));
  const int64_t H = image.dim(1), W = image.dim(2), hw = H * W;
  std::vector<double> hist(static_cast<size_t>(bins), 0.0);
  const float* r = image.data();
  const float* g = r + hw;
  const float* b = g + hw;
  double total = 0;
  for (int64_t i = 0; i < hw; ++i) {
    Hsv hsv = rgb_to_hsv(r[i], g[i], b[i]);
    double wgt = static_cast<double>(hsv.s) * static_cast<double>(hsv.v);
    int bin = std::min(bins - 1, static_cast<int>(hsv.h / 360.0f * static_cast<float>(bins)));
    hist[static_cast<size_t>(bin)] += wgt;
    total += wgt;
  }
  if (total > 0)
    for (double& v : hist) v /= total;
  return hist;
}

inline double histogram_l1_distance(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

// Circular mean hue (degrees), weighted by saturation*value.
inline double mean_hue_degrees(const Tensor& image) {
  const int64_t hw = image.dim(1) * image.dim(2);
  const float* r = image.data();
  const float* g = r + hw;
  const float* b = g + hw;
  double sx = 0, sy = 0;
  for (int64_t i = 0; i < hw; ++i) {
    Hsv hsv = rgb_to_hsv(r[i], g[i], b[i]);
    double wgt = static_cast<double>(hsv.s) * static_cast<double>(hsv.v);
    double rad = static_cast<double>(hsv.h) * M_PI / 180.0;
    sx += wgt * std::cos(rad);
    sy += wgt * std::sin(rad);
  }
  double deg = std::atan2(sy, sx) * 180.0 / M_PI;
  return deg < 0 ? deg + 360.0 : deg;
}

inline double hue_difference_degrees(double a, double b) {
  double d = std::fabs(a - b);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_IMAGE_IO_HPP_
