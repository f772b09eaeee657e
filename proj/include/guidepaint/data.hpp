#ifndef GUIDEPAINT_DATA_HPP_
#define GUIDEPAINT_DATA_HPP_

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidepaint/image_io.hpp"
#include "guidepaint/rng.hpp"
#include "guidepaint/tensor.hpp"

namespace guidepaint {

// ---- style classes ----

enum class PaletteTexture { kFlat, kStripes, kGradient };

struct StyleClass {
  int id = 0;
  std::vector<std::array<float, 3>> palette;  // 4-6 RGB colors
  PaletteTexture texture = PaletteTexture::kFlat;
  double mean_hue = 0.0;  // degrees
};

// Classes are hue-separated by construction: class i owns a 360/n-degree
// sector, so distinct classes differ in mean hue by >= 30 degrees for
// n <= 12. Value/saturation ladders are shared across classes (same slot,
// same lightness) to keep the luminance structure palette-independent.
inline std::vector<StyleClass> make_style_classes(int num_classes, uint64_t seed) {
  GP_CHECK_CFG(num_classes >= 1 && num_classes <= 12,
               "num_classes must be in [1,12] to keep class hues >= 30 degrees "
               "apart, got ",
               num_classes);
  static constexpr std::array<float, 6> kValues = {0.35f, 0.85f, 0.55f,
                                                   0.70f, 0.45f, 0.80f};
  static constexpr std::array<float, 6> kSats = {0.85f, 0.75f, 0.90f,
                                                 0.80f, 0.70f, 0.85f};
  std::vector<StyleClass> classes(static_cast<size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) {
    StyleClass& c = classes[static_cast<size_t>(i)];
    c.id = i;
    Rng rng(seed_combine(seed, 0x70616c, static_cast<uint64_t>(i)));
    double center = 360.0 * i / num_classes;
    c.mean_hue = center;
    int count = rng.uniform_int(4, 6);
    c.palette.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
      float hue = static_cast<float>(center + rng.uniform(-12.0, 12.0));
      c.palette.push_back(hsv_to_rgb(hue, kSats[static_cast<size_t>(k)],
                                     kValues[static_cast<size_t>(k)]));
    }
    c.texture = static_cast<PaletteTexture>(rng.uniform_int(0, 2));
  }
  return classes;
}

// ---- painting synthesis ----

namespace detail {

struct ShapeSpec {
  enum Kind { kEllipse, kPolygon } kind;
  double cx, cy;             // center, pixel coords
  double rx, ry;             // ellipse radii
  double rot;                // radians
  std::vector<std::array<double, 2>> poly;  // polygon vertices
  int color_a, color_b;      // palette indices (b used by stripes/gradient)
  PaletteTexture texture;
  double stripe_period;
  double bbox_y0, bbox_y1;
};

inline bool point_in_polygon(const std::vector<std::array<double, 2>>& poly, double x,
                             double y) {
  bool inside = false;
  size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    double xi = poly[i][0], yi = poly[i][1], xj = poly[j][0], yj = poly[j][1];
    if (((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi))
      inside = !inside;
  }
  return inside;
}

}  // namespace detail

// Deterministic procedural "painting": 3-8 filled shapes drawn from the
// class palette with the class texture, on a light palette-derived
// background. Values stay inside [0.08, 0.95] so the copy task has no
// saturated-sigmoid tails.
inline Tensor synthesize_painting(const StyleClass& cls, uint64_t seed,
                                  int64_t size = 64) {
  GP_CHECK_CFG(!cls.palette.empty(), "style class ", cls.id, " has an empty palette");
  Rng rng(seed_combine(seed, 0x706e74, static_cast<uint64_t>(cls.id)));
  Tensor img({3, size, size});
  // background: desaturated light tint of the class hue
  auto bg = hsv_to_rgb(static_cast<float>(cls.mean_hue), 0.18f, 0.92f);
  const int64_t hw = size * size;
  for (int64_t i = 0; i < hw; ++i) {
    img[i] = bg[0];
    img[hw + i] = bg[1];
    img[2 * hw + i] = bg[2];
  }

  int num_shapes = rng.uniform_int(3, 8);
  std::vector<detail::ShapeSpec> shapes;
  shapes.reserve(static_cast<size_t>(num_shapes));
  for (int s = 0; s < num_shapes; ++s) {
    detail::ShapeSpec sp;
    sp.kind = rng.uniform() < 0.5 ? detail::ShapeSpec::kEllipse
                                  : detail::ShapeSpec::kPolygon;
    sp.cx = rng.uniform(0.15, 0.85) * static_cast<double>(size);
    sp.cy = rng.uniform(0.15, 0.85) * static_cast<double>(size);
    double base_r = rng.uniform(0.08, 0.28) * static_cast<double>(size);
    sp.rx = base_r * rng.uniform(0.6, 1.4);
    sp.ry = base_r * rng.uniform(0.6, 1.4);
    sp.rot = rng.uniform(0.0, M_PI);
    sp.color_a = static_cast<int>(rng.uniform_int(cls.palette.size()));
    sp.color_b = static_cast<int>(rng.uniform_int(cls.palette.size()));
    sp.texture = cls.texture;
    sp.stripe_period = rng.uniform(3.0, 7.0);
    if (sp.kind == detail::ShapeSpec::kPolygon) {
      int verts = rng.uniform_int(3, 5);
      for (int v = 0; v < verts; ++v) {
        double ang = 2.0 * M_PI * v / verts + sp.rot;
        double r = base_r * rng.uniform(0.7, 1.3);
        sp.poly.push_back({sp.cx + r * std::cos(ang), sp.cy + r * std::sin(ang)});
      }
    }
    sp.bbox_y0 = sp.cy - std::max(sp.rx, sp.ry);
    sp.bbox_y1 = sp.cy + std::max(sp.rx, sp.ry);
    shapes.push_back(std::move(sp));
  }

  auto shade = [&](const detail::ShapeSpec& sp, double x, double y) {
    const auto& ca = cls.palette[static_cast<size_t>(sp.color_a)];
    const auto& cb = cls.palette[static_cast<size_t>(sp.color_b)];
    switch (sp.texture) {
      case PaletteTexture::kStripes: {
        double phase = (x + y) / sp.stripe_period;
        bool odd = (static_cast<int64_t>(std::floor(phase)) & 1) != 0;
        return odd ? cb : ca;
      }
      case PaletteTexture::kGradient: {
        double span = std::max(1.0, sp.bbox_y1 - sp.bbox_y0);
        double t = std::min(1.0, std::max(0.0, (y - sp.bbox_y0) / span));
        std::array<float, 3> out;
        for (int c = 0; c < 3; ++c)
          out[static_cast<size_t>(c)] =
              static_cast<float>((1.0 - t) * ca[static_cast<size_t>(c)] +
                                 t * cb[static_cast<size_t>(c)]);
        return out;
      }
      default:
        return ca;
    }
  };

  for (const auto& sp : shapes) {
    for (int64_t py = 0; py < size; ++py) {
      for (int64_t px = 0; px < size; ++px) {
        double x = static_cast<double>(px) + 0.5, y = static_cast<double>(py) + 0.5;
        bool inside;
        if (sp.kind == detail::ShapeSpec::kEllipse) {
          double dx = x - sp.cx, dy = y - sp.cy;
          double u = dx * std::cos(sp.rot) + dy * std::sin(sp.rot);
          double v = -dx * std::sin(sp.rot) + dy * std::cos(sp.rot);
          inside = (u * u) / (sp.rx * sp.rx) + (v * v) / (sp.ry * sp.ry) <= 1.0;
        } else {
          inside = detail::point_in_polygon(sp.poly, x, y);
        }
        if (!inside) continue;
        auto col = shade(sp, x, y);
        img[0 * hw + py * size + px] = col[0];
        img[1 * hw + py * size + px] = col[1];
        img[2 * hw + py * size + px] = col[2];
      }
    }
  }
  // clamp into the interior of [0,1]
  for (int64_t i = 0; i < img.numel(); ++i)
    img[i] = std::min(0.95f, std::max(0.08f, img[i]));
  return img;
}

// ---- sketch extraction ----

namespace detail {

// Zhang-Suen binary thinning; mask is 1 for line pixels.
inline void thin_mask(std::vector<uint8_t>& mask, int64_t H, int64_t W) {
  auto at = [&](int64_t y, int64_t x) -> uint8_t {
    if (y < 0 || y >= H || x < 0 || x >= W) return 0;
    return mask[static_cast<size_t>(y * W + x)];
  };
  bool changed = true;
  std::vector<int64_t> kill;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      kill.clear();
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
          if (!at(y, x)) continue;
          uint8_t p2 = at(y - 1, x), p3 = at(y - 1, x + 1), p4 = at(y, x + 1),
                  p5 = at(y + 1, x + 1), p6 = at(y + 1, x), p7 = at(y + 1, x - 1),
                  p8 = at(y, x - 1), p9 = at(y - 1, x - 1);
          int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (b < 2 || b > 6) continue;
          uint8_t seq[8] = {p2, p3, p4, p5, p6, p7, p8, p9};
          int a = 0;
          for (int i = 0; i < 8; ++i)
            if (seq[i] == 0 && seq[(i + 1) % 8] == 1) ++a;
          if (a != 1) continue;
          if (pass == 0) {
            if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
          } else {
            if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
          }
          kill.push_back(y * W + x);
        }
      }
      for (int64_t idx : kill) mask[static_cast<size_t>(idx)] = 0;
      if (!kill.empty()) changed = true;
    }
  }
}

}  // namespace detail

// Inverted edge map: luma -> Sobel magnitude -> relative threshold ->
// morphological thinning. Background is exactly 1.0, lines 0.0.
inline Tensor extract_sketch(const Tensor& painting, double threshold = 0.25) {
  GP_CHECK_SHAPE(painting.rank() == 3 && painting.dim(0) == 3,
                 "extract_sketch expects (3,H,W), got ", shape_str(painting.shape()));
  const int64_t H = painting.dim(1), W = painting.dim(2), hw = H * W;
  std::vector<double> lum(static_cast<size_t>(hw));
  const float* r = painting.data();
  const float* g = r + hw;
  const float* b = g + hw;
  for (int64_t i = 0; i < hw; ++i)
    lum[static_cast<size_t>(i)] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];

  auto lp = [&](int64_t y, int64_t x) {
    y = std::min(H - 1, std::max<int64_t>(0, y));
    x = std::min(W - 1, std::max<int64_t>(0, x));
    return lum[static_cast<size_t>(y * W + x)];
  };
  std::vector<double> mag(static_cast<size_t>(hw));
  double max_mag = 0;
  for (int64_t y = 0; y < H; ++y) {
    for (int64_t x = 0; x < W; ++x) {
      double gx = -lp(y - 1, x - 1) - 2 * lp(y, x - 1) - lp(y + 1, x - 1) +
                  lp(y - 1, x + 1) + 2 * lp(y, x + 1) + lp(y + 1, x + 1);
      double gy = -lp(y - 1, x - 1) - 2 * lp(y - 1, x) - lp(y - 1, x + 1) +
                  lp(y + 1, x - 1) + 2 * lp(y + 1, x) + lp(y + 1, x + 1);
      double m = std::sqrt(gx * gx + gy * gy);
      mag[static_cast<size_t>(y * W + x)] = m;
      max_mag = std::max(max_mag, m);
    }
  }
  Tensor sketch = Tensor::full({1, H, W}, 1.0f);
  if (max_mag < 0.02) return sketch;  // flat image, no edges
  std::vector<uint8_t> mask(static_cast<size_t>(hw), 0);
  for (int64_t i = 0; i < hw; ++i)
    mask[static_cast<size_t>(i)] =
        mag[static_cast<size_t>(i)] > threshold * max_mag ? 1 : 0;
  detail::thin_mask(mask, H, W);
  for (int64_t i = 0; i < hw; ++i)
    if (mask[static_cast<size_t>(i)]) sketch[i] = 0.0f;
  return sketch;
}

// ---- paired dataset ----

struct PairedSample {
  Tensor sketch;    // (1,S,S)
  Tensor painting;  // (3,S,S)
  int style_class = 0;
};

struct DatasetConfig {
  int num_classes = 8;
  int samples_per_class = 250;
  int64_t size = 64;
  uint64_t seed = 7;
};

// In-memory paired dataset, index-addressable; sample content depends only
// on (config, index).
class Dataset {
 public:
  static Dataset generate(const DatasetConfig& cfg) {
    Dataset d;
    d.cfg_ = cfg;
    d.classes_ = make_style_classes(cfg.num_classes, cfg.seed);
    d.samples_.reserve(static_cast<size_t>(cfg.num_classes) *
                       static_cast<size_t>(cfg.samples_per_class));
    for (int c = 0; c < cfg.num_classes; ++c) {
      for (int i = 0; i < cfg.samples_per_class; ++i) {
        PairedSample s;
        s.style_class = c;
        s.painting = synthesize_painting(
            d.classes_[static_cast<size_t>(c)],
            seed_combine(cfg.seed, static_cast<uint64_t>(c), static_cast<uint64_t>(i)),
            cfg.size);
        s.sketch = extract_sketch(s.painting);
        d.samples_.push_back(std::move(s));
      }
    }
    return d;
  }

  const DatasetConfig& config() const { return cfg_; }
  const std::vector<StyleClass>& classes() const { return classes_; }
  size_t size() const { return samples_.size(); }
  const PairedSample& sample(size_t i) const { return samples_.at(i); }

  // Batch content is a pure function of (seed, step).
  struct Batch {
    Tensor sketches;   // (N,1,S,S)
    Tensor paintings;  // (N,3,S,S)
    std::vector<int> labels;
  };

  Batch make_batch(uint64_t seed, int64_t step, int64_t batch_size) const {
    const int64_t S = cfg_.size;
    Batch b;
    b.sketches = Tensor({batch_size, 1, S, S});
    b.paintings = Tensor({batch_size, 3, S, S});
    b.labels.resize(static_cast<size_t>(batch_size));
    for (int64_t i = 0; i < batch_size; ++i) {
      size_t idx = static_cast<size_t>(
          seed_combine(seed, static_cast<uint64_t>(step), static_cast<uint64_t>(i)) %
          samples_.size());
      const PairedSample& s = samples_[idx];
      std::copy(s.sketch.data(), s.sketch.data() + S * S,
                b.sketches.data() + i * S * S);
      std::copy(s.painting.data(), s.painting.data() + 3 * S * S,
                b.paintings.data() + i * 3 * S * S);
      b.labels[static_cast<size_t>(i)] = s.style_class;
    }
    return b;
  }

  void push_sample(PairedSample s) { samples_.push_back(std::move(s)); }
  void set_config(const DatasetConfig& cfg) { cfg_ = cfg; }
  void set_classes(std::vector<StyleClass> c) { classes_ = std::move(c); }

 private:
  DatasetConfig cfg_;
  std::vector<StyleClass> classes_;
  std::vector<PairedSample> samples_;
};

// Writes PNG pairs plus a line-delimited manifest (one JSON record per
// sample: id, sketch, painting, class). Byte-reproducible for a fixed
// config.
inline void build_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  Dataset d = Dataset::generate(cfg);
  std::ofstream manifest(out_dir + "/manifest.jsonl", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in '" + out_dir + "'");
  char name[64];
  for (size_t i = 0; i < d.size(); ++i) {
    const PairedSample& s = d.sample(i);
    std::snprintf(name, sizeof(name), "%06zu_sketch.png", i);
    std::string sketch_name = name;
    std::snprintf(name, sizeof(name), "%06zu_painting.png", i);
    std::string paint_name = name;
    save_png(s.sketch, out_dir + "/" + sketch_name);
    save_png(s.painting, out_dir + "/" + paint_name);
    nlohmann::json rec = {{"id", i},
                          {"sketch", sketch_name},
                          {"painting", paint_name},
                          {"class", s.style_class}};
    manifest << rec.dump() << "\n";
  }
  nlohmann::json meta = {{"num_classes", cfg.num_classes},
                         {"samples_per_class", cfg.samples_per_class},
                         {"size", cfg.size},
                         {"seed", cfg.seed}};
  std::ofstream meta_out(out_dir + "/dataset.json", std::ios::trunc);
  meta_out << meta.dump(2) << "\n";
}

inline Dataset load_dataset(const std::string& dir) {
  std::ifstream meta_in(dir + "/dataset.json");
  if (!meta_in) throw IoError("no dataset.json in '" + dir + "'");
  nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
  if (meta.is_discarded()) throw IoError("bad dataset.json in '" + dir + "'");
  DatasetConfig cfg;
  cfg.num_classes = meta.value("num_classes", 0);
  cfg.samples_per_class = meta.value("samples_per_class", 0);
  cfg.size = meta.value("size", 64);
  cfg.seed = meta.value("seed", 0);

  std::ifstream manifest(dir + "/manifest.jsonl");
  if (!manifest) throw IoError("no manifest.jsonl in '" + dir + "'");
  Dataset d;
  d.set_config(cfg);
  d.set_classes(make_style_classes(cfg.num_classes, cfg.seed));
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw IoError("bad manifest record in '" + dir + "'");
    PairedSample s;
    s.sketch = load_png(dir + "/" + rec.at("sketch").get<std::string>());
    s.painting = load_png(dir + "/" + rec.at("painting").get<std::string>());
    s.style_class = rec.at("class").get<int>();
    d.push_sample(std::move(s));
  }
  return d;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_DATA_HPP_
