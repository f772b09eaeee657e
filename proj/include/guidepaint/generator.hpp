#ifndef GUIDEPAINT_GENERATOR_HPP_
#define GUIDEPAINT_GENERATOR_HPP_

#include <memory>
#include <string>
#include <vector>

#include "guidepaint/layers.hpp"

namespace guidepaint {

enum class HintMode { kBroadcastConcat, kAddAfterProjection };

inline const char* hint_mode_name(HintMode m) {
  return m == HintMode::kBroadcastConcat ? "broadcast-concat" : "add-after-projection";
}

struct GeneratorConfig {
  int64_t input_size = 64;
  int64_t in_channels = 1;   // sketches are single-channel
  int64_t out_channels = 3;
  int64_t base_channels = 16;
  int depth = 4;             // encoder/decoder levels
  int mid_blocks = 4;        // residual blocks between them
  int64_t hint_dim = 256;    // F
  int64_t hint_proj_dim = 0;  // 0 = auto (mid/2 for concat, mid for add)
  HintMode hint_mode = HintMode::kBroadcastConcat;
  bool use_hint = true;
  bool guide_decoders_enabled = true;
  bool guide1_grayscale = true;  // guide decoder 1 emits 1 channel
  bool skips_enabled = true;     // off only for the laziness control runs

  int64_t channels_at(int level) const { return base_channels << level; }
  int64_t mid_channels() const { return channels_at(depth - 1); }
  int64_t guide_channels_at(int level) const {
    return std::max<int64_t>(1, base_channels / 2) << level;
  }
  int64_t deepest_size() const { return input_size >> depth; }
  int64_t guide1_channels() const { return guide1_grayscale ? 1 : out_channels; }

  int64_t resolved_hint_proj_dim() const {
    if (hint_proj_dim > 0) return hint_proj_dim;
    return hint_mode == HintMode::kAddAfterProjection ? mid_channels()
                                                      : std::max<int64_t>(1, mid_channels() / 2);
  }

  void validate() const {
    GP_CHECK_CFG(depth >= 2, "depth must be >= 2, got ", depth);
    GP_CHECK_CFG(mid_blocks >= 1, "mid_blocks must be >= 1, got ", mid_blocks);
    GP_CHECK_CFG(base_channels >= 1, "base_channels must be >= 1, got ", base_channels);
    GP_CHECK_CFG(in_channels >= 1 && out_channels >= 1,
                 "in/out channels must be >= 1");
    GP_CHECK_CFG(is_power_of_two(input_size), "input_size must be a power of two, got ",
                 input_size);
    GP_CHECK_CFG(input_size % (int64_t(1) << depth) == 0, "input_size ", input_size,
                 " not divisible by 2^depth = ", int64_t(1) << depth);
    GP_CHECK_CFG(deepest_size() >= 1, "input_size ", input_size, " too small for depth ",
                 depth);
    if (use_hint) {
      GP_CHECK_CFG(hint_dim > 0, "hint_dim must be > 0, got ", hint_dim);
      if (hint_mode == HintMode::kAddAfterProjection && hint_proj_dim > 0) {
        GP_CHECK_CFG(hint_proj_dim == mid_channels(), "add-after-projection needs "
                     "hint_proj_dim == mid channels (", mid_channels(), "), got ",
                     hint_proj_dim);
      }
    }
  }
};

template <typename S>
struct GeneratorOutputIdsT {
  int g_f = -1;
  int g_g1 = -1;  // -1 when guide decoders are disabled
  int g_g2 = -1;
};

// Final output plus the two guide outputs (undefined tensors when guides
// are disabled).
template <typename S>
struct GeneratorOutputT {
  TensorT<S> g_f, g_g1, g_g2;
};
using GeneratorOutput = GeneratorOutputT<float>;

template <typename S>
class GeneratorNetT {
 public:
  GeneratorNetT(const GeneratorNetT&) = delete;
  GeneratorNetT& operator=(const GeneratorNetT&) = delete;

  explicit GeneratorNetT(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed_combine(seed, 0x67656e)); // "gen" stream
    const double lr_slope = 0.2;

    encoder_.resize(static_cast<size_t>(cfg.depth));
    int64_t prev = cfg.in_channels;
    for (int i = 0; i < cfg.depth; ++i) {
      int64_t ch = cfg.channels_at(i);
      encoder_[i].conv_a.build("encoder." + std::to_string(i) + ".conv_a",
                               ParamGroup::kEncoder, prev, ch, 3, 1, 1, rng, lr_slope);
      encoder_[i].conv_b.build("encoder." + std::to_string(i) + ".conv_b",
                               ParamGroup::kEncoder, ch, ch, 3, 2, 1, rng, lr_slope);
      prev = ch;
    }

    if (cfg.use_hint) {
      hint_proj_.build("hint_proj", ParamGroup::kHintProj, cfg.hint_dim,
                       cfg.resolved_hint_proj_dim(), rng);
      if (cfg.hint_mode == HintMode::kBroadcastConcat) {
        hint_fuse_.build("mid.fuse", ParamGroup::kMid,
                         cfg.mid_channels() + cfg.resolved_hint_proj_dim(),
                         cfg.mid_channels(), 3, 1, 1, rng, lr_slope);
      }
    }

    mid_.resize(static_cast<size_t>(cfg.mid_blocks));
    for (int i = 0; i < cfg.mid_blocks; ++i) {
      std::string base = "mid." + std::to_string(i);
      mid_[i].conv_a.build(base + ".conv_a", ParamGroup::kMid, cfg.mid_channels(),
                           cfg.mid_channels(), 3, 1, 1, rng, lr_slope);
      mid_[i].conv_b.build(base + ".conv_b", ParamGroup::kMid, cfg.mid_channels(),
                           cfg.mid_channels(), 3, 1, 1, rng, lr_slope);
    }

    decoder_.resize(static_cast<size_t>(cfg.depth));
    prev = cfg.mid_channels();
    for (int j = cfg.depth - 1; j >= 0; --j) {
      int64_t ch = cfg.channels_at(j);
      std::string base = "decoder." + std::to_string(j);
      decoder_[j].conv_a.build(base + ".conv_a", ParamGroup::kDecoder, prev, ch, 3, 1, 1,
                               rng);
      int64_t in_b = cfg.skips_enabled ? 2 * ch : ch;
      decoder_[j].conv_b.build(base + ".conv_b", ParamGroup::kDecoder, in_b, ch, 3, 1, 1,
                               rng);
      prev = ch;
    }
    final_conv_.build("decoder.out", ParamGroup::kDecoder, cfg.channels_at(0),
                      cfg.out_channels, 3, 1, 1, rng);

    if (cfg.guide_decoders_enabled) {
      build_guide(guide1_, "guide1", ParamGroup::kGuide1, cfg.guide1_channels(), rng);
      build_guide(guide2_, "guide2", ParamGroup::kGuide2, cfg.out_channels, rng);
    }

    collect_params();
  }

  const GeneratorConfig& config() const { return cfg_; }
  const std::vector<Param<S>*>& params() const { return params_; }
  std::vector<Param<S>*>& params() { return params_; }
  int64_t parameter_count() const { return param_count(params_); }

  void set_trainable(bool t) {
    for (Param<S>* p : params_) p->trainable = t;
  }

  // sketch: (N, in_channels, S, S); hint: (N, hint_dim) already normalized,
  // ignored when use_hint is off (pass -1).
  GeneratorOutputIdsT<S> forward(Tape<S>& tape, int sketch, int hint) {
    const TensorT<S>& x = tape.value(sketch);
    GP_CHECK_SHAPE(x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
                       x.dim(2) == cfg_.input_size && x.dim(3) == cfg_.input_size,
                   "generator input must be (N,", cfg_.in_channels, ",",
                   cfg_.input_size, ",", cfg_.input_size, "), got ",
                   shape_str(x.shape()));
    const double slope = 0.2;

    std::vector<int> skips(static_cast<size_t>(cfg_.depth));
    int h = sketch;
    for (int i = 0; i < cfg_.depth; ++i) {
      int a = tape.leaky_relu(encoder_[i].conv_a.forward(tape, h), S(slope));
      skips[static_cast<size_t>(i)] = a;
      h = tape.leaky_relu(encoder_[i].conv_b.forward(tape, a), S(slope));
    }
    int mid_entry = h;  // guide decoder 1 taps here, before hint injection

    GeneratorOutputIdsT<S> out;
    if (cfg_.guide_decoders_enabled) out.g_g1 = run_guide(tape, guide1_, mid_entry);

    if (cfg_.use_hint) {
      const TensorT<S>& hv = tape.value(hint);
      GP_CHECK_SHAPE(hv.rank() == 2 && hv.dim(1) == cfg_.hint_dim, "hint must be (N,",
                     cfg_.hint_dim, "), got ", shape_str(hv.shape()));
      h = inject(tape, mid_entry, hint);
      if (cfg_.hint_mode == HintMode::kBroadcastConcat)
        h = tape.leaky_relu(hint_fuse_.forward(tape, h), S(slope));
    }
    for (int i = 0; i < cfg_.mid_blocks; ++i) {
      int a = tape.leaky_relu(mid_[i].conv_a.forward(tape, h), S(slope));
      int b = mid_[i].conv_b.forward(tape, a);
      h = tape.leaky_relu(tape.add(h, b), S(slope));
    }
    int mid_exit = h;  // guide decoder 2 taps here
    if (cfg_.guide_decoders_enabled) out.g_g2 = run_guide(tape, guide2_, mid_exit);

    int d = mid_exit;
    for (int j = cfg_.depth - 1; j >= 0; --j) {
      d = tape.upsample2(d);
      d = tape.relu(decoder_[j].conv_a.forward(tape, d));
      if (cfg_.skips_enabled) d = tape.concat_channels(d, skips[static_cast<size_t>(j)]);
      d = tape.relu(decoder_[j].conv_b.forward(tape, d));
    }
    out.g_f = tape.sigmoid(final_conv_.forward(tape, d));
    return out;
  }

  // Projects the hint and merges it into the mid features at every spatial
  // position. Concat mode returns (N, mid + hint_proj_dim, s, s); add mode
  // keeps the channel count. The fuse conv that follows in concat mode is
  // part of the mid stack, not of the injection.
  int inject(Tape<S>& tape, int mid_features, int hint) {
    // note: node references go stale as ops are pushed; copy dims up front
    const int64_t mid_ch = tape.value(mid_features).dim(1);
    const int64_t mh = tape.value(mid_features).dim(2);
    const int64_t mw = tape.value(mid_features).dim(3);
    int proj = hint_proj_.forward(tape, hint);
    if (cfg_.hint_mode == HintMode::kAddAfterProjection) {
      GP_CHECK_SHAPE(tape.value(proj).dim(1) == mid_ch,
                     "hint add mode: projection width ", tape.value(proj).dim(1),
                     " != mid channels ", mid_ch);
      return tape.add(mid_features, tape.broadcast_hw(proj, mh, mw));
    }
    return tape.concat_channels(mid_features, tape.broadcast_hw(proj, mh, mw));
  }

  // Convenience forward on plain tensors (no gradients).
  GeneratorOutputT<S> evaluate(const TensorT<S>& sketch, const TensorT<S>& hint) {
    Tape<S> tape;
    bool trainable = params_[0]->trainable;
    set_trainable(false);
    int x = tape.input(sketch);
    int hid = cfg_.use_hint ? tape.input(hint) : -1;
    GeneratorOutputIdsT<S> ids = forward(tape, x, hid);
    set_trainable(trainable);
    GeneratorOutputT<S> out;
    out.g_f = tape.value(ids.g_f);
    if (ids.g_g1 >= 0) out.g_g1 = tape.value(ids.g_g1);
    if (ids.g_g2 >= 0) out.g_g2 = tape.value(ids.g_g2);
    return out;
  }

 private:
  struct EncLevel {
    Conv2dLayer<S> conv_a, conv_b;
  };
  struct ResBlock {
    Conv2dLayer<S> conv_a, conv_b;
  };
  struct DecLevel {
    Conv2dLayer<S> conv_a, conv_b;
  };
  struct GuideDecoder {
    std::vector<Conv2dLayer<S>> convs;
    Conv2dLayer<S> out_conv;
  };

  void build_guide(GuideDecoder& g, const std::string& name, ParamGroup group,
                   int64_t out_ch, Rng& rng) {
    g.convs.resize(static_cast<size_t>(cfg_.depth));
    int64_t prev = cfg_.mid_channels();
    for (int j = cfg_.depth - 1; j >= 0; --j) {
      int64_t ch = cfg_.guide_channels_at(j);
      g.convs[j].build(name + "." + std::to_string(j), group, prev, ch, 3, 1, 1, rng);
      prev = ch;
    }
    g.out_conv.build(name + ".out", group, cfg_.guide_channels_at(0), out_ch, 3, 1, 1,
                     rng);
  }

  int run_guide(Tape<S>& tape, GuideDecoder& g, int features) {
    int h = features;
    for (int j = cfg_.depth - 1; j >= 0; --j) {
      h = tape.upsample2(h);
      h = tape.relu(g.convs[static_cast<size_t>(j)].forward(tape, h));
    }
    return tape.sigmoid(g.out_conv.forward(tape, h));
  }

  void collect_params() {
    for (auto& l : encoder_) {
      l.conv_a.collect(params_);
      l.conv_b.collect(params_);
    }
    if (cfg_.use_hint) {
      hint_proj_.collect(params_);
      if (cfg_.hint_mode == HintMode::kBroadcastConcat) hint_fuse_.collect(params_);
    }
    for (auto& b : mid_) {
      b.conv_a.collect(params_);
      b.conv_b.collect(params_);
    }
    for (auto& l : decoder_) {
      l.conv_a.collect(params_);
      l.conv_b.collect(params_);
    }
    final_conv_.collect(params_);
    if (cfg_.guide_decoders_enabled) {
      for (auto& c : guide1_.convs) c.collect(params_);
      guide1_.out_conv.collect(params_);
      for (auto& c : guide2_.convs) c.collect(params_);
      guide2_.out_conv.collect(params_);
    }
  }

  GeneratorConfig cfg_;
  std::vector<EncLevel> encoder_;
  DenseLayer<S> hint_proj_;
  Conv2dLayer<S> hint_fuse_;
  std::vector<ResBlock> mid_;
  std::vector<DecLevel> decoder_;
  Conv2dLayer<S> final_conv_;
  GuideDecoder guide1_, guide2_;
  std::vector<Param<S>*> params_;
};

using GeneratorNet = GeneratorNetT<float>;

template <typename S = float>
std::unique_ptr<GeneratorNetT<S>> build_generator(const GeneratorConfig& cfg,
                                                  uint64_t seed) {
  return std::make_unique<GeneratorNetT<S>>(cfg, seed);
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_GENERATOR_HPP_
