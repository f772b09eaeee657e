#ifndef GUIDEPAINT_DISCRIMINATOR_HPP_
#define GUIDEPAINT_DISCRIMINATOR_HPP_

#include <memory>
#include <string>
#include <vector>

#include "guidepaint/generator.hpp"
#include "guidepaint/layers.hpp"

namespace guidepaint {

// acgan: F raw outputs matched against the style vector of real inputs.
// dcgan: single raw real/fake output.
enum class DiscVariant { kAcGan, kDcGan };

inline const char* disc_variant_name(DiscVariant v) {
  return v == DiscVariant::kAcGan ? "acgan" : "dcgan";
}

struct DiscriminatorConfig {
  DiscVariant variant = DiscVariant::kAcGan;
  int64_t input_size = 64;
  int64_t in_channels = 3;
  int64_t base_channels = 16;
  int64_t head_dim = 256;  // acgan head width; must equal the style encoder's output

  int trunk_levels() const {
    int levels = 0;
    for (int64_t s = input_size; s > 4; s /= 2) ++levels;
    return levels;
  }
  int64_t trunk_channels_at(int level) const {
    return std::min(base_channels << level, base_channels * 8);
  }

  void validate() const {
    GP_CHECK_CFG(is_power_of_two(input_size) && input_size >= 8,
                 "discriminator input_size must be a power of two >= 8, got ",
                 input_size);
    GP_CHECK_CFG(base_channels >= 1, "base_channels must be >= 1, got ", base_channels);
    GP_CHECK_CFG(head_dim >= 1, "head_dim must be >= 1, got ", head_dim);
  }
};

// Shared conv trunk with both heads built; the variant only selects which
// head forward() reads by default. Loss shifting swaps heads, not networks.
template <typename S>
class DiscriminatorNetT {
 public:
  DiscriminatorNetT(const DiscriminatorNetT&) = delete;
  DiscriminatorNetT& operator=(const DiscriminatorNetT&) = delete;

  explicit DiscriminatorNetT(const DiscriminatorConfig& cfg, uint64_t seed)
      : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed_combine(seed, 0x64697363)); // "disc" stream
    const double slope = 0.2;
    int levels = cfg.trunk_levels();
    trunk_.resize(static_cast<size_t>(levels));
    int64_t prev = cfg.in_channels;
    for (int i = 0; i < levels; ++i) {
      int64_t ch = cfg.trunk_channels_at(i);
      trunk_[i].build("trunk." + std::to_string(i), ParamGroup::kDiscriminator, prev, ch,
                      3, 2, 1, rng, slope);
      prev = ch;
    }
    int64_t spatial = cfg.input_size >> levels;
    flat_dim_ = prev * spatial * spatial;
    acgan_head_.build("head.acgan", ParamGroup::kDiscriminator, flat_dim_, cfg.head_dim,
                      rng);
    dcgan_head_.build("head.dcgan", ParamGroup::kDiscriminator, flat_dim_, 1, rng);
    for (auto& c : trunk_) c.collect(params_);
    acgan_head_.collect(params_);
    dcgan_head_.collect(params_);
  }

  const DiscriminatorConfig& config() const { return cfg_; }
  const std::vector<Param<S>*>& params() const { return params_; }
  std::vector<Param<S>*>& params() { return params_; }
  int64_t parameter_count() const { return param_count(params_); }

  void set_trainable(bool t) {
    for (Param<S>* p : params_) p->trainable = t;
  }

  // Raw (pre-activation) scores: (N, head_dim) for acgan, (N, 1) for dcgan.
  int forward(Tape<S>& tape, int image, DiscVariant head) {
    const TensorT<S>& x = tape.value(image);
    GP_CHECK_SHAPE(x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
                       x.dim(2) == cfg_.input_size && x.dim(3) == cfg_.input_size,
                   "discriminator input must be (N,", cfg_.in_channels, ",",
                   cfg_.input_size, ",", cfg_.input_size, "), got ",
                   shape_str(x.shape()));
    int h = image;
    for (auto& c : trunk_) h = tape.leaky_relu(c.forward(tape, h), S(0.2));
    int flat = tape.flatten(h);
    return head == DiscVariant::kAcGan ? acgan_head_.forward(tape, flat)
                                       : dcgan_head_.forward(tape, flat);
  }

  int forward(Tape<S>& tape, int image) { return forward(tape, image, cfg_.variant); }

  TensorT<S> evaluate(const TensorT<S>& image, DiscVariant head) {
    Tape<S> tape;
    bool trainable = params_[0]->trainable;
    set_trainable(false);
    int out = forward(tape, tape.input(image), head);
    set_trainable(trainable);
    return tape.value(out);
  }

  TensorT<S> evaluate(const TensorT<S>& image) { return evaluate(image, cfg_.variant); }

 private:
  DiscriminatorConfig cfg_;
  std::vector<Conv2dLayer<S>> trunk_;
  DenseLayer<S> acgan_head_, dcgan_head_;
  int64_t flat_dim_ = 0;
  std::vector<Param<S>*> params_;
};

using DiscriminatorNet = DiscriminatorNetT<float>;

template <typename S = float>
std::unique_ptr<DiscriminatorNetT<S>> build_discriminator(const DiscriminatorConfig& cfg,
                                                          uint64_t seed) {
  return std::make_unique<DiscriminatorNetT<S>>(cfg, seed);
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_DISCRIMINATOR_HPP_
