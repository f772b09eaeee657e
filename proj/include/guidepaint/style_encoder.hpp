#ifndef GUIDEPAINT_STYLE_ENCODER_HPP_
#define GUIDEPAINT_STYLE_ENCODER_HPP_

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "guidepaint/adam.hpp"
#include "guidepaint/checkpoint.hpp"
#include "guidepaint/layers.hpp"

namespace guidepaint {

// Global style vector V(.). `normalized` distinguishes raw encoder output
// from the z-scored form the generator consumes.
template <typename S>
struct StyleHintT {
  TensorT<S> values;  // (N, F)
  bool normalized = false;
};
using StyleHint = StyleHintT<float>;

// Per-row z-score over the F coordinates, epsilon 1e-8 in the denominator.
// A constant row maps to the zero vector. Population std (divide by F).
template <typename S>
StyleHintT<S> normalize_hint(const StyleHintT<S>& raw) {
  const TensorT<S>& v = raw.values;
  GP_CHECK_SHAPE(v.rank() == 2, "hint must be (N,F), got ", shape_str(v.shape()));
  const int64_t N = v.dim(0), F = v.dim(1);
  StyleHintT<S> out{TensorT<S>({N, F}), true};
  for (int64_t n = 0; n < N; ++n) {
    double mean = 0;
    for (int64_t f = 0; f < F; ++f) mean += static_cast<double>(v.at(n, f));
    mean /= static_cast<double>(F);
    double var = 0;
    for (int64_t f = 0; f < F; ++f) {
      double d = static_cast<double>(v.at(n, f)) - mean;
      var += d * d;
    }
    double denom = std::sqrt(var / static_cast<double>(F)) + 1e-8;
    for (int64_t f = 0; f < F; ++f)
      out.values.at(n, f) =
          static_cast<S>((static_cast<double>(v.at(n, f)) - mean) / denom);
  }
  return out;
}

struct StyleEncoderConfig {
  int64_t input_size = 64;
  int64_t in_channels = 3;
  int64_t base_channels = 16;
  int64_t hint_dim = 256;        // width of the pre-activation feature layer
  bool extra_projection = false;  // extra dense hint_dim -> hint_dim/2

  int trunk_levels() const {
    int levels = 0;
    for (int64_t s = input_size; s > 1; s /= 2) ++levels;
    return levels;
  }
  int64_t trunk_channels_at(int level) const {
    return std::min(base_channels << level, base_channels * 4);
  }
  int64_t output_dim() const { return extra_projection ? hint_dim / 2 : hint_dim; }

  void validate() const {
    GP_CHECK_CFG(is_power_of_two(input_size) && input_size >= 4,
                 "style encoder input_size must be a power of two >= 4, got ",
                 input_size);
    GP_CHECK_CFG(hint_dim > 0, "hint_dim must be > 0, got ", hint_dim);
    GP_CHECK_CFG(!extra_projection || hint_dim % 2 == 0,
                 "extra_projection needs an even hint_dim, got ", hint_dim);
    GP_CHECK_CFG(base_channels >= 1, "base_channels must be >= 1, got ", base_channels);
  }
};

// Strided conv trunk down to 1x1, then a dense feature layer whose output
// is taken before any nonlinearity.
template <typename S>
class StyleEncoderNetT {
 public:
  StyleEncoderNetT(const StyleEncoderNetT&) = delete;
  StyleEncoderNetT& operator=(const StyleEncoderNetT&) = delete;

  explicit StyleEncoderNetT(const StyleEncoderConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed_combine(seed, 0x656e63)); // "enc" stream
    int levels = cfg.trunk_levels();
    trunk_.resize(static_cast<size_t>(levels));
    int64_t prev = cfg.in_channels;
    for (int i = 0; i < levels; ++i) {
      int64_t ch = cfg.trunk_channels_at(i);
      trunk_[i].build("trunk." + std::to_string(i), ParamGroup::kStyleEncoder, prev, ch,
                      3, 2, 1, rng, 0.2);
      prev = ch;
    }
    feature_.build("feature", ParamGroup::kStyleEncoder, prev, cfg.hint_dim, rng);
    if (cfg.extra_projection) {
      projection_.build("projection", ParamGroup::kStyleEncoder, cfg.hint_dim,
                        cfg.output_dim(), rng);
    }
    for (auto& c : trunk_) c.collect(params_);
    feature_.collect(params_);
    if (cfg.extra_projection) projection_.collect(params_);
  }

  const StyleEncoderConfig& config() const { return cfg_; }
  const std::vector<Param<S>*>& params() const { return params_; }
  std::vector<Param<S>*>& params() { return params_; }
  int64_t parameter_count() const { return param_count(params_); }
  uint64_t weights_hash() const { return params_hash(params_); }

  void set_trainable(bool t) {
    for (Param<S>* p : params_) p->trainable = t;
  }

  // Raw pre-activation hint, (N, output_dim).
  int forward(Tape<S>& tape, int image) {
    const TensorT<S>& x = tape.value(image);
    GP_CHECK_SHAPE(x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
                       x.dim(2) == cfg_.input_size && x.dim(3) == cfg_.input_size,
                   "style encoder input must be (N,", cfg_.in_channels, ",",
                   cfg_.input_size, ",", cfg_.input_size, "), got ",
                   shape_str(x.shape()));
    int h = image;
    for (auto& c : trunk_) h = tape.leaky_relu(c.forward(tape, h), S(0.2));
    int flat = tape.flatten(h);
    int feat = feature_.forward(tape, flat);
    if (cfg_.extra_projection) {
      // the feature layer output feeds the projection pre-activation as well
      feat = projection_.forward(tape, feat);
    }
    return feat;
  }

 private:
  StyleEncoderConfig cfg_;
  std::vector<Conv2dLayer<S>> trunk_;
  DenseLayer<S> feature_;
  DenseLayer<S> projection_;
  std::vector<Param<S>*> params_;

  template <typename S2>
  friend class StyleEncoderTrainerT;
};

using StyleEncoderNet = StyleEncoderNetT<float>;

template <typename S = float>
std::unique_ptr<StyleEncoderNetT<S>> build_style_encoder(const StyleEncoderConfig& cfg,
                                                         uint64_t seed) {
  return std::make_unique<StyleEncoderNetT<S>>(cfg, seed);
}

// V(image): raw (pre-activation) style hint for a batch of images.
template <typename S>
StyleHintT<S> extract_hint(StyleEncoderNetT<S>& encoder, const TensorT<S>& images) {
  Tape<S> tape;
  bool trainable = encoder.params()[0]->trainable;
  encoder.set_trainable(false);
  int out = encoder.forward(tape, tape.input(images));
  encoder.set_trainable(trainable);
  return StyleHintT<S>{tape.value(out).clone(), false};
}

template <typename S>
void save_encoder_weights(const StyleEncoderNetT<S>& encoder, const std::string& path) {
  TensorArchive a;
  a.meta["kind"] = "style_encoder";
  a.meta["config"] = {{"input_size", encoder.config().input_size},
                      {"in_channels", encoder.config().in_channels},
                      {"base_channels", encoder.config().base_channels},
                      {"hint_dim", encoder.config().hint_dim},
                      {"extra_projection", encoder.config().extra_projection}};
  a.put_params("", encoder.params());
  a.save(path);
}

// Loads weights into a freshly built encoder; the archive's config record
// decides the architecture.
template <typename S = float>
std::unique_ptr<StyleEncoderNetT<S>> load_encoder_weights(const std::string& path) {
  TensorArchive a = TensorArchive::load(path);
  if (!a.meta.contains("config"))
    throw IoError("archive '" + path + "' has no style-encoder config record");
  const auto& c = a.meta["config"];
  StyleEncoderConfig cfg;
  cfg.input_size = c.value("input_size", cfg.input_size);
  cfg.in_channels = c.value("in_channels", cfg.in_channels);
  cfg.base_channels = c.value("base_channels", cfg.base_channels);
  cfg.hint_dim = c.value("hint_dim", cfg.hint_dim);
  cfg.extra_projection = c.value("extra_projection", cfg.extra_projection);
  auto enc = build_style_encoder<S>(cfg, 0);
  a.load_params("", enc->params());
  return enc;
}

// Multinomial logistic-regression probe: fit on (train) hints, report
// held-out accuracy. Deliberately independent of the encoder internals.
template <typename S>
double linear_probe_accuracy(const TensorT<S>& train_hints,
                             const std::vector<int>& train_labels,
                             const TensorT<S>& test_hints,
                             const std::vector<int>& test_labels, int num_classes,
                             int iters = 300, double lr = 0.05) {
  const int64_t F = train_hints.dim(1);
  DenseLayer<S> probe;
  Rng rng(12345);
  probe.build("probe", ParamGroup::kOther, F, num_classes, rng);
  Adam<S> opt({&probe.w, &probe.b}, {lr, 0.9, 0.999, 1e-8});
  for (int it = 0; it < iters; ++it) {
    opt.zero_grads();
    Tape<S> tape;
    int logits = probe.forward(tape, tape.input(train_hints));
    int loss = tape.softmax_cross_entropy(logits, train_labels);
    tape.backward(loss);
    opt.step();
  }
  Tape<S> tape;
  probe.w.trainable = probe.b.trainable = false;
  int logits = probe.forward(tape, tape.input(test_hints));
  const TensorT<S>& l = tape.value(logits);
  int64_t correct = 0;
  for (int64_t n = 0; n < l.dim(0); ++n) {
    int best = 0;
    for (int k = 1; k < num_classes; ++k)
      if (l.at(n, k) > l.at(n, best)) best = k;
    if (best == test_labels[static_cast<size_t>(n)]) ++correct;
  }
  return l.dim(0) ? static_cast<double>(correct) / static_cast<double>(l.dim(0)) : 1.0;
}

struct EncoderTrainResult {
  double probe_accuracy = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
};

// Supervised pretraining of the style encoder on labeled images via a
// throwaway classifier head. The returned probe accuracy is measured on the
// held-out tail of the dataset.
template <typename S>
EncoderTrainResult train_style_encoder(StyleEncoderNetT<S>& encoder,
                                       const std::vector<TensorT<S>>& images,
                                       const std::vector<int>& labels, int num_classes,
                                       int epochs, uint64_t seed, int batch_size = 16,
                                       double lr = 1e-3, double holdout_fraction = 0.2) {
  GP_CHECK_CFG(images.size() == labels.size(), "train_style_encoder: ", images.size(),
               " images vs ", labels.size(), " labels");
  GP_CHECK_CFG(num_classes >= 1, "num_classes must be >= 1");
  const size_t n_total = images.size();
  const size_t n_hold = std::min(n_total, static_cast<size_t>(
      static_cast<double>(n_total) * holdout_fraction));
  const size_t n_train = n_total - n_hold;

  DenseLayer<S> head;
  Rng rng(seed_combine(seed, 0x68656164)); // "head" stream
  head.build("class_head", ParamGroup::kOther, encoder.config().output_dim(),
             num_classes, rng);
  std::vector<Param<S>*> all = encoder.params();
  head.collect(all);
  Adam<S> opt(all, {lr, 0.9, 0.999, 1e-8});

  EncoderTrainResult result;
  result.epochs_run = epochs;
  double last_loss = 0.0;
  if (n_train > 0) {
    for (int epoch = 0; epoch < epochs; ++epoch) {
      size_t steps = (n_train + static_cast<size_t>(batch_size) - 1) /
                     static_cast<size_t>(batch_size);
      for (size_t s = 0; s < steps; ++s) {
        int64_t bs = static_cast<int64_t>(
            std::min<size_t>(static_cast<size_t>(batch_size), n_train));
        TensorT<S> batch({bs, encoder.config().in_channels,
                          encoder.config().input_size, encoder.config().input_size});
        std::vector<int> batch_labels(static_cast<size_t>(bs));
        for (int64_t i = 0; i < bs; ++i) {
          size_t idx = static_cast<size_t>(
              seed_combine(seed, static_cast<uint64_t>(epoch) * 1000003 + s, // per-step draw
                           static_cast<uint64_t>(i)) %
              n_train);
          std::copy(images[idx].data(), images[idx].data() + images[idx].numel(),
                    batch.data() + i * images[idx].numel());
          batch_labels[static_cast<size_t>(i)] = labels[idx];
        }
        opt.zero_grads();
        Tape<S> tape;
        int feat = encoder.forward(tape, tape.input(batch));
        int logits = head.forward(tape, feat);
        int loss = tape.softmax_cross_entropy(logits, batch_labels);
        tape.backward(loss);
        opt.step();
        last_loss = static_cast<double>(tape.value(loss)[0]);
      }
    }
  }
  result.final_loss = last_loss;

  // probe on held-out hints (falls back to the train split if no holdout)
  auto stack_hints = [&](size_t begin, size_t end, std::vector<int>& out_labels) {
    int64_t count = static_cast<int64_t>(end - begin);
    TensorT<S> imgs({count, encoder.config().in_channels, encoder.config().input_size,
                     encoder.config().input_size});
    for (int64_t i = 0; i < count; ++i) {
      const auto& img = images[begin + static_cast<size_t>(i)];
      std::copy(img.data(), img.data() + img.numel(), imgs.data() + i * img.numel());
      out_labels.push_back(labels[begin + static_cast<size_t>(i)]);
    }
    return extract_hint(encoder, imgs).values;
  };
  std::vector<int> probe_train_labels, probe_test_labels;
  size_t fit_end = n_train > 0 ? n_train : n_total;
  TensorT<S> fit_hints = stack_hints(0, fit_end, probe_train_labels);
  TensorT<S> test_hints = n_hold > 0 ? stack_hints(n_train, n_total, probe_test_labels)
                                     : fit_hints;
  if (n_hold == 0) probe_test_labels = probe_train_labels;
  result.probe_accuracy = linear_probe_accuracy(fit_hints, probe_train_labels,
                                                test_hints, probe_test_labels,
                                                num_classes);
  return result;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_STYLE_ENCODER_HPP_
