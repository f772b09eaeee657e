#ifndef GUIDEPAINT_TRAINING_HPP_
#define GUIDEPAINT_TRAINING_HPP_

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "guidepaint/adam.hpp"
#include "guidepaint/checkpoint.hpp"
#include "guidepaint/config_json.hpp"
#include "guidepaint/data.hpp"
#include "guidepaint/discriminator.hpp"
#include "guidepaint/generator.hpp"
#include "guidepaint/losses.hpp"
#include "guidepaint/metrics.hpp"
#include "guidepaint/style_encoder.hpp"

namespace guidepaint {

// dcgan during warmup, then alternate between the two losses every
// alternate_every steps (acgan first).
struct ShiftSchedule {
  int64_t warmup_steps = 1000;
  int64_t alternate_every = 500;

  void validate() const {
    GP_CHECK_CFG(warmup_steps >= 0, "warmup_steps must be >= 0, got ", warmup_steps);
    GP_CHECK_CFG(alternate_every >= 1, "alternate_every must be >= 1, got ",
                 alternate_every);
  }
};

inline LossMode select_loss_mode(int64_t step, const ShiftSchedule& schedule) {
  GP_CHECK_CFG(step >= 0, "step must be >= 0, got ", step);
  if (step < schedule.warmup_steps) return LossMode::kDcGan;
  int64_t phase = (step - schedule.warmup_steps) / schedule.alternate_every;
  return phase % 2 == 0 ? LossMode::kAcGan : LossMode::kDcGan;
}

struct TrainConfig {
  int64_t steps = 10000;
  int64_t batch_size = 4;
  AdamConfig optimizer;  // Adam(2e-4, 0.5, 0.999)
  LossWeights loss_weights;
  ShiftSchedule shift;
  uint64_t seed = 1;
  int64_t checkpoint_interval = 1000;

  void validate() const {
    GP_CHECK_CFG(steps >= 0, "steps must be >= 0, got ", steps);
    GP_CHECK_CFG(batch_size >= 1, "batch_size must be >= 1, got ", batch_size);
    GP_CHECK_CFG(checkpoint_interval >= 0, "checkpoint_interval must be >= 0, got ",
                 checkpoint_interval);
    loss_weights.validate();
    shift.validate();
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"steps", c.steps},
       {"batch_size", c.batch_size},
       {"lr", c.optimizer.lr},
       {"beta1", c.optimizer.beta1},
       {"beta2", c.optimizer.beta2},
       {"loss_weights", c.loss_weights},
       {"warmup_steps", c.shift.warmup_steps},
       {"alternate_every", c.shift.alternate_every},
       {"seed", c.seed},
       {"checkpoint_interval", c.checkpoint_interval}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.optimizer.lr = j.value("lr", c.optimizer.lr);
  c.optimizer.beta1 = j.value("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = j.value("beta2", c.optimizer.beta2);
  if (j.contains("loss_weights")) c.loss_weights = j.at("loss_weights");
  c.shift.warmup_steps = j.value("warmup_steps", c.shift.warmup_steps);
  c.shift.alternate_every = j.value("alternate_every", c.shift.alternate_every);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
}

// Adversarial training state: generator + discriminator under optimization,
// style encoder frozen throughout. One discriminator update then one
// generator update per step; batches are a pure function of (seed, step).
template <typename S>
class TrainerT {
 public:
  TrainerT(const GeneratorConfig& gen_cfg, const DiscriminatorConfig& disc_cfg,
           std::unique_ptr<StyleEncoderNetT<S>> encoder, const TrainConfig& cfg,
           const Dataset* data)
      : cfg_(cfg),
        data_(data),
        generator_(std::make_unique<GeneratorNetT<S>>(gen_cfg, cfg.seed)),
        discriminator_(std::make_unique<DiscriminatorNetT<S>>(disc_cfg, cfg.seed)),
        encoder_(std::move(encoder)) {
    cfg.validate();
    validate_wiring();
    encoder_->set_trainable(false);
    opt_g_ = std::make_unique<Adam<S>>(generator_->params(), cfg.optimizer);
    opt_d_ = std::make_unique<Adam<S>>(discriminator_->params(), cfg.optimizer);
  }

  const TrainConfig& config() const { return cfg_; }
  int64_t step_count() const { return step_; }
  GeneratorNetT<S>& generator() { return *generator_; }
  DiscriminatorNetT<S>& discriminator() { return *discriminator_; }
  StyleEncoderNetT<S>& encoder() { return *encoder_; }
  uint64_t encoder_hash() const { return params_hash(encoder_->params()); }
  uint64_t generator_hash() const { return params_hash(generator_->params()); }
  uint64_t discriminator_hash() const { return params_hash(discriminator_->params()); }
  const std::vector<StepMetrics>& history() const { return history_; }

  StepMetrics step() {
    const LossMode mode = select_loss_mode(step_, cfg_.shift);
    Dataset::Batch batch = data_->make_batch(cfg_.seed, step_, cfg_.batch_size);
    StyleHintT<S> hint = normalize_hint(extract_hint(*encoder_, batch.paintings));

    StepMetrics m;
    m.step = step_;
    m.mode = mode;
    discriminator_update(batch, hint, mode, m);
    generator_update(batch, hint, mode, m);
    check_finite(m);
    history_.push_back(m);
    ++step_;
    return m;
  }

  // One discriminator update on (real y, fake G_f); no generator or
  // encoder parameter moves.
  void discriminator_update(const Dataset::Batch& batch, const StyleHintT<S>& hint,
                            LossMode mode, StepMetrics& m) {
    const DiscVariant head =
        mode == LossMode::kAcGan ? DiscVariant::kAcGan : DiscVariant::kDcGan;
    GeneratorOutputT<S> fake = generator_->evaluate(batch.sketches, hint.values);
    opt_d_->zero_grads();
    Tape<S> tape;
    int d_real = discriminator_->forward(tape, tape.constant(batch.paintings), head);
    int d_fake = discriminator_->forward(tape, tape.constant(fake.g_f), head);
    GanLossIds<S> gan =
        mode == LossMode::kAcGan
            ? acgan_loss_tape(tape, d_real, d_fake, tape.constant(squash_hint01(hint)))
            : dcgan_loss_tape(tape, d_real, d_fake);
    tape.backward(gan.d_loss);
    m.d_loss = static_cast<double>(tape.value(gan.d_loss)[0]);
    m.grad_norms["discriminator"] =
        group_grad_norm(discriminator_->params(), ParamGroup::kDiscriminator);
    opt_d_->step();
  }

  // One generator update on Eq. 5; discriminator parameters stay fixed.
  void generator_update(const Dataset::Batch& batch, const StyleHintT<S>& hint,
                        LossMode mode, StepMetrics& m) {
    const DiscVariant head =
        mode == LossMode::kAcGan ? DiscVariant::kAcGan : DiscVariant::kDcGan;
    opt_g_->zero_grads();
    discriminator_->set_trainable(false);
    Tape<S> tape;
    int sketches = tape.constant(batch.sketches);
    int hint_id = tape.constant(hint.values);
    GeneratorOutputIdsT<S> out = generator_->forward(tape, sketches, hint_id);
    L1TermIds<S> l1 =
        l1_composite_tape(tape, out, tape.constant(batch.paintings), cfg_.loss_weights,
                          generator_->config().guide1_grayscale);
    int d_fake = discriminator_->forward(tape, out.g_f, head);
    int g_gan = gan_generator_loss_tape(tape, d_fake);
    int objective = generator_objective_tape(tape, l1.total, g_gan, cfg_.loss_weights);
    tape.backward(objective);
    discriminator_->set_trainable(true);

    m.l1_f = value_of(tape, l1.f);
    m.l1_g1 = value_of(tape, l1.g1);
    m.l1_g2 = value_of(tape, l1.g2);
    m.l1_total = value_of(tape, l1.total);
    m.g_gan = value_of(tape, g_gan);
    m.g_objective = value_of(tape, objective);
    for (ParamGroup g :
         {ParamGroup::kEncoder, ParamGroup::kMid, ParamGroup::kDecoder,
          ParamGroup::kGuide1, ParamGroup::kGuide2, ParamGroup::kHintProj}) {
      m.grad_norms[param_group_name(g)] = group_grad_norm(generator_->params(), g);
    }
    opt_g_->step();
  }

  Dataset::Batch batch_for_step(int64_t step) const {
    return data_->make_batch(cfg_.seed, step, cfg_.batch_size);
  }

  StyleHintT<S> hint_for(const TensorT<S>& paintings) {
    return normalize_hint(extract_hint(*encoder_, paintings));
  }

  // Runs until cfg.steps, streaming metrics and writing interval
  // checkpoints ("<dir>/ckpt_<step>.nta") when a directory is given.
  void run(MetricsWriter* writer = nullptr, const std::string& checkpoint_dir = "") {
    while (step_ < cfg_.steps) {
      StepMetrics m = step();
      if (writer) writer->append(m);
      if (!checkpoint_dir.empty() && cfg_.checkpoint_interval > 0 &&
          (step_ % cfg_.checkpoint_interval == 0 || step_ == cfg_.steps)) {
        save_checkpoint(checkpoint_dir + "/ckpt_" + std::to_string(step_) + ".nta");
      }
    }
    if (writer) writer->flush();
  }

  void save_checkpoint(const std::string& path) const {
    TensorArchive a;
    a.meta["kind"] = "train_state";
    a.meta["step"] = step_;
    a.meta["train_config"] = cfg_;
    a.meta["generator_config"] = generator_->config();
    a.meta["discriminator_config"] = discriminator_->config();
    a.meta["encoder_config"] = encoder_->config();
    a.meta["adam_g_steps"] = opt_g_->step_count();
    a.meta["adam_d_steps"] = opt_d_->step_count();
    a.put_params("generator.", generator_->params());
    a.put_params("discriminator.", discriminator_->params());
    a.put_params("style_encoder.", encoder_->params());
    put_moments(a, "opt_g.", *opt_g_);
    put_moments(a, "opt_d.", *opt_d_);
    a.save(path);
  }

  static std::unique_ptr<TrainerT> load_checkpoint(const std::string& path,
                                                   const Dataset* data) {
    TensorArchive a = TensorArchive::load(path);
    if (a.meta.value("kind", "") != "train_state")
      throw IoError("'" + path + "' is not a training checkpoint");
    GeneratorConfig gen_cfg = a.meta.at("generator_config");
    DiscriminatorConfig disc_cfg = a.meta.at("discriminator_config");
    StyleEncoderConfig enc_cfg = a.meta.at("encoder_config");
    TrainConfig cfg = a.meta.at("train_config");
    auto trainer = std::make_unique<TrainerT>(
        gen_cfg, disc_cfg, std::make_unique<StyleEncoderNetT<S>>(enc_cfg, 0), cfg,
        data);
    a.load_params("generator.", trainer->generator_->params());
    a.load_params("discriminator.", trainer->discriminator_->params());
    a.load_params("style_encoder.", trainer->encoder_->params());
    load_moments(a, "opt_g.", *trainer->opt_g_);
    load_moments(a, "opt_d.", *trainer->opt_d_);
    trainer->opt_g_->set_step_count(a.meta.value("adam_g_steps", int64_t{0}));
    trainer->opt_d_->set_step_count(a.meta.value("adam_d_steps", int64_t{0}));
    trainer->step_ = a.meta.value("step", int64_t{0});
    return trainer;
  }

  // Raises ConfigError naming every differing field; used when a resume run
  // supplies its own config.
  static void ensure_checkpoint_matches(const std::string& path,
                                        const GeneratorConfig& expected) {
    TensorArchive a = TensorArchive::load(path);
    nlohmann::json found = a.meta.value("generator_config", nlohmann::json::object());
    nlohmann::json want = expected;
    auto diffs = config_diff(found, want);
    if (!diffs.empty()) {
      std::string fields;
      for (const auto& f : diffs) fields += (fields.empty() ? "" : ", ") + f;
      throw ConfigError("checkpoint generator config differs in: " + fields);
    }
  }

 private:
  void validate_wiring() {
    if (generator_->config().use_hint) {
      GP_CHECK_CFG(encoder_->config().output_dim() == generator_->config().hint_dim,
                   "style encoder output width ", encoder_->config().output_dim(),
                   " != generator hint_dim ", generator_->config().hint_dim);
      GP_CHECK_CFG(discriminator_->config().head_dim ==
                       encoder_->config().output_dim(),
                   "discriminator head_dim ", discriminator_->config().head_dim,
                   " != style encoder output width ",
                   encoder_->config().output_dim());
    }
    GP_CHECK_CFG(discriminator_->config().input_size == generator_->config().input_size,
                 "discriminator input_size ", discriminator_->config().input_size,
                 " != generator input_size ", generator_->config().input_size);
    GP_CHECK_CFG(data_ != nullptr && data_->size() > 0, "training dataset is empty");
    GP_CHECK_CFG(data_->config().size == generator_->config().input_size,
                 "dataset image size ", data_->config().size,
                 " != generator input_size ", generator_->config().input_size);
  }

  static double value_of(const Tape<S>& tape, int id) {
    return id >= 0 ? static_cast<double>(tape.value(id)[0]) : 0.0;
  }

  void check_finite(const StepMetrics& m) const {
    auto bad = [&](double v, const char* term) {
      if (!std::isfinite(v))
        throw TrainError(strcat_args("NaN loss at step ", m.step, ": term '", term,
                                     "' is not finite"));
    };
    bad(m.l1_f, "l1_f");
    bad(m.l1_g1, "l1_g1");
    bad(m.l1_g2, "l1_g2");
    bad(m.l1_total, "l1_total");
    bad(m.d_loss, "d_loss");
    bad(m.g_gan, "g_gan");
    bad(m.g_objective, "g_objective");
  }

  static void put_moments(TensorArchive& a, const std::string& prefix,
                          const Adam<S>& opt) {
    auto& mut = const_cast<Adam<S>&>(opt);
    for (size_t i = 0; i < opt.params().size(); ++i) {
      a.put(prefix + "m." + opt.params()[i]->name, mut.moment1(i));
      a.put(prefix + "v." + opt.params()[i]->name, mut.moment2(i));
    }
  }

  static void load_moments(const TensorArchive& a, const std::string& prefix,
                           Adam<S>& opt) {
    for (size_t i = 0; i < opt.params().size(); ++i) {
      opt.moment1(i) = a.get_checked<S>(prefix + "m." + opt.params()[i]->name,
                                        opt.params()[i]->value.shape());
      opt.moment2(i) = a.get_checked<S>(prefix + "v." + opt.params()[i]->name,
                                        opt.params()[i]->value.shape());
    }
  }

  TrainConfig cfg_;
  const Dataset* data_;
  std::unique_ptr<GeneratorNetT<S>> generator_;
  std::unique_ptr<DiscriminatorNetT<S>> discriminator_;
  std::unique_ptr<StyleEncoderNetT<S>> encoder_;
  std::unique_ptr<Adam<S>> opt_g_, opt_d_;
  int64_t step_ = 0;
  std::vector<StepMetrics> history_;
};

using Trainer = TrainerT<float>;

}  // namespace guidepaint

#endif  // GUIDEPAINT_TRAINING_HPP_
