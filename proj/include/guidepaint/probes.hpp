#ifndef GUIDEPAINT_PROBES_HPP_
#define GUIDEPAINT_PROBES_HPP_

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "guidepaint/plot.hpp"
#include "guidepaint/training.hpp"

namespace guidepaint {

// ---- gradient capture ----

// Per-group gradient L2 norms at one step. The mid/encoder ratio is the
// laziness signal: a starved mid stack shows a collapsing ratio while the
// encoder keeps receiving gradient through the skip path.
struct GradientReport {
  int64_t step = 0;
  std::map<std::string, double> group_norms;
  double ratio_mid_encoder = 0;
  double ratio_mid_decoder = 0;

  nlohmann::json to_json() const {
    return {{"step", step},
            {"group_norms", group_norms},
            {"ratio_mid_encoder", ratio_mid_encoder},
            {"ratio_mid_decoder", ratio_mid_decoder}};
  }
};

inline double safe_ratio(double num, double den) { return num / (den + 1e-30); }

template <typename S>
GradientReport capture_gradients(const Tape<S>& tape,
                                 const std::vector<Param<S>*>& params, int64_t step) {
  if (!tape.backward_done())
    throw TrainError("capture_gradients: no backward pass has run on this tape");
  GradientReport r;
  r.step = step;
  for (ParamGroup g :
       {ParamGroup::kEncoder, ParamGroup::kMid, ParamGroup::kDecoder,
        ParamGroup::kGuide1, ParamGroup::kGuide2, ParamGroup::kHintProj}) {
    r.group_norms[param_group_name(g)] = group_grad_norm(params, g);
  }
  r.ratio_mid_encoder = safe_ratio(r.group_norms["mid"], r.group_norms["encoder"]);
  r.ratio_mid_decoder = safe_ratio(r.group_norms["mid"], r.group_norms["decoder"]);
  return r;
}

// ---- laziness reports ----

struct LazinessReport {
  nlohmann::json configuration;
  std::vector<GradientReport> gradient_series;
  std::vector<double> loss_series;  // task L1 per step
  int64_t ratio_window = 100;
  double summary_ratio = 0;  // median mid/encoder ratio over the last window
  double final_loss = 0;
  double last_window_mean_loss = 0;

  void finalize() {
    if (gradient_series.empty()) return;
    size_t window = static_cast<size_t>(
        std::min<int64_t>(ratio_window, static_cast<int64_t>(gradient_series.size())));
    std::vector<double> tail;
    tail.reserve(window);
    for (size_t i = gradient_series.size() - window; i < gradient_series.size(); ++i)
      tail.push_back(gradient_series[i].ratio_mid_encoder);
    std::sort(tail.begin(), tail.end());
    summary_ratio = tail[tail.size() / 2];
    final_loss = loss_series.back();
    double acc = 0;
    for (size_t i = loss_series.size() - window; i < loss_series.size(); ++i)
      acc += loss_series[i];
    last_window_mean_loss = acc / static_cast<double>(window);
  }

  void save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + path + "'");
    nlohmann::json header = {{"configuration", configuration},
                             {"ratio_window", ratio_window},
                             {"summary_ratio", summary_ratio},
                             {"final_loss", final_loss},
                             {"last_window_mean_loss", last_window_mean_loss}};
    out << header.dump() << "\n";
    for (size_t i = 0; i < gradient_series.size(); ++i) {
      nlohmann::json rec = gradient_series[i].to_json();
      rec["loss"] = loss_series[i];
      out << rec.dump() << "\n";
    }
  }
};

// ---- the copying-image experiment ----

struct CopyExperimentConfig {
  GeneratorConfig generator;  // 3->3, no hint, no guide decoders
  DatasetConfig data;         // synthetic paintings used as copy targets
  int64_t steps = 2000;
  int64_t batch_size = 2;
  AdamConfig optimizer;
  uint64_t seed = 1;
  int64_t ratio_window = 100;

  CopyExperimentConfig() {
    generator.in_channels = 3;
    generator.out_channels = 3;
    generator.use_hint = false;
    generator.guide_decoders_enabled = false;
    data.num_classes = 4;
    data.samples_per_class = 16;
    data.size = generator.input_size;
    data.seed = 1;
  }
};

// Identity task: input image == target image, plain L1 on the final output.
// With skips enabled the loss collapses while the mid blocks starve; with
// skips disabled the mid blocks keep receiving gradient.
inline LazinessReport run_copy_experiment(const CopyExperimentConfig& cfg) {
  GP_CHECK_CFG(!cfg.generator.use_hint && !cfg.generator.guide_decoders_enabled,
               "copy experiment runs without hint injection and without guides");
  GP_CHECK_CFG(cfg.generator.in_channels == 3 && cfg.generator.out_channels == 3,
               "copy experiment copies 3-channel paintings");
  GP_CHECK_CFG(cfg.data.size == cfg.generator.input_size,
               "copy experiment image size ", cfg.data.size, " != generator input ",
               cfg.generator.input_size);
  GP_CHECK_CFG(cfg.steps >= 0 && cfg.batch_size >= 1, "bad steps/batch_size");

  Dataset data = Dataset::generate(cfg.data);
  auto net = build_generator<float>(cfg.generator, cfg.seed);
  Adam<float> opt(net->params(), cfg.optimizer);

  LazinessReport report;
  report.configuration = {{"experiment", "copy"},
                          {"generator", cfg.generator},
                          {"steps", cfg.steps},
                          {"batch_size", cfg.batch_size},
                          {"seed", cfg.seed}};
  report.ratio_window = cfg.ratio_window;

  for (int64_t step = 0; step < cfg.steps; ++step) {
    Dataset::Batch batch = data.make_batch(cfg.seed, step, cfg.batch_size);
    opt.zero_grads();
    Tape<float> tape;
    int x = tape.constant(batch.paintings);
    GeneratorOutputIdsT<float> out = net->forward(tape, x, -1);
    int loss = tape.mean_all(tape.abs(tape.sub(x, out.g_f)));
    tape.backward(loss);
    report.gradient_series.push_back(capture_gradients(tape, net->params(), step));
    double loss_v = tape.value(loss)[0];
    if (!std::isfinite(loss_v))
      throw TrainError(strcat_args("copy experiment diverged at step ", step));
    report.loss_series.push_back(loss_v);
    opt.step();
  }
  report.finalize();
  return report;
}

// ---- guide-decoder comparison ----

struct GuideComparisonConfig {
  GeneratorConfig generator;  // guides toggled per run
  DiscriminatorConfig discriminator;
  StyleEncoderConfig encoder;
  TrainConfig train;
  DatasetConfig data;
  uint64_t encoder_seed = 1;  // frozen random-weight encoder
  int64_t ratio_window = 100;

  GuideComparisonConfig() {
    train.steps = 400;
    train.shift.warmup_steps = train.steps;  // plain dcgan mode keeps runs comparable
    data.num_classes = 8;
    data.samples_per_class = 32;
  }
};

struct GuideComparisonResult {
  LazinessReport with_guides;
  LazinessReport without_guides;
  double ratio_contrast = 0;     // with / without summary ratios
  double min_mid_norm_with = 0;  // over all steps of the guides-on run
};

// Full style task twice (guides on vs off), identical seeds and data. The
// loss series records the shared mean|y - G_f| term so the two curves
// overlay on one scale.
inline GuideComparisonResult run_guide_comparison(const GuideComparisonConfig& cfg) {
  Dataset data = Dataset::generate(cfg.data);
  GuideComparisonResult result;
  for (bool guides : {true, false}) {
    GeneratorConfig gen_cfg = cfg.generator;
    gen_cfg.guide_decoders_enabled = guides;
    TrainerT<float> trainer(gen_cfg, cfg.discriminator,
                            build_style_encoder<float>(cfg.encoder, cfg.encoder_seed),
                            cfg.train, &data);
    trainer.run();

    LazinessReport rep;
    rep.configuration = {{"experiment", "guide_comparison"},
                         {"guides", guides},
                         {"generator", gen_cfg},
                         {"train", cfg.train}};
    rep.ratio_window = cfg.ratio_window;
    for (const StepMetrics& m : trainer.history()) {
      GradientReport g;
      g.step = m.step;
      g.group_norms = m.grad_norms;
      g.group_norms.erase("discriminator");
      g.ratio_mid_encoder = safe_ratio(m.grad_norms.at("mid"),
                                       m.grad_norms.at("encoder"));
      g.ratio_mid_decoder = safe_ratio(m.grad_norms.at("mid"),
                                       m.grad_norms.at("decoder"));
      rep.gradient_series.push_back(std::move(g));
      rep.loss_series.push_back(m.l1_f);
    }
    rep.finalize();
    (guides ? result.with_guides : result.without_guides) = std::move(rep);
  }
  result.ratio_contrast = safe_ratio(result.with_guides.summary_ratio,
                                     result.without_guides.summary_ratio);
  double min_mid = std::numeric_limits<double>::infinity();
  for (const auto& g : result.with_guides.gradient_series)
    min_mid = std::min(min_mid, g.group_norms.at("mid"));
  result.min_mid_norm_with =
      result.with_guides.gradient_series.empty() ? 0.0 : min_mid;
  return result;
}

// ---- finite differences ----

// Central-difference check of every parameter element against the tape
// gradients. build_loss must assemble a fresh scalar loss on the given tape.
template <typename S>
double finite_difference_check(const std::vector<Param<S>*>& params,
                               const std::function<int(Tape<S>&)>& build_loss,
                               double step_size) {
  GP_CHECK_CFG(step_size > 0, "step_size must be > 0, got ", step_size);
  int64_t total = param_count(params);
  GP_CHECK_CFG(total <= 500, "finite_difference_check is limited to micro networks "
               "(<= 500 parameters), got ", total);

  zero_grads(params);
  {
    Tape<S> tape;
    int loss = build_loss(tape);
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape<S> tape;
    int loss = build_loss(tape);
    return static_cast<double>(tape.value(loss)[0]);
  };

  double max_rel = 0;
  for (auto* p : params) {
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      S orig = p->value[i];
      p->value[i] = orig + static_cast<S>(step_size);
      double up = eval();
      p->value[i] = orig - static_cast<S>(step_size);
      double down = eval();
      p->value[i] = orig;
      double numeric = (up - down) / (2.0 * step_size);
      double analytic = static_cast<double>(p->grad[i]);
      double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

// Micro networks small enough for exhaustive finite differencing.
inline GeneratorConfig micro_generator_config() {
  GeneratorConfig cfg;
  cfg.input_size = 8;
  cfg.in_channels = 1;
  cfg.base_channels = 1;
  cfg.depth = 2;
  cfg.mid_blocks = 1;
  cfg.hint_dim = 4;
  cfg.hint_mode = HintMode::kAddAfterProjection;
  cfg.guide_decoders_enabled = true;
  cfg.guide1_grayscale = true;
  return cfg;
}

inline DiscriminatorConfig micro_discriminator_config() {
  DiscriminatorConfig cfg;
  cfg.input_size = 8;
  cfg.base_channels = 2;
  cfg.head_dim = 4;
  return cfg;
}

// ---- report output (jsonl + PNG curves) ----

inline void save_copy_experiment_outputs(const LazinessReport& report,
                                         const std::string& dir,
                                         const std::string& stem) {
  std::filesystem::create_directories(dir);
  report.save_jsonl(dir + "/" + stem + ".jsonl");
  Plot loss_plot({720, 480, true, stem + " l1"});
  PlotSeries s;
  s.label = "l1";
  s.values = report.loss_series;
  s.color = {0.85f, 0.25f, 0.2f};
  loss_plot.add_series(std::move(s));
  loss_plot.save(dir + "/" + stem + "_loss.png");

  Plot ratio_plot({720, 480, true, stem + " mid/enc ratio"});
  PlotSeries r;
  r.label = "mid/enc";
  r.color = {0.2f, 0.35f, 0.8f};
  for (const auto& g : report.gradient_series) r.values.push_back(g.ratio_mid_encoder);
  ratio_plot.add_series(std::move(r));
  ratio_plot.save(dir + "/" + stem + "_ratio.png");
}

inline void save_guide_comparison_outputs(const GuideComparisonResult& result,
                                          const std::string& dir) {
  std::filesystem::create_directories(dir);
  result.with_guides.save_jsonl(dir + "/guides_on.jsonl");
  result.without_guides.save_jsonl(dir + "/guides_off.jsonl");

  Plot loss_plot({720, 480, false, "l1 on g f: guides on vs off"});
  PlotSeries on, off;
  on.label = "with guides";
  on.color = {0.85f, 0.25f, 0.2f};
  on.values = result.with_guides.loss_series;
  off.label = "without";
  off.color = {0.2f, 0.35f, 0.8f};
  off.values = result.without_guides.loss_series;
  loss_plot.add_series(std::move(on));
  loss_plot.add_series(std::move(off));
  loss_plot.save(dir + "/guides_loss.png");

  Plot ratio_plot({720, 480, true, "mid/enc gradient ratio"});
  PlotSeries ron, roff;
  ron.label = "with guides";
  ron.color = {0.85f, 0.25f, 0.2f};
  for (const auto& g : result.with_guides.gradient_series)
    ron.values.push_back(g.ratio_mid_encoder);
  roff.label = "without";
  roff.color = {0.2f, 0.35f, 0.8f};
  for (const auto& g : result.without_guides.gradient_series)
    roff.values.push_back(g.ratio_mid_encoder);
  ratio_plot.add_series(std::move(ron));
  ratio_plot.add_series(std::move(roff));
  ratio_plot.save(dir + "/guides_ratio.png");
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_PROBES_HPP_
