#ifndef GUIDEPAINT_CONFIG_JSON_HPP_
#define GUIDEPAINT_CONFIG_JSON_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "guidepaint/data.hpp"
#include "guidepaint/discriminator.hpp"
#include "guidepaint/generator.hpp"
#include "guidepaint/losses.hpp"
#include "guidepaint/style_encoder.hpp"

// JSON (de)serialization for every config record: the checkpoint metadata,
// the CLI config file and the run manifests all share these shapes.

namespace guidepaint {

inline void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"input_size", c.input_size},
       {"in_channels", c.in_channels},
       {"out_channels", c.out_channels},
       {"base_channels", c.base_channels},
       {"depth", c.depth},
       {"mid_blocks", c.mid_blocks},
       {"hint_dim", c.hint_dim},
       {"hint_proj_dim", c.hint_proj_dim},
       {"hint_mode", hint_mode_name(c.hint_mode)},
       {"use_hint", c.use_hint},
       {"guide_decoders_enabled", c.guide_decoders_enabled},
       {"guide1_grayscale", c.guide1_grayscale},
       {"skips_enabled", c.skips_enabled}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  c.in_channels = j.value("in_channels", c.in_channels);
  c.out_channels = j.value("out_channels", c.out_channels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.depth = j.value("depth", c.depth);
  c.mid_blocks = j.value("mid_blocks", c.mid_blocks);
  c.hint_dim = j.value("hint_dim", c.hint_dim);
  c.hint_proj_dim = j.value("hint_proj_dim", c.hint_proj_dim);
  if (j.contains("hint_mode")) {
    std::string m = j.at("hint_mode").get<std::string>();
    if (m == "broadcast-concat")
      c.hint_mode = HintMode::kBroadcastConcat;
    else if (m == "add-after-projection")
      c.hint_mode = HintMode::kAddAfterProjection;
    else
      throw ConfigError("unknown hint_mode '" + m + "'");
  }
  c.use_hint = j.value("use_hint", c.use_hint);
  c.guide_decoders_enabled = j.value("guide_decoders_enabled", c.guide_decoders_enabled);
  c.guide1_grayscale = j.value("guide1_grayscale", c.guide1_grayscale);
  c.skips_enabled = j.value("skips_enabled", c.skips_enabled);
}

inline void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"variant", disc_variant_name(c.variant)},
       {"input_size", c.input_size},
       {"in_channels", c.in_channels},
       {"base_channels", c.base_channels},
       {"head_dim", c.head_dim}};
}

inline void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  if (j.contains("variant")) {
    std::string v = j.at("variant").get<std::string>();
    if (v == "acgan")
      c.variant = DiscVariant::kAcGan;
    else if (v == "dcgan")
      c.variant = DiscVariant::kDcGan;
    else
      throw ConfigError("unknown discriminator variant '" + v + "'");
  }
  c.input_size = j.value("input_size", c.input_size);
  c.in_channels = j.value("in_channels", c.in_channels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.head_dim = j.value("head_dim", c.head_dim);
}

inline void to_json(nlohmann::json& j, const StyleEncoderConfig& c) {
  j = {{"input_size", c.input_size},
       {"in_channels", c.in_channels},
       {"base_channels", c.base_channels},
       {"hint_dim", c.hint_dim},
       {"extra_projection", c.extra_projection}};
}

inline void from_json(const nlohmann::json& j, StyleEncoderConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  c.in_channels = j.value("in_channels", c.in_channels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.hint_dim = j.value("hint_dim", c.hint_dim);
  c.extra_projection = j.value("extra_projection", c.extra_projection);
}

inline void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"alpha", w.alpha}, {"beta", w.beta}, {"lambda", w.lambda}};
}

inline void from_json(const nlohmann::json& j, LossWeights& w) {
  w.alpha = j.value("alpha", w.alpha);
  w.beta = j.value("beta", w.beta);
  w.lambda = j.value("lambda", w.lambda);
}

inline void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = {{"num_classes", c.num_classes},
       {"samples_per_class", c.samples_per_class},
       {"size", c.size},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, DatasetConfig& c) {
  c.num_classes = j.value("num_classes", c.num_classes);
  c.samples_per_class = j.value("samples_per_class", c.samples_per_class);
  c.size = j.value("size", c.size);
  c.seed = j.value("seed", c.seed);
}

// Field-by-field comparison used when resuming: returns the names of
// fields that differ.
inline std::vector<std::string> config_diff(const nlohmann::json& a,
                                            const nlohmann::json& b) {
  std::vector<std::string> diffs;
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (!b.contains(it.key()) || b.at(it.key()) != it.value())
      diffs.push_back(it.key());
  }
  for (auto it = b.begin(); it != b.end(); ++it)
    if (!a.contains(it.key())) diffs.push_back(it.key());
  return diffs;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_CONFIG_JSON_HPP_
