#ifndef GUIDEPAINT_METRICS_HPP_
#define GUIDEPAINT_METRICS_HPP_

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidepaint/common.hpp"
#include "guidepaint/losses.hpp"

namespace guidepaint {

// One record per training step: every loss term of the objective plus the
// per-group gradient norms. Serialized as line-delimited JSON.
struct StepMetrics {
  int64_t step = 0;
  LossMode mode = LossMode::kDcGan;
  double l1_f = 0, l1_g1 = 0, l1_g2 = 0, l1_total = 0;
  double d_loss = 0, g_gan = 0, g_objective = 0;
  std::map<std::string, double> grad_norms;

  bool operator==(const StepMetrics&) const = default;

  nlohmann::json to_json() const {
    return {{"step", step},
            {"mode", loss_mode_name(mode)},
            {"l1_f", l1_f},
            {"l1_g1", l1_g1},
            {"l1_g2", l1_g2},
            {"l1_total", l1_total},
            {"d_loss", d_loss},
            {"g_gan", g_gan},
            {"g_objective", g_objective},
            {"grad_norms", grad_norms}};
  }

  static StepMetrics from_json(const nlohmann::json& j) {
    StepMetrics m;
    m.step = j.at("step").get<int64_t>();
    m.mode = j.at("mode").get<std::string>() == "acgan" ? LossMode::kAcGan
                                                        : LossMode::kDcGan;
    m.l1_f = j.at("l1_f").get<double>();
    m.l1_g1 = j.at("l1_g1").get<double>();
    m.l1_g2 = j.at("l1_g2").get<double>();
    m.l1_total = j.at("l1_total").get<double>();
    m.d_loss = j.at("d_loss").get<double>();
    m.g_gan = j.at("g_gan").get<double>();
    m.g_objective = j.at("g_objective").get<double>();
    m.grad_norms = j.at("grad_norms").get<std::map<std::string, double>>();
    return m;
  }
};

// Append-only JSONL stream.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path, bool append = false)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw IoError("cannot open metrics stream '" + path + "'");
  }

  void append(const StepMetrics& m) {
    if (out_.is_open()) out_ << m.to_json().dump() << "\n";
  }

  void flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
};

inline std::vector<StepMetrics> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics stream '" + path + "'");
  std::vector<StepMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("bad metrics record in '" + path + "'");
    out.push_back(StepMetrics::from_json(j));
  }
  return out;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_METRICS_HPP_
