#ifndef GUIDEPAINT_ADAM_HPP_
#define GUIDEPAINT_ADAM_HPP_

#include <cmath>
#include <vector>

#include "guidepaint/layers.hpp"

namespace guidepaint {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed parameter list. Moment tensors are exposed by parameter
// name for checkpointing.
template <typename S>
class Adam {
 public:
  Adam(std::vector<Param<S>*> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    slots_.reserve(params_.size());
    for (Param<S>* p : params_) {
      slots_.push_back({TensorT<S>(p->value.shape()), TensorT<S>(p->value.shape())});
    }
  }

  const AdamConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  const std::vector<Param<S>*>& params() const { return params_; }
  TensorT<S>& moment1(size_t i) { return slots_[i].m; }
  TensorT<S>& moment2(size_t i) { return slots_[i].v; }

  void step() {
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<S>& p = *params_[i];
      TensorT<S>&m = slots_[i].m, &v = slots_[i].v;
      for (int64_t j = 0; j < p.value.numel(); ++j) {
        double g = static_cast<double>(p.grad[j]);
        double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * g;
        double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * g * g;
        m[j] = static_cast<S>(mj);
        v[j] = static_cast<S>(vj);
        p.value[j] -= static_cast<S>(cfg_.lr * (mj / bc1) /
                                     (std::sqrt(vj / bc2) + cfg_.eps));
      }
    }
  }

  void zero_grads() { guidepaint::zero_grads(params_); }

 private:
  struct Slot {
    TensorT<S> m, v;
  };
  std::vector<Param<S>*> params_;
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace guidepaint

#endif  // GUIDEPAINT_ADAM_HPP_
