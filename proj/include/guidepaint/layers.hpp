#ifndef GUIDEPAINT_LAYERS_HPP_
#define GUIDEPAINT_LAYERS_HPP_

#include <string>
#include <vector>

#include "guidepaint/tape.hpp"

namespace guidepaint {

// He-style fan-in init for conv weights (slope is the leaky-relu slope of
// the following nonlinearity; 0 for plain relu).
template <typename S>
void init_conv(Param<S>& w, Rng& rng, double slope = 0.0) {
  int64_t fan_in = w.value.dim(1) * w.value.dim(2) * w.value.dim(3);
  double std = std::sqrt(2.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
  for (int64_t i = 0; i < w.value.numel(); ++i)
    w.value[i] = static_cast<S>(rng.normal(0.0, std));
}

template <typename S>
void init_dense(Param<S>& w, Rng& rng) {
  int64_t fan_in = w.value.dim(1);
  double std = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < w.value.numel(); ++i)
    w.value[i] = static_cast<S>(rng.normal(0.0, std));
}

template <typename S>
struct Conv2dLayer {
  Param<S> w, b;
  int64_t stride = 1, pad = 1;

  void build(const std::string& name, ParamGroup group, int64_t in_ch, int64_t out_ch,
             int64_t kernel, int64_t stride_, int64_t pad_, Rng& rng,
             double slope = 0.0) {
    w.name = name + ".weight";
    b.name = name + ".bias";
    w.group = b.group = group;
    w.value = TensorT<S>({out_ch, in_ch, kernel, kernel});
    w.grad = TensorT<S>({out_ch, in_ch, kernel, kernel});
    b.value = TensorT<S>({out_ch});
    b.grad = TensorT<S>({out_ch});
    stride = stride_;
    pad = pad_;
    init_conv(w, rng, slope);
  }

  int forward(Tape<S>& t, int x) { return t.conv2d(x, w, b, stride, pad); }

  void collect(std::vector<Param<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
struct DenseLayer {
  Param<S> w, b;

  void build(const std::string& name, ParamGroup group, int64_t in_dim, int64_t out_dim,
             Rng& rng) {
    w.name = name + ".weight";
    b.name = name + ".bias";
    w.group = b.group = group;
    w.value = TensorT<S>({out_dim, in_dim});
    w.grad = TensorT<S>({out_dim, in_dim});
    b.value = TensorT<S>({out_dim});
    b.grad = TensorT<S>({out_dim});
    init_dense(w, rng);
  }

  int forward(Tape<S>& t, int x) { return t.dense(x, w, b); }

  void collect(std::vector<Param<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
int64_t param_count(const std::vector<Param<S>*>& params) {
  int64_t n = 0;
  for (const Param<S>* p : params) n += p->value.numel();
  return n;
}

template <typename S>
void zero_grads(const std::vector<Param<S>*>& params) {
  for (Param<S>* p : params) p->zero_grad();
}

template <typename S>
uint64_t params_hash(const std::vector<Param<S>*>& params) {
  uint64_t h = 1469598103934665603ULL;
  for (const Param<S>* p : params) h = tensor_bytes_hash(p->value, h);
  return h;
}

// L2 norm over the concatenation of all gradients in one attribution group.
template <typename S>
double group_grad_norm(const std::vector<Param<S>*>& params, ParamGroup group) {
  double acc = 0;
  for (const Param<S>* p : params) {
    if (p->group != group) continue;
    for (int64_t i = 0; i < p->grad.numel(); ++i) {
      double v = static_cast<double>(p->grad[i]);
      acc += v * v;
    }
  }
  return std::sqrt(acc);
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_LAYERS_HPP_
