#ifndef GUIDEPAINT_TAPE_HPP_
#define GUIDEPAINT_TAPE_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "guidepaint/common.hpp"
#include "guidepaint/conv.hpp"
#include "guidepaint/tensor.hpp"

namespace guidepaint {

// Gradient-attribution group. Every trainable parameter belongs to exactly
// one group; the generator uses the first six, the probes report norms per
// group.
enum class ParamGroup {
  kEncoder,
  kMid,
  kDecoder,
  kGuide1,
  kGuide2,
  kHintProj,
  kDiscriminator,
  kStyleEncoder,
  kOther,
};

inline const char* param_group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kMid: return "mid";
    case ParamGroup::kDecoder: return "decoder";
    case ParamGroup::kGuide1: return "guide1";
    case ParamGroup::kGuide2: return "guide2";
    case ParamGroup::kHintProj: return "hint_proj";
    case ParamGroup::kDiscriminator: return "discriminator";
    case ParamGroup::kStyleEncoder: return "style_encoder";
    default: return "other";
  }
}

template <typename S>
struct Param {
  std::string name;
  ParamGroup group = ParamGroup::kOther;
  TensorT<S> value;
  TensorT<S> grad;
  bool trainable = true;

  void zero_grad() { grad.zero(); }
};

// Define-by-run reverse-mode tape. Ops append nodes; backward() walks the
// nodes in reverse creation order (creation order is topological) and
// accumulates gradients into Param::grad for bound leaves.
template <typename S>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int)>;

  struct Node {
    TensorT<S> value;
    TensorT<S> grad;
    bool needs_grad = false;
    Param<S>* param = nullptr;
    BackFn back;
  };

  int constant(TensorT<S> v) { return push(std::move(v), false, nullptr, {}); }

  int input(TensorT<S> v, bool needs_grad = false) {
    return push(std::move(v), needs_grad, nullptr, {});
  }

  int leaf(Param<S>& p) {
    int id = push(p.value, p.trainable, &p, {});
    if (p.trainable) {
      nodes_[id].back = [](Tape& t, int self) {
        Node& n = t.nodes_[self];
        n.param->grad.add_(n.grad);
      };
    }
    return id;
  }

  const TensorT<S>& value(int id) const { return nodes_[id].value; }
  const TensorT<S>& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool backward_done() const { return backward_done_; }
  size_t size() const { return nodes_.size(); }

  // ---- arithmetic ----

  int add(int a, int b) {
    check_same_shape(a, b, "add");
    TensorT<S> out = value(a).clone();
    out.add_(value(b));
    int id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr,
                  [a, b](Tape& t, int self) {
                    t.accum(a, t.nodes_[self].grad);
                    t.accum(b, t.nodes_[self].grad);
                  });
    return id;
  }

  int sub(int a, int b) {
    check_same_shape(a, b, "sub");
    const TensorT<S>&va = value(a), &vb = value(b);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] - vb[i];
    return push(std::move(out), needs_grad(a) || needs_grad(b), nullptr,
                [a, b](Tape& t, int self) {
                  const TensorT<S>& g = t.nodes_[self].grad;
                  t.accum(a, g);
                  if (t.needs_grad(b)) {
                    TensorT<S> neg(g.shape());
                    for (int64_t i = 0; i < g.numel(); ++i) neg[i] = -g[i];
                    t.accum(b, neg);
                  }
                });
  }

  int scale(int a, S c) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] * c;
    return push(std::move(out), needs_grad(a), nullptr, [a, c](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>& g = t.nodes_[self].grad;
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * c;
      t.accum(a, ga);
    });
  }

  // c - x (used for the 1 - D(..) terms).
  int rsub_const(S c, int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = c - va[i];
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>& g = t.nodes_[self].grad;
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = -g[i];
      t.accum(a, ga);
    });
  }

  int mul(int a, int b) {
    check_same_shape(a, b, "mul");
    const TensorT<S>&va = value(a), &vb = value(b);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] * vb[i];
    return push(std::move(out), needs_grad(a) || needs_grad(b), nullptr,
                [a, b](Tape& t, int self) {
                  const TensorT<S>& g = t.nodes_[self].grad;
                  if (t.needs_grad(a)) {
                    TensorT<S> ga(g.shape());
                    const TensorT<S>& vb2 = t.value(b);
                    for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * vb2[i];
                    t.accum(a, ga);
                  }
                  if (t.needs_grad(b)) {
                    TensorT<S> gb(g.shape());
                    const TensorT<S>& va2 = t.value(a);
                    for (int64_t i = 0; i < g.numel(); ++i) gb[i] = g[i] * va2[i];
                    t.accum(b, gb);
                  }
                });
  }

  // ---- elementwise nonlinearities ----

  int relu(int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] > S(0) ? va[i] : S(0);
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>&g = t.nodes_[self].grad, &y = t.nodes_[self].value;
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = y[i] > S(0) ? g[i] : S(0);
      t.accum(a, ga);
    });
  }

  int leaky_relu(int a, S slope) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i)
      out[i] = va[i] > S(0) ? va[i] : slope * va[i];
    return push(std::move(out), needs_grad(a), nullptr,
                [a, slope](Tape& t, int self) {
                  if (!t.needs_grad(a)) return;
                  const TensorT<S>& g = t.nodes_[self].grad;
                  const TensorT<S>& x = t.value(a);
                  TensorT<S> ga(g.shape());
                  for (int64_t i = 0; i < g.numel(); ++i)
                    ga[i] = x[i] > S(0) ? g[i] : slope * g[i];
                  t.accum(a, ga);
                });
  }

  int sigmoid(int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid(va[i]);
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>&g = t.nodes_[self].grad, &y = t.nodes_[self].value;
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * y[i] * (S(1) - y[i]);
      t.accum(a, ga);
    });
  }

  int abs(int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(va[i]);
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>& g = t.nodes_[self].grad;
      const TensorT<S>& x = t.value(a);
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i)
        ga[i] = x[i] > S(0) ? g[i] : (x[i] < S(0) ? -g[i] : S(0));
      t.accum(a, ga);
    });
  }

  int log(int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(va[i]);
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>& g = t.nodes_[self].grad;
      const TensorT<S>& x = t.value(a);
      TensorT<S> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] / x[i];
      t.accum(a, ga);
    });
  }

  // Gradient passes where lo <= x <= hi (subgradient at the boundary).
  int clamp(int a, S lo, S hi) {
    const TensorT<S>& va = value(a);
    TensorT<S> out(va.shape());
    for (int64_t i = 0; i < out.numel(); ++i)
      out[i] = std::min(hi, std::max(lo, va[i]));
    return push(std::move(out), needs_grad(a), nullptr,
                [a, lo, hi](Tape& t, int self) {
                  if (!t.needs_grad(a)) return;
                  const TensorT<S>& g = t.nodes_[self].grad;
                  const TensorT<S>& x = t.value(a);
                  TensorT<S> ga(g.shape());
                  for (int64_t i = 0; i < g.numel(); ++i)
                    ga[i] = (x[i] >= lo && x[i] <= hi) ? g[i] : S(0);
                  t.accum(a, ga);
                });
  }

  // ---- reductions / shape ----

  int mean_all(int a) {
    const TensorT<S>& va = value(a);
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(va.mean()));
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      const TensorT<S>& x = t.value(a);
      S g = t.nodes_[self].grad[0] / static_cast<S>(x.numel());
      TensorT<S> ga = TensorT<S>::full(x.shape(), g);
      t.accum(a, ga);
    });
  }

  int reshape(int a, Shape new_shape) {
    TensorT<S> out = value(a).reshaped(std::move(new_shape));
    return push(std::move(out), needs_grad(a), nullptr, [a](Tape& t, int self) {
      if (!t.needs_grad(a)) return;
      t.accum(a, t.nodes_[self].grad.reshaped(t.value(a).shape()));
    });
  }

  int flatten(int a) {
    const TensorT<S>& va = value(a);
    return reshape(a, {va.dim(0), va.numel() / va.dim(0)});
  }

  // ---- structural ops ----

  int concat_channels(int a, int b) {
    const TensorT<S>&va = value(a), &vb = value(b);
    GP_CHECK_SHAPE(va.rank() == 4 && vb.rank() == 4 && va.dim(0) == vb.dim(0) &&
                       va.dim(2) == vb.dim(2) && va.dim(3) == vb.dim(3),
                   "concat_channels: ", shape_str(va.shape()), " vs ",
                   shape_str(vb.shape()));
    const int64_t N = va.dim(0), Ca = va.dim(1), Cb = vb.dim(1), H = va.dim(2),
                  W = va.dim(3);
    TensorT<S> out({N, Ca + Cb, H, W});
    const int64_t hw = H * W;
    for (int64_t n = 0; n < N; ++n) {
      std::copy(va.data() + n * Ca * hw, va.data() + (n + 1) * Ca * hw,
                out.data() + n * (Ca + Cb) * hw);
      std::copy(vb.data() + n * Cb * hw, vb.data() + (n + 1) * Cb * hw,
                out.data() + (n * (Ca + Cb) + Ca) * hw);
    }
    return push(std::move(out), needs_grad(a) || needs_grad(b), nullptr,
                [a, b, N, Ca, Cb, hw](Tape& t, int self) {
                  const TensorT<S>& g = t.nodes_[self].grad;
                  if (t.needs_grad(a)) {
                    TensorT<S> ga(t.value(a).shape());
                    for (int64_t n = 0; n < N; ++n)
                      std::copy(g.data() + n * (Ca + Cb) * hw,
                                g.data() + (n * (Ca + Cb) + Ca) * hw,
                                ga.data() + n * Ca * hw);
                    t.accum(a, ga);
                  }
                  if (t.needs_grad(b)) {
                    TensorT<S> gb(t.value(b).shape());
                    for (int64_t n = 0; n < N; ++n)
                      std::copy(g.data() + (n * (Ca + Cb) + Ca) * hw,
                                g.data() + (n + 1) * (Ca + Cb) * hw,
                                gb.data() + n * Cb * hw);
                    t.accum(b, gb);
                  }
                });
  }

  // Nearest-neighbor 2x upsampling.
  int upsample2(int a) {
    const TensorT<S>& va = value(a);
    const int64_t N = va.dim(0), C = va.dim(1), H = va.dim(2), W = va.dim(3);
    TensorT<S> out({N, C, H * 2, W * 2});
    for (int64_t nc = 0; nc < N * C; ++nc) {
      const S* src = va.data() + nc * H * W;
      S* dst = out.data() + nc * 4 * H * W;
      for (int64_t h = 0; h < 2 * H; ++h)
        for (int64_t w = 0; w < 2 * W; ++w)
          dst[h * 2 * W + w] = src[(h / 2) * W + (w / 2)];
    }
    return push(std::move(out), needs_grad(a), nullptr,
                [a, N, C, H, W](Tape& t, int self) {
                  if (!t.needs_grad(a)) return;
                  const TensorT<S>& g = t.nodes_[self].grad;
                  TensorT<S> ga({N, C, H, W});
                  for (int64_t nc = 0; nc < N * C; ++nc) {
                    const S* src = g.data() + nc * 4 * H * W;
                    S* dst = ga.data() + nc * H * W;
                    for (int64_t h = 0; h < 2 * H; ++h)
                      for (int64_t w = 0; w < 2 * W; ++w)
                        dst[(h / 2) * W + (w / 2)] += src[h * 2 * W + w];
                  }
                  t.accum(a, ga);
                });
  }

  // (N,F) -> (N,F,H,W), value replicated at every spatial position.
  int broadcast_hw(int a, int64_t H, int64_t W) {
    const TensorT<S>& va = value(a);
    GP_CHECK_SHAPE(va.rank() == 2, "broadcast_hw expects (N,F), got ",
                   shape_str(va.shape()));
    const int64_t N = va.dim(0), F = va.dim(1);
    TensorT<S> out({N, F, H, W});
    for (int64_t n = 0; n < N; ++n)
      for (int64_t f = 0; f < F; ++f) {
        S v = va.at(n, f);
        S* dst = out.data() + (n * F + f) * H * W;
        std::fill(dst, dst + H * W, v);
      }
    return push(std::move(out), needs_grad(a), nullptr,
                [a, N, F, H, W](Tape& t, int self) {
                  if (!t.needs_grad(a)) return;
                  const TensorT<S>& g = t.nodes_[self].grad;
                  TensorT<S> ga({N, F});
                  for (int64_t n = 0; n < N; ++n)
                    for (int64_t f = 0; f < F; ++f) {
                      const S* src = g.data() + (n * F + f) * H * W;
                      S acc = 0;
                      for (int64_t i = 0; i < H * W; ++i) acc += src[i];
                      ga.at(n, f) = acc;
                    }
                  t.accum(a, ga);
                });
  }

  // Rec.601 luma: (N,3,H,W) -> (N,1,H,W).
  int luma(int a) {
    const TensorT<S>& va = value(a);
    GP_CHECK_SHAPE(va.rank() == 4 && va.dim(1) == 3, "luma expects (N,3,H,W), got ",
                   shape_str(va.shape()));
    const int64_t N = va.dim(0), H = va.dim(2), W = va.dim(3), hw = H * W;
    static constexpr double kR = 0.299, kG = 0.587, kB = 0.114;
    TensorT<S> out({N, 1, H, W});
    for (int64_t n = 0; n < N; ++n) {
      const S* r = va.data() + n * 3 * hw;
      const S* g = r + hw;
      const S* b = g + hw;
      S* dst = out.data() + n * hw;
      for (int64_t i = 0; i < hw; ++i)
        dst[i] = static_cast<S>(kR * r[i] + kG * g[i] + kB * b[i]);
    }
    return push(std::move(out), needs_grad(a), nullptr,
                [a, N, hw](Tape& t, int self) {
                  if (!t.needs_grad(a)) return;
                  const TensorT<S>& g = t.nodes_[self].grad;
                  TensorT<S> ga(t.value(a).shape());
                  for (int64_t n = 0; n < N; ++n) {
                    const S* gy = g.data() + n * hw;
                    S* r = ga.data() + n * 3 * hw;
                    S* gg = r + hw;
                    S* b = gg + hw;
                    for (int64_t i = 0; i < hw; ++i) {
                      r[i] = static_cast<S>(kR) * gy[i];
                      gg[i] = static_cast<S>(kG) * gy[i];
                      b[i] = static_cast<S>(kB) * gy[i];
                    }
                  }
                  t.accum(a, ga);
                });
  }

  // ---- parameterized layers ----

  int conv2d(int x, Param<S>& w, Param<S>& b, int64_t stride, int64_t pad) {
    int wid = leaf(w), bid = leaf(b);
    TensorT<S> out = conv2d_forward(value(x), w.value, b.value, stride, pad);
    return push(std::move(out), needs_grad(x) || needs_grad(wid) || needs_grad(bid),
                nullptr, [x, wid, bid, stride, pad](Tape& t, int self) {
                  const TensorT<S>& dy = t.nodes_[self].grad;
                  TensorT<S> dx, dw, db;
                  bool nx = t.needs_grad(x), nw = t.needs_grad(wid),
                       nb = t.needs_grad(bid);
                  if (nx) dx = TensorT<S>(t.value(x).shape());
                  if (nw) dw = TensorT<S>(t.value(wid).shape());
                  if (nb) db = TensorT<S>(t.value(bid).shape());
                  conv2d_backward(t.value(x), t.value(wid), dy, stride, pad,
                                  nx ? &dx : nullptr, nw ? &dw : nullptr,
                                  nb ? &db : nullptr);
                  if (nx) t.accum(x, dx);
                  if (nw) t.accum(wid, dw);
                  if (nb) t.accum(bid, db);
                });
  }

  int dense(int x, Param<S>& w, Param<S>& b) {
    int wid = leaf(w), bid = leaf(b);
    TensorT<S> out = dense_forward(value(x), w.value, b.value);
    return push(std::move(out), needs_grad(x) || needs_grad(wid) || needs_grad(bid),
                nullptr, [x, wid, bid](Tape& t, int self) {
                  const TensorT<S>& dy = t.nodes_[self].grad;
                  TensorT<S> dx, dw, db;
                  bool nx = t.needs_grad(x), nw = t.needs_grad(wid),
                       nb = t.needs_grad(bid);
                  if (nx) dx = TensorT<S>(t.value(x).shape());
                  if (nw) dw = TensorT<S>(t.value(wid).shape());
                  if (nb) db = TensorT<S>(t.value(bid).shape());
                  dense_backward(t.value(x), t.value(wid), dy, nx ? &dx : nullptr,
                                 nw ? &dw : nullptr, nb ? &db : nullptr);
                  if (nx) t.accum(x, dx);
                  if (nw) t.accum(wid, dw);
                  if (nb) t.accum(bid, db);
                });
  }

  // Mean cross-entropy with integer labels; logits (N,K).
  int softmax_cross_entropy(int logits, const std::vector<int>& labels) {
    const TensorT<S>& l = value(logits);
    const int64_t N = l.dim(0), K = l.dim(1);
    GP_CHECK_SHAPE(static_cast<int64_t>(labels.size()) == N,
                   "softmax_cross_entropy: ", labels.size(), " labels for ", N,
                   " rows");
    double total = 0;
    for (int64_t n = 0; n < N; ++n) {
      double m = l.at(n, 0);
      for (int64_t k = 1; k < K; ++k) m = std::max(m, static_cast<double>(l.at(n, k)));
      double lse = 0;
      for (int64_t k = 0; k < K; ++k) lse += std::exp(static_cast<double>(l.at(n, k)) - m);
      lse = m + std::log(lse);
      total += lse - static_cast<double>(l.at(n, labels[static_cast<size_t>(n)]));
    }
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(total / static_cast<double>(N)));
    return push(std::move(out), needs_grad(logits), nullptr,
                [logits, labels, N, K](Tape& t, int self) {
                  if (!t.needs_grad(logits)) return;
                  const TensorT<S>& l2 = t.value(logits);
                  S g = t.nodes_[self].grad[0] / static_cast<S>(N);
                  TensorT<S> ga({N, K});
                  for (int64_t n = 0; n < N; ++n) {
                    double m = l2.at(n, 0);
                    for (int64_t k = 1; k < K; ++k)
                      m = std::max(m, static_cast<double>(l2.at(n, k)));
                    double z = 0;
                    for (int64_t k = 0; k < K; ++k)
                      z += std::exp(static_cast<double>(l2.at(n, k)) - m);
                    for (int64_t k = 0; k < K; ++k) {
                      double p = std::exp(static_cast<double>(l2.at(n, k)) - m) / z;
                      ga.at(n, k) = static_cast<S>(p) * g;
                    }
                    ga.at(n, labels[static_cast<size_t>(n)]) -= g;
                  }
                  t.accum(logits, ga);
                });
  }

  // ---- backward ----

  void backward(int loss_id) {
    GP_CHECK_SHAPE(value(loss_id).numel() == 1, "backward expects a scalar loss");
    backward_done_ = true;
    if (!nodes_[loss_id].needs_grad) return;
    nodes_[loss_id].grad.fill(S(1));
    for (int i = loss_id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.needs_grad && n.back) n.back(*this, i);
    }
  }

 private:
  static S stable_sigmoid(S x) {
    if (x >= S(0)) {
      S e = std::exp(-x);
      return S(1) / (S(1) + e);
    }
    S e = std::exp(x);
    return e / (S(1) + e);
  }

  void check_same_shape(int a, int b, const char* op) {
    GP_CHECK_SHAPE(value(a).same_shape(value(b)), op, ": ", shape_str(value(a).shape()),
                   " vs ", shape_str(value(b).shape()));
  }

  void accum(int parent, const TensorT<S>& g) {
    Node& p = nodes_[static_cast<size_t>(parent)];
    if (!p.needs_grad) return;
    p.grad.add_(g);
  }

  int push(TensorT<S> value, bool needs_grad, Param<S>* param, BackFn back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.param = param;
    n.back = std::move(back);
    if (needs_grad) n.grad = TensorT<S>(n.value.shape());
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace guidepaint

#endif  // GUIDEPAINT_TAPE_HPP_
