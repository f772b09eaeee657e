#ifndef GUIDEPAINT_CONV_HPP_
#define GUIDEPAINT_CONV_HPP_

#include <Eigen/Core>

#include "guidepaint/tensor.hpp"

namespace guidepaint {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapRM = Eigen::Map<MatRM<S>>;
template <typename S>
using CMapRM = Eigen::Map<const MatRM<S>>;

namespace detail {

// Unrolls one image into a (C*KH*KW) x (OH*OW) row-major patch matrix.
template <typename S>
void im2col(const S* src, int64_t C, int64_t H, int64_t W, int64_t KH, int64_t KW,
            int64_t stride, int64_t pad, int64_t OH, int64_t OW, S* cols) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t kh = 0; kh < KH; ++kh) {
      for (int64_t kw = 0; kw < KW; ++kw) {
        S* row = cols + ((c * KH + kh) * KW + kw) * OH * OW;
        for (int64_t oh = 0; oh < OH; ++oh) {
          int64_t ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= H) {
            std::fill(row + oh * OW, row + (oh + 1) * OW, S(0));
            continue;
          }
          const S* src_row = src + (c * H + ih) * W;
          for (int64_t ow = 0; ow < OW; ++ow) {
            int64_t iw = ow * stride - pad + kw;
            row[oh * OW + ow] = (iw >= 0 && iw < W) ? src_row[iw] : S(0);
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back onto the (C,H,W) gradient image.
template <typename S>
void col2im_add(const S* cols, int64_t C, int64_t H, int64_t W, int64_t KH, int64_t KW,
                int64_t stride, int64_t pad, int64_t OH, int64_t OW, S* dst) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t kh = 0; kh < KH; ++kh) {
      for (int64_t kw = 0; kw < KW; ++kw) {
        const S* row = cols + ((c * KH + kh) * KW + kw) * OH * OW;
        for (int64_t oh = 0; oh < OH; ++oh) {
          int64_t ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= H) continue;
          S* dst_row = dst + (c * H + ih) * W;
          for (int64_t ow = 0; ow < OW; ++ow) {
            int64_t iw = ow * stride - pad + kw;
            if (iw >= 0 && iw < W) dst_row[iw] += row[oh * OW + ow];
          }
        }
      }
    }
  }
}

}  // namespace detail

inline int64_t conv_out_size(int64_t in, int64_t kernel, int64_t stride, int64_t pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// x: (N,C,H,W), w: (OC,C,KH,KW), b: (OC). Returns (N,OC,OH,OW).
template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                          int64_t stride, int64_t pad) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OC = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  GP_CHECK_SHAPE(w.dim(1) == C, "conv2d: input has ", C, " channels, weight expects ",
                 w.dim(1));
  const int64_t OH = conv_out_size(H, KH, stride, pad);
  const int64_t OW = conv_out_size(W, KW, stride, pad);
  const int64_t K = C * KH * KW;
  TensorT<S> y({N, OC, OH, OW});
  TensorT<S> cols({K, OH * OW});
  CMapRM<S> wmat(w.data(), OC, K);
  for (int64_t n = 0; n < N; ++n) {
    detail::im2col(x.data() + n * C * H * W, C, H, W, KH, KW, stride, pad, OH, OW,
                   cols.data());
    CMapRM<S> cmat(cols.data(), K, OH * OW);
    MapRM<S> ymat(y.data() + n * OC * OH * OW, OC, OH * OW);
    ymat.noalias() = wmat * cmat;
    for (int64_t oc = 0; oc < OC; ++oc) ymat.row(oc).array() += b[oc];
  }
  return y;
}

// Accumulates input/weight/bias gradients. Null outputs are skipped.
template <typename S>
void conv2d_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& dy,
                     int64_t stride, int64_t pad, TensorT<S>* dx, TensorT<S>* dw,
                     TensorT<S>* db) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OC = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const int64_t OH = dy.dim(2), OW = dy.dim(3);
  const int64_t K = C * KH * KW;
  TensorT<S> cols({K, OH * OW});
  CMapRM<S> wmat(w.data(), OC, K);
  for (int64_t n = 0; n < N; ++n) {
    CMapRM<S> dymat(dy.data() + n * OC * OH * OW, OC, OH * OW);
    if (dw || dx) {
      detail::im2col(x.data() + n * C * H * W, C, H, W, KH, KW, stride, pad, OH, OW,
                     cols.data());
    }
    if (dw) {
      CMapRM<S> cmat(cols.data(), K, OH * OW);
      MapRM<S> dwmat(dw->data(), OC, K);
      dwmat.noalias() += dymat * cmat.transpose();
    }
    if (db) {
      for (int64_t oc = 0; oc < OC; ++oc) db->data()[oc] += dymat.row(oc).sum();
    }
    if (dx) {
      MapRM<S> dcols(cols.data(), K, OH * OW);
      dcols.noalias() = wmat.transpose() * dymat;
      detail::col2im_add(cols.data(), C, H, W, KH, KW, stride, pad, OH, OW,
                         dx->data() + n * C * H * W);
    }
  }
}

// x: (N,I), w: (O,I), b: (O) -> (N,O). Row-wise products keep batch rows
// bitwise identical to single-sample forwards.
template <typename S>
TensorT<S> dense_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
  const int64_t N = x.dim(0), I = x.dim(1), O = w.dim(0);
  GP_CHECK_SHAPE(w.dim(1) == I, "dense: input width ", I, ", weight expects ", w.dim(1));
  TensorT<S> y({N, O});
  CMapRM<S> xm(x.data(), N, I), wm(w.data(), O, I);
  MapRM<S> ym(y.data(), N, O);
  for (int64_t n = 0; n < N; ++n)
    ym.row(n).noalias() = (wm * xm.row(n).transpose()).transpose();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t o = 0; o < O; ++o) y.at(n, o) += b[o];
  return y;
}

template <typename S>
void dense_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& dy,
                    TensorT<S>* dx, TensorT<S>* dw, TensorT<S>* db) {
  const int64_t N = x.dim(0), I = x.dim(1), O = w.dim(0);
  CMapRM<S> xm(x.data(), N, I), wm(w.data(), O, I), dym(dy.data(), N, O);
  if (dx) {
    MapRM<S> dxm(dx->data(), N, I);
    dxm.noalias() += dym * wm;
  }
  if (dw) {
    MapRM<S> dwm(dw->data(), O, I);
    dwm.noalias() += dym.transpose() * xm;
  }
  if (db) {
    for (int64_t n = 0; n < N; ++n)
      for (int64_t o = 0; o < O; ++o) db->data()[o] += dy.at(n, o);
  }
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_CONV_HPP_
