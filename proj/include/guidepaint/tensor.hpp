#ifndef GUIDEPAINT_TENSOR_HPP_
#define GUIDEPAINT_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "guidepaint/common.hpp"
#include "guidepaint/rng.hpp"

namespace guidepaint {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor. Copies are shallow (shared storage); use clone()
// for a deep copy. Images are stored NCHW, vectors as (N, F).
template <typename S>
class TensorT {
 public:
  TensorT() : numel_(0) {}

  // Buffers are 64-byte aligned so Eigen kernels take the same code path
  // for every allocation; this keeps runs bitwise reproducible.
  explicit TensorT(Shape shape)
      : shape_(std::move(shape)), numel_(shape_numel(shape_)) {
    S* raw = static_cast<S*>(::operator new[](
        static_cast<size_t>(std::max<int64_t>(numel_, 1)) * sizeof(S),
        std::align_val_t(64)));
    data_ = std::shared_ptr<S[]>(
        raw, [](S* p) { ::operator delete[](p, std::align_val_t(64)); });
    std::fill(raw, raw + numel_, S(0));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, S v) {
    TensorT t(std::move(shape));
    std::fill(t.data(), t.data() + t.numel_, v);
    return t;
  }

  static TensorT scalar(S v) { return full({1}, v); }

  static TensorT randn(Shape shape, Rng& rng, S stddev = S(1)) {
    TensorT t(std::move(shape));
    for (int64_t i = 0; i < t.numel_; ++i)
      t.data()[i] = static_cast<S>(rng.normal(0.0, static_cast<double>(stddev)));
    return t;
  }

  static TensorT rand_uniform(Shape shape, Rng& rng, S lo = S(0), S hi = S(1)) {
    TensorT t(std::move(shape));
    for (int64_t i = 0; i < t.numel_; ++i)
      t.data()[i] = static_cast<S>(rng.uniform(lo, hi));
    return t;
  }

  const Shape& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return numel_; }
  bool defined() const { return data_ != nullptr; }

  S* data() { return data_.get(); }
  const S* data() const { return data_.get(); }

  S& operator[](int64_t i) { return data_.get()[i]; }
  const S& operator[](int64_t i) const { return data_.get()[i]; }

  // NCHW accessor.
  S& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_.get()[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const S& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_.get()[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  // (N, F) accessor.
  S& at(int64_t n, int64_t f) { return data_.get()[n * shape_[1] + f]; }
  const S& at(int64_t n, int64_t f) const { return data_.get()[n * shape_[1] + f]; }

  // Shares storage; element count must match.
  TensorT reshaped(Shape new_shape) const {
    GP_CHECK_SHAPE(shape_numel(new_shape) == numel_, "reshape ", shape_str(shape_),
                   " -> ", shape_str(new_shape));
    TensorT t;
    t.shape_ = std::move(new_shape);
    t.numel_ = numel_;
    t.data_ = data_;
    return t;
  }

  TensorT clone() const {
    TensorT t(shape_);
    std::copy(data(), data() + numel_, t.data());
    return t;
  }

  template <typename S2>
  TensorT<S2> cast() const {
    TensorT<S2> t(shape_);
    for (int64_t i = 0; i < numel_; ++i) t.data()[i] = static_cast<S2>(data()[i]);
    return t;
  }

  void fill(S v) { std::fill(data(), data() + numel_, v); }
  void zero() { fill(S(0)); }

  void add_(const TensorT& other) {
    for (int64_t i = 0; i < numel_; ++i) data()[i] += other.data()[i];
  }

  S l2_norm() const {
    double acc = 0;
    for (int64_t i = 0; i < numel_; ++i)
      acc += static_cast<double>(data()[i]) * static_cast<double>(data()[i]);
    return static_cast<S>(std::sqrt(acc));
  }

  S abs_max() const {
    S m = 0;
    for (int64_t i = 0; i < numel_; ++i) m = std::max(m, std::abs(data()[i]));
    return m;
  }

  S min() const {
    S m = numel_ ? data()[0] : S(0);
    for (int64_t i = 1; i < numel_; ++i) m = std::min(m, data()[i]);
    return m;
  }
  S max() const {
    S m = numel_ ? data()[0] : S(0);
    for (int64_t i = 1; i < numel_; ++i) m = std::max(m, data()[i]);
    return m;
  }

  double mean() const {
    double acc = 0;
    for (int64_t i = 0; i < numel_; ++i) acc += static_cast<double>(data()[i]);
    return numel_ ? acc / static_cast<double>(numel_) : 0.0;
  }

  bool all_finite() const {
    for (int64_t i = 0; i < numel_; ++i)
      if (!std::isfinite(static_cast<double>(data()[i]))) return false;
    return true;
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  bool equals(const TensorT& o) const {
    if (!same_shape(o)) return false;
    return std::equal(data(), data() + numel_, o.data());
  }

 private:
  template <typename>
  friend class TensorT;
  Shape shape_;
  int64_t numel_;
  std::shared_ptr<S[]> data_;
};

using Tensor = TensorT<float>;

// FNV-1a over the raw bytes; used for the frozen-parameter and
// group-exclusivity assertions.
template <typename S>
uint64_t tensor_bytes_hash(const TensorT<S>& t, uint64_t h = 1469598103934665603ULL) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(t.data());
  size_t nbytes = static_cast<size_t>(t.numel()) * sizeof(S);
  for (size_t i = 0; i < nbytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_TENSOR_HPP_
