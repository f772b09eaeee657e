#ifndef GUIDEPAINT_LOSSES_HPP_
#define GUIDEPAINT_LOSSES_HPP_

#include "guidepaint/generator.hpp"
#include "guidepaint/style_encoder.hpp"
#include "guidepaint/tape.hpp"

namespace guidepaint {

// alpha weights the guide-1 term, beta the guide-2 term, lambda balances
// the composite L1 against the GAN term in the final objective.
struct LossWeights {
  double alpha = 0.3;
  double beta = 0.9;
  double lambda = 100.0;

  void validate() const {
    GP_CHECK_CFG(alpha >= 0, "alpha must be >= 0, got ", alpha);
    GP_CHECK_CFG(beta >= 0, "beta must be >= 0, got ", beta);
    GP_CHECK_CFG(lambda >= 0, "lambda must be >= 0, got ", lambda);
  }
};

enum class LossMode { kAcGan, kDcGan };

inline const char* loss_mode_name(LossMode m) {
  return m == LossMode::kAcGan ? "acgan" : "dcgan";
}

// Log arguments are clamped to [kLogClampMin, 1].
inline constexpr double kLogClampMin = 1e-7;

// ---- grayscale transform T ----

// Rec.601 luma on (C,H,W) or (N,C,H,W); C must be 3.
template <typename S>
TensorT<S> grayscale(const TensorT<S>& image) {
  bool batched = image.rank() == 4;
  GP_CHECK_SHAPE((image.rank() == 3 && image.dim(0) == 3) ||
                     (batched && image.dim(1) == 3),
                 "grayscale expects 3 channels, got ", shape_str(image.shape()));
  TensorT<S> in = batched ? image
                          : image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  Tape<S> tape;
  TensorT<S> out = tape.value(tape.luma(tape.constant(in)));
  return batched ? out : out.reshaped({1, out.dim(2), out.dim(3)});
}

// ---- composite L1 (Eqs. 1 and 2) ----

template <typename S>
struct L1TermIds {
  int f = -1, g1 = -1, g2 = -1, total = -1;
};

struct L1Terms {
  double f = 0, g1 = 0, g2 = 0, total = 0;
};

// total = mean|y - G_f| + alpha * mean|target_g1 - G_g1| + beta * mean|y - G_g2|
// where target_g1 is T(y) when grayscale_guide1, else y. Guide terms are
// skipped when the corresponding output id is -1 (guides disabled).
template <typename S>
L1TermIds<S> l1_composite_tape(Tape<S>& tape, const GeneratorOutputIdsT<S>& out, int y,
                               const LossWeights& w, bool grayscale_guide1) {
  L1TermIds<S> ids;
  ids.f = tape.mean_all(tape.abs(tape.sub(y, out.g_f)));
  int total = ids.f;
  if (out.g_g1 >= 0) {
    int target = grayscale_guide1 ? tape.luma(y) : y;
    GP_CHECK_SHAPE(tape.value(target).same_shape(tape.value(out.g_g1)),
                   "guide-1 target ", shape_str(tape.value(target).shape()),
                   " vs output ", shape_str(tape.value(out.g_g1).shape()));
    ids.g1 = tape.mean_all(tape.abs(tape.sub(target, out.g_g1)));
    total = tape.add(total, tape.scale(ids.g1, static_cast<S>(w.alpha)));
  }
  if (out.g_g2 >= 0) {
    ids.g2 = tape.mean_all(tape.abs(tape.sub(y, out.g_g2)));
    total = tape.add(total, tape.scale(ids.g2, static_cast<S>(w.beta)));
  }
  ids.total = total;
  return ids;
}

template <typename S>
L1Terms l1_composite(const GeneratorOutputT<S>& out, const TensorT<S>& y,
                     const LossWeights& w, bool grayscale_guide1) {
  auto as_batch = [](const TensorT<S>& t) {
    return t.rank() == 3 ? t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)}) : t;
  };
  Tape<S> tape;
  GeneratorOutputIdsT<S> ids;
  ids.g_f = tape.constant(as_batch(out.g_f));
  if (out.g_g1.defined()) ids.g_g1 = tape.constant(as_batch(out.g_g1));
  if (out.g_g2.defined()) ids.g_g2 = tape.constant(as_batch(out.g_g2));
  int yid = tape.constant(as_batch(y));
  GP_CHECK_SHAPE(tape.value(ids.g_f).same_shape(tape.value(yid)), "G_f ",
                 shape_str(out.g_f.shape()), " vs target ", shape_str(y.shape()));
  L1TermIds<S> t = l1_composite_tape(tape, ids, yid, w, grayscale_guide1);
  L1Terms r;
  r.f = tape.value(t.f)[0];
  r.g1 = t.g1 >= 0 ? tape.value(t.g1)[0] : 0;
  r.g2 = t.g2 >= 0 ? tape.value(t.g2)[0] : 0;
  r.total = tape.value(t.total)[0];
  return r;
}

// ---- GAN losses (Eqs. 3 and 4) ----

template <typename S>
struct GanLossIds {
  int d_loss = -1;  // discriminator minimizes this (negated Eq. 3/4 value)
  int g_loss = -1;  // non-saturating generator term
};

struct GanLossValues {
  double d_loss = 0, g_loss = 0;
};

// Squash a normalized hint into (0,1) so it shares the codomain of the
// squashed discriminator scores.
template <typename S>
TensorT<S> squash_hint01(const StyleHintT<S>& hint) {
  Tape<S> tape;
  return tape.value(tape.sigmoid(tape.constant(hint.values)));
}

// Non-saturating generator term -E log D(fake), shared by both modes.
template <typename S>
int gan_generator_loss_tape(Tape<S>& tape, int d_fake_raw) {
  const S lo = static_cast<S>(kLogClampMin), hi = S(1);
  int d_fake = tape.sigmoid(d_fake_raw);
  return tape.scale(tape.mean_all(tape.log(tape.clamp(d_fake, lo, hi))), S(-1));
}

// Eq. 3, elementwise over the F coordinates and averaged. Raw scores are
// squashed by the logistic; v_real01 must already live in (0,1).
template <typename S>
GanLossIds<S> acgan_loss_tape(Tape<S>& tape, int d_real_raw, int d_fake_raw,
                              int v_real01) {
  const TensorT<S>&dr = tape.value(d_real_raw), &v = tape.value(v_real01);
  GP_CHECK_SHAPE(dr.same_shape(v), "acgan scores ", shape_str(dr.shape()),
                 " vs style vector ", shape_str(v.shape()));
  const S lo = static_cast<S>(kLogClampMin), hi = S(1);
  int d_real = tape.sigmoid(d_real_raw);
  int d_fake = tape.sigmoid(d_fake_raw);
  // log(D(y) + (1 - V(y)))
  int real_term =
      tape.mean_all(tape.log(tape.clamp(tape.add(d_real, tape.rsub_const(S(1), v_real01)),
                                        lo, hi)));
  // log(1 - D(G_f))
  int fake_term = tape.mean_all(tape.log(tape.clamp(tape.rsub_const(S(1), d_fake), lo, hi)));
  GanLossIds<S> ids;
  ids.d_loss = tape.scale(tape.add(real_term, fake_term), S(-1));
  ids.g_loss = gan_generator_loss_tape(tape, d_fake_raw);
  return ids;
}

// Eq. 4 on scalar-head scores (N,1).
template <typename S>
GanLossIds<S> dcgan_loss_tape(Tape<S>& tape, int d_real_raw, int d_fake_raw) {
  const S lo = static_cast<S>(kLogClampMin), hi = S(1);
  int d_real = tape.sigmoid(d_real_raw);
  int d_fake = tape.sigmoid(d_fake_raw);
  int real_term = tape.mean_all(tape.log(tape.clamp(d_real, lo, hi)));
  int fake_term = tape.mean_all(tape.log(tape.clamp(tape.rsub_const(S(1), d_fake), lo, hi)));
  GanLossIds<S> ids;
  ids.d_loss = tape.scale(tape.add(real_term, fake_term), S(-1));
  ids.g_loss = gan_generator_loss_tape(tape, d_fake_raw);
  return ids;
}

template <typename S>
GanLossValues acgan_loss(const TensorT<S>& d_real_raw, const TensorT<S>& d_fake_raw,
                         const TensorT<S>& v_real01) {
  Tape<S> tape;
  GanLossIds<S> ids = acgan_loss_tape(tape, tape.constant(d_real_raw),
                                      tape.constant(d_fake_raw),
                                      tape.constant(v_real01));
  return {static_cast<double>(tape.value(ids.d_loss)[0]),
          static_cast<double>(tape.value(ids.g_loss)[0])};
}

template <typename S>
GanLossValues dcgan_loss(const TensorT<S>& d_real_raw, const TensorT<S>& d_fake_raw) {
  Tape<S> tape;
  GanLossIds<S> ids =
      dcgan_loss_tape(tape, tape.constant(d_real_raw), tape.constant(d_fake_raw));
  return {static_cast<double>(tape.value(ids.d_loss)[0]),
          static_cast<double>(tape.value(ids.g_loss)[0])};
}

// ---- final objective (Eq. 5) ----

template <typename S>
int generator_objective_tape(Tape<S>& tape, int l1_total, int g_gan,
                             const LossWeights& w) {
  return tape.add(g_gan, tape.scale(l1_total, static_cast<S>(w.lambda)));
}

inline double generator_objective(double l1_total, double g_gan, const LossWeights& w) {
  return g_gan + w.lambda * l1_total;
}

}  // namespace guidepaint

#endif  // GUIDEPAINT_LOSSES_HPP_
