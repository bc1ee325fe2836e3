#pragma once

// Adaptive Dormand-Prince 5(4) integrator for linear-algebra state vectors.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "dce/errors.hpp"

namespace dce {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: unbounded
  std::int64_t max_steps = 100'000'000;
};

struct OdeStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_calls = 0;
};

/// Rhs is callable as rhs(t, y, dydt) with dydt pre-sized. The integrator is
/// stateful so consecutive integrate() calls over adjacent intervals reuse the
/// last accepted step size.
template <class Vector, class Rhs>
class DormandPrince {
 public:
  DormandPrince(Rhs rhs, OdeOptions opts) : rhs_(std::move(rhs)), opts_(opts) {
    if (!(opts_.rtol > 0.0) || !(opts_.atol >= 0.0)) {
      throw ValidationError("integrator tolerances must be positive");
    }
  }

  const OdeStats& stats() const noexcept { return stats_; }

  /// Advances y from t0 to t1 (either direction).
  void integrate(Vector& y, double t0, double t1) {
    if (t1 == t0) return;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    resize(y.size());
    double t = t0;
    eval(t, y, k1_);
    double h = (h_ > 0.0 && h_dir_ == dir) ? h_ : opts_.initial_step;
    if (h <= 0.0) h = initial_step(y, t, dir);
    h_dir_ = dir;

    while (dir * (t1 - t) > 0.0) {
      if (stats_.accepted + stats_.rejected >= opts_.max_steps) {
        throw IntegratorError("step budget exhausted");
      }
      double h_try = opts_.max_step > 0.0 ? std::min(h, opts_.max_step) : h;
      const bool last = h_try >= std::abs(t1 - t);
      if (last) h_try = std::abs(t1 - t);
      const double err = step(y, t, dir * h_try);
      if (err <= 1.0) {
        ++stats_.accepted;
        t = last ? t1 : t + dir * h_try;
        y.swap(y_new_);
        k1_.swap(k7_);
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = last ? std::max(h, h_try * fac) : h_try * fac;
      } else {
        ++stats_.rejected;
        h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
          throw IntegratorError("step size underflow at t = " + std::to_string(t));
        }
      }
    }
    h_ = h;
  }

 private:
  void resize(Eigen::Index n) {
    if (k1_.size() == n) return;
    for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y_new_}) v->resize(n);
  }

  void eval(double t, const Vector& y, Vector& out) {
    ++stats_.rhs_calls;
    rhs_(t, y, out);
  }

  double initial_step(const Vector& y, double t, double dir) {
    const double sc0 = opts_.atol + opts_.rtol * y.cwiseAbs().maxCoeff();
    const double d0 = y.cwiseAbs().maxCoeff() / sc0;
    const double d1 = k1_.cwiseAbs().maxCoeff() / sc0;
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    tmp_.noalias() = y + dir * h0 * k1_;
    eval(t + dir * h0, tmp_, k2_);
    const double d2 = (k2_ - k1_).cwiseAbs().maxCoeff() / sc0 / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min(100.0 * h0, h1);
  }

  // One trial step from (t, y) with signed size h; fills y_new_ and k7_ and
  // returns the scaled error norm.
  double step(const Vector& y, double t, double h) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    tmp_.noalias() = y + (h * a21) * k1_;
    eval(t + h / 5, tmp_, k2_);
    tmp_.noalias() = y + h * (a31 * k1_ + a32 * k2_);
    eval(t + 3 * h / 10, tmp_, k3_);
    tmp_.noalias() = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(t + 4 * h / 5, tmp_, k4_);
    tmp_.noalias() = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(t + 8 * h / 9, tmp_, k5_);
    tmp_.noalias() = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(t + h, tmp_, k6_);
    y_new_.noalias() = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    eval(t + h, y_new_, k7_);
    tmp_.noalias() = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y_new_[i]));
      err = std::max(err, std::abs(tmp_[i]) / scale);
    }
    return std::isfinite(err) ? err : 1e300;
  }

  Rhs rhs_;
  OdeOptions opts_;
  OdeStats stats_;
  double h_ = 0.0;
  double h_dir_ = 0.0;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
};

template <class Vector, class Rhs>
DormandPrince<Vector, Rhs> make_dormand_prince(Rhs rhs, OdeOptions opts) {
  return DormandPrince<Vector, Rhs>(std::move(rhs), opts);
}

}  // namespace dce

namespace dce {

/// Integrating-factor (Lawson) form of Dormand-Prince 5(4) for linear
/// problems y' = D y + B(y) with D diagonal. Problem provides
///   void coupling(const Vector& y, Vector& out) const;   // out = B(y)
///   void apply_exp(double s, Vector& y) const;           // y <- exp(D s) y
///   double max_decay_rate() const;                       // max |Re D|
/// The stiff diagonal part is propagated exactly; the step size is limited by
/// B alone.
template <class Vector, class Problem>
class LawsonDormandPrince {
 public:
  LawsonDormandPrince(const Problem& problem, OdeOptions opts) : pb_(problem), opts_(opts) {
    if (!(opts_.rtol > 0.0) || !(opts_.atol >= 0.0)) {
      throw ValidationError("integrator tolerances must be positive");
    }
  }

  const OdeStats& stats() const noexcept { return stats_; }

  void integrate(Vector& y, double t0, double t1) {
    if (t1 == t0) return;
    if (t1 < t0) throw ValidationError("integrating-factor integrator runs forward only");
    const Eigen::Index n = y.size();
    for (Vector* v : {&k_[0], &k_[1], &k_[2], &k_[3], &k_[4], &k_[5], &k_[6], &tmp_, &y_new_}) {
      v->resize(n);
    }
    // Keep exp(+|D| h) representable when forming the stage frame.
    const double decay = pb_.max_decay_rate();
    const double h_cap = decay > 0.0 ? 600.0 / decay : 0.0;

    double t = t0;
    eval(y, k_[0]);
    double h = h_ > 0.0 ? h_ : initial_step(y);
    while (t1 - t > 0.0) {
      if (stats_.accepted + stats_.rejected >= opts_.max_steps) {
        throw IntegratorError("step budget exhausted");
      }
      double h_try = h;
      if (opts_.max_step > 0.0) h_try = std::min(h_try, opts_.max_step);
      if (h_cap > 0.0) h_try = std::min(h_try, h_cap);
      const bool last = h_try >= t1 - t;
      if (last) h_try = t1 - t;
      const double err = step(y, h_try);
      if (err <= 1.0) {
        ++stats_.accepted;
        t = last ? t1 : t + h_try;
        y.swap(y_new_);
        k_[0].swap(k_[6]);
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = last ? std::max(h, h_try * fac) : h_try * fac;
      } else {
        ++stats_.rejected;
        h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
          throw IntegratorError("step size underflow at t = " + std::to_string(t));
        }
      }
    }
    h_ = h;
  }

 private:
  void eval(const Vector& y, Vector& out) {
    ++stats_.rhs_calls;
    pb_.coupling(y, out);
  }

  double initial_step(const Vector& y) {
    const double sc = opts_.atol + opts_.rtol * y.cwiseAbs().maxCoeff();
    const double d0 = y.cwiseAbs().maxCoeff() / sc;
    const double d1 = k_[0].cwiseAbs().maxCoeff() / sc;
    return (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }

  // Stages in the frame of the step start: w_j = exp(-D c_j h) k_j,
  // Y_i = exp(D c_i h) (y + h sum_j a_ij w_j).
  double step(const Vector& y, double h) {
    static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr double e[7] = {71.0 / 57600,      0.0,          -71.0 / 16695, 71.0 / 1920,
                                    -17253.0 / 339200, 22.0 / 525,   -1.0 / 40};

    // k_[0] already holds B(y) = w_0.
    for (int i = 1; i < 7; ++i) {
      tmp_ = y;
      for (int j = 0; j < i; ++j) {
        if (a[i][j] != 0.0) tmp_ += (h * a[i][j]) * k_[j];
      }
      Vector& stage = i == 6 ? y_new_ : tmp_;
      if (i == 6) y_new_.swap(tmp_);
      pb_.apply_exp(c[i] * h, stage);
      eval(stage, k_[i]);
      if (i < 6) pb_.apply_exp(-c[i] * h, k_[i]);
    }
    // y_new_ = exp(Dh)(y + h sum b_j w_j) is stage 7; its B value k_[6] is
    // in the end-of-step frame (next step's w_0).
    tmp_ = (h * e[6]) * k_[6];
    pb_.apply_exp(-h, tmp_);
    for (int j = 0; j < 6; ++j) {
      if (e[j] != 0.0) tmp_ += (h * e[j]) * k_[j];
    }
    pb_.apply_exp(h, tmp_);

    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y_new_[i]));
      err = std::max(err, std::abs(tmp_[i]) / scale);
    }
    return std::isfinite(err) ? err : 1e300;
  }

  const Problem& pb_;
  OdeOptions opts_;
  OdeStats stats_;
  double h_ = 0.0;
  Vector k_[7];
  Vector tmp_, y_new_;
};

}  // namespace dce
