#pragma once

#include "ergostab/landscape.hpp"

namespace ergostab {

/// g_s(w) = 1 - s w (1 - w), the quadratic map of the unit interval.
double gmap_eval(double s, double w);
/// g_s'(w) = s (2w - 1).
double gmap_derivative(double s, double w);

/// l_s = g_s o g_s o g_s.
double gmap_loss(double s, double w);
/// Chain rule: l_s'(w) = g_s'(g_s(g_s(w))) g_s'(g_s(w)) g_s'(w).
double gmap_grad(double s, double w);
/// Analytic l_s''(w).
double gmap_second_derivative(double s, double w);
/// Sharpness a(w) = |l_s''(w)|.
double gmap_sharpness(double s, double w);

/// sup of the sharpness over a uniform grid of `points` nodes on [lo, hi].
double gmap_max_sharpness(double s, double lo = 0.0, double hi = 1.0,
                          int points = 10001);

/// One-dimensional landscape l(z, w) = l_s(w[0]); the sample is ignored.
class QuadraticMapLoss final : public Landscape {
 public:
  /// Throws ParameterError unless s lies in (0, 4].
  explicit QuadraticMapLoss(double s);

  double s() const noexcept { return s_; }

  std::size_t dimension() const override { return 1; }
  double loss(const Sample& z, const WeightVector& w) const override;
  WeightVector gradient(const Sample& z, const WeightVector& w) const override;
  void accumulate_gradient(const Sample& z, const WeightVector& w, double scale,
                           WeightVector& out) const override;

  /// GD map phi(w) = w - eta l_s'(w) and its derivative 1 - eta l_s''(w).
  double gd_map(double eta, double w) const { return w - eta * gmap_grad(s_, w); }
  double gd_map_derivative(double eta, double w) const {
    return 1.0 - eta * gmap_second_derivative(s_, w);
  }

 private:
  double s_;
};

}  // namespace ergostab
