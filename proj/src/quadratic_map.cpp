#include "ergostab/quadratic_map.hpp"

#include <algorithm>
#include <cmath>

#include "ergostab/error.hpp"

namespace ergostab {

double gmap_eval(double s, double w) { return 1.0 - s * w * (1.0 - w); }

double gmap_derivative(double s, double w) { return s * (2.0 * w - 1.0); }

double gmap_loss(double s, double w) {
  return gmap_eval(s, gmap_eval(s, gmap_eval(s, w)));
}

double gmap_grad(double s, double w) {
  const double a = gmap_eval(s, w);
  const double b = gmap_eval(s, a);
  return gmap_derivative(s, b) * gmap_derivative(s, a) * gmap_derivative(s, w);
}

double gmap_second_derivative(double s, double w) {
  // a = g(w), b = g(a); l' = g'(b) g'(a) g'(w), g'' = 2s.
  const double a = gmap_eval(s, w);
  const double b = gmap_eval(s, a);
  const double dw = gmap_derivative(s, w);
  const double da = gmap_derivative(s, a);
  const double db = gmap_derivative(s, b);
  const double g2 = 2.0 * s;
  return g2 * (da * dw) * (da * dw) + db * g2 * dw * dw + db * da * g2;
}

double gmap_sharpness(double s, double w) {
  return std::abs(gmap_second_derivative(s, w));
}

double gmap_max_sharpness(double s, double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) {
    throw ParameterError("gmap_max_sharpness: need points >= 2 and hi > lo");
  }
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double w = lo + (hi - lo) * i / (points - 1);
    best = std::max(best, gmap_sharpness(s, w));
  }
  return best;
}

QuadraticMapLoss::QuadraticMapLoss(double s) : s_(s) {
  if (!(s > 0.0 && s <= 4.0)) {
    throw ParameterError("QuadraticMapLoss: s must lie in (0, 4]");
  }
}

double QuadraticMapLoss::loss(const Sample&, const WeightVector& w) const {
  return gmap_loss(s_, w(0));
}

WeightVector QuadraticMapLoss::gradient(const Sample&, const WeightVector& w) const {
  WeightVector g(1);
  g(0) = gmap_grad(s_, w(0));
  return g;
}

void QuadraticMapLoss::accumulate_gradient(const Sample&, const WeightVector& w,
                                           double scale, WeightVector& out) const {
  out(0) += scale * gmap_grad(s_, w(0));
}

}  // namespace ergostab
