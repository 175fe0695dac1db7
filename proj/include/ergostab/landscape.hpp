#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ergostab {

using WeightVector = Eigen::VectorXd;

/// One labelled example z = (x, y).
struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;

  friend bool operator==(const Sample& a, const Sample& b) {
    return a.y == b.y && a.x.size() == b.x.size() && a.x == b.x;
  }
};

using TrainingSet = std::vector<Sample>;

/// True if every entry of `w` is finite.
inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& w) {
  return w.allFinite();
}

/// Euclidean distance between two samples viewed as points of R^d x R.
double sample_distance(const Sample& a, const Sample& b);

/// A loss model: per-sample loss and its gradient with respect to the weights.
///
/// Implementations are immutable after construction and may be shared by any
/// number of concurrent orbit workers.
class Landscape {
 public:
  virtual ~Landscape() = default;

  /// Number of weights d_w.
  virtual std::size_t dimension() const = 0;

  virtual double loss(const Sample& z, const WeightVector& w) const = 0;

  virtual WeightVector gradient(const Sample& z, const WeightVector& w) const = 0;

  /// out += scale * gradient(z, w). Override to avoid the temporary.
  virtual void accumulate_gradient(const Sample& z, const WeightVector& w,
                                   double scale, WeightVector& out) const {
    out.noalias() += scale * gradient(z, w);
  }

  /// 0-1 error of the prediction. Regression-type landscapes return the loss.
  virtual double error(const Sample& z, const WeightVector& w) const {
    return loss(z, w);
  }
};

}  // namespace ergostab
