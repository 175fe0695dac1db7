#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ergostab/landscape.hpp"

namespace ergostab {

/// Squared loss of a linear predictor, l(z, w) = (y - x^T (w - offset))^2 / 2.
///
/// With offset = 0 this is ordinary least squares; with offset = w_r and
/// x = grad h(x, w_r) it is the per-sample loss of the linearized network.
class LinearRegressionLoss final : public Landscape {
 public:
  explicit LinearRegressionLoss(std::size_t dimension);
  LinearRegressionLoss(std::size_t dimension, WeightVector offset);

  std::size_t dimension() const override { return dimension_; }
  double loss(const Sample& z, const WeightVector& w) const override;
  WeightVector gradient(const Sample& z, const WeightVector& w) const override;
  void accumulate_gradient(const Sample& z, const WeightVector& w, double scale,
                           WeightVector& out) const override;

 private:
  double residual(const Sample& z, const WeightVector& w) const;

  std::size_t dimension_;
  WeightVector offset_;
};

/// Linearized (NTK-regime) regression model: rows of `features` are
/// grad h(x_i, w_r), GD runs on (1/2) sum_i (y_i - features_i (w - w_r))^2.
struct LinearizedModel {
  Eigen::MatrixXd features;  // n x d_w
  Eigen::VectorXd labels;    // n
  WeightVector reference;    // d_w
  double eta = 0.1;
  double ridge = 0.0;

  /// Convenience constructor with w_r = 0.
  static LinearizedModel with_zero_reference(Eigen::MatrixXd features,
                                             Eigen::VectorXd labels, double eta);

  Eigen::Index samples() const { return features.rows(); }
  Eigen::Index weights() const { return features.cols(); }

  /// Throws DimensionError on inconsistent shapes, ParameterError on bad eta/ridge.
  void validate() const;

  /// Empirical NTK Gram matrix Phi Phi^T (n x n).
  Eigen::MatrixXd ntk() const;
  /// Phi^T Phi (d_w x d_w).
  Eigen::MatrixXd weight_kernel() const;
};

struct AffineDynamics {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  Eigen::VectorXd apply(const Eigen::VectorXd& w) const { return A * w + b; }
};

/// A = I - eta Phi^T Phi, b = eta (Phi^T Phi w_r + Phi^T Y).
AffineDynamics linearized_dynamics(const LinearizedModel& model);

/// w_r + Phi^T (Phi Phi^T + ridge I)^{-1} Y. Throws SingularityError when the
/// regularized NTK is numerically rank deficient.
WeightVector ntk_fixed_point(const LinearizedModel& model);

struct MixingRateReport {
  double rate = 1.0;       // 1 - eta * theta_min
  double theta_min = 0.0;  // smallest eigenvalue of Phi Phi^T
  double theta_max = 0.0;
  /// max_i |1 - eta theta_i| over the NTK spectrum: the contraction factor of
  /// the dynamics on the row space of Phi, where every orbit from w_r lives.
  double row_space_radius = 1.0;
  /// Spectral radius of the full A_S; equals 1 whenever d_w > n.
  double full_spectral_radius = 1.0;
  bool converges = false;
  std::optional<std::string> warning;
};

/// lambda = 1 - eta theta_min, with a warning attached when the row-space
/// dynamics do not contract.
MixingRateReport ntk_mixing_rate(const LinearizedModel& model);

}  // namespace ergostab
