#include "ergostab/linear_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergostab/error.hpp"

namespace ergostab {

LinearRegressionLoss::LinearRegressionLoss(std::size_t dimension)
    : LinearRegressionLoss(dimension, WeightVector::Zero(static_cast<Eigen::Index>(dimension))) {}

LinearRegressionLoss::LinearRegressionLoss(std::size_t dimension, WeightVector offset)
    : dimension_(dimension), offset_(std::move(offset)) {
  if (static_cast<std::size_t>(offset_.size()) != dimension_) {
    throw DimensionError("LinearRegressionLoss: offset dimension mismatch");
  }
}

double LinearRegressionLoss::residual(const Sample& z, const WeightVector& w) const {
  if (static_cast<std::size_t>(z.x.size()) != dimension_ ||
      static_cast<std::size_t>(w.size()) != dimension_) {
    throw DimensionError("LinearRegressionLoss: sample/weight dimension mismatch");
  }
  return z.y - z.x.dot(w - offset_);
}

double LinearRegressionLoss::loss(const Sample& z, const WeightVector& w) const {
  const double r = residual(z, w);
  return 0.5 * r * r;
}

WeightVector LinearRegressionLoss::gradient(const Sample& z, const WeightVector& w) const {
  return -residual(z, w) * z.x;
}

void LinearRegressionLoss::accumulate_gradient(const Sample& z, const WeightVector& w,
                                               double scale, WeightVector& out) const {
  out.noalias() -= (scale * residual(z, w)) * z.x;
}

LinearizedModel LinearizedModel::with_zero_reference(Eigen::MatrixXd features,
                                                     Eigen::VectorXd labels,
                                                     double eta) {
  LinearizedModel m;
  m.reference = WeightVector::Zero(features.cols());
  m.features = std::move(features);
  m.labels = std::move(labels);
  m.eta = eta;
  return m;
}

void LinearizedModel::validate() const {
  if (features.rows() == 0 || features.cols() == 0) {
    throw DimensionError("LinearizedModel: empty feature matrix");
  }
  if (labels.size() != features.rows()) {
    throw DimensionError("LinearizedModel: labels must have one entry per feature row");
  }
  if (reference.size() != features.cols()) {
    throw DimensionError("LinearizedModel: reference weights must have d_w entries");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ParameterError("LinearizedModel: eta must be finite and non-negative");
  }
  if (!(ridge >= 0.0)) throw ParameterError("LinearizedModel: ridge must be >= 0");
}

Eigen::MatrixXd LinearizedModel::ntk() const {
  return features * features.transpose();
}

Eigen::MatrixXd LinearizedModel::weight_kernel() const {
  return features.transpose() * features;
}

AffineDynamics linearized_dynamics(const LinearizedModel& model) {
  model.validate();
  const Eigen::MatrixXd K = model.weight_kernel();
  AffineDynamics dyn;
  dyn.A = Eigen::MatrixXd::Identity(K.rows(), K.cols()) - model.eta * K;
  dyn.b = model.eta * (K * model.reference + model.features.transpose() * model.labels);
  return dyn;
}

WeightVector ntk_fixed_point(const LinearizedModel& model) {
  model.validate();
  Eigen::MatrixXd K = model.ntk();
  K.diagonal().array() += model.ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  const Eigen::VectorXd& theta = eig.eigenvalues();
  const double scale = std::max(theta.cwiseAbs().maxCoeff(), 1.0);
  const double tol = static_cast<double>(K.rows()) *
                     std::numeric_limits<double>::epsilon() * scale * 16.0;
  if (theta.minCoeff() <= tol) {
    throw SingularityError(
        "ntk_fixed_point: Phi Phi^T is numerically rank deficient; set a ridge");
  }
  const Eigen::VectorXd alpha =
      eig.eigenvectors() *
      (theta.cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * model.labels));
  return model.reference + model.features.transpose() * alpha;
}

MixingRateReport ntk_mixing_rate(const LinearizedModel& model) {
  model.validate();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.ntk(),
                                                     Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& theta = eig.eigenvalues();
  MixingRateReport r;
  r.theta_min = theta.minCoeff();
  r.theta_max = theta.maxCoeff();
  r.rate = 1.0 - model.eta * r.theta_min;
  r.row_space_radius = std::max(std::abs(1.0 - model.eta * r.theta_min),
                                std::abs(1.0 - model.eta * r.theta_max));
  r.full_spectral_radius = r.row_space_radius;
  if (model.weights() > model.samples()) {
    r.full_spectral_radius = std::max(r.full_spectral_radius, 1.0);
  }
  r.converges = r.row_space_radius < 1.0;
  if (!r.converges) {
    r.warning = "spectral radius of A_S on the row space of Phi is >= 1; "
                "the linear dynamics do not converge";
  }
  return r;
}

}  // namespace ergostab
