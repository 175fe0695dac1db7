#include "ergostab/toynet.hpp"

#include <cmath>
#include <string>

#include "ergostab/error.hpp"

namespace ergostab {

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared") return LossKind::Squared;
  if (name == "logistic") return LossKind::Logistic;
  throw ParameterError("unknown loss kind '" + std::string(name) + "'");
}

namespace {

using ConstMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>;
using MutMat =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

ToyNetLandscape::ToyNetLandscape(std::size_t input_dim, std::size_t hidden,
                                 Activation activation, LossKind loss_kind)
    : input_dim_(input_dim), hidden_(hidden), activation_(activation),
      loss_kind_(loss_kind) {
  if (input_dim == 0 || hidden == 0) {
    throw ParameterError("ToyNetLandscape: layer widths must be positive");
  }
}

std::size_t ToyNetLandscape::dimension() const {
  return hidden_ * input_dim_ + 2 * hidden_ + 1;
}

void ToyNetLandscape::check(const Sample& z, const WeightVector& w) const {
  if (static_cast<std::size_t>(w.size()) != dimension()) {
    throw DimensionError("ToyNetLandscape: weight vector does not match the layout");
  }
  if (static_cast<std::size_t>(z.x.size()) != input_dim_) {
    throw DimensionError("ToyNetLandscape: input dimension mismatch");
  }
}

double ToyNetLandscape::predict(const Eigen::VectorXd& x, const WeightVector& w) const {
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto D = static_cast<Eigen::Index>(input_dim_);
  ConstMat W1(w.data(), H, D);
  const auto b1 = w.segment(H * D, H);
  const auto W2 = w.segment(H * D + H, H);
  const double b2 = w(H * D + 2 * H);
  Eigen::VectorXd a = W1 * x + b1;
  if (activation_ == Activation::Tanh) {
    a = a.array().tanh();
  } else {
    a = a.cwiseMax(0.0);
  }
  return W2.dot(a) + b2;
}

double ToyNetLandscape::output_loss(double h, double y) const {
  if (loss_kind_ == LossKind::Squared) {
    const double r = h - y;
    return 0.5 * r * r;
  }
  return softplus(-y * h);
}

double ToyNetLandscape::output_loss_derivative(double h, double y) const {
  if (loss_kind_ == LossKind::Squared) return h - y;
  return -y * sigmoid(-y * h);
}

double ToyNetLandscape::loss(const Sample& z, const WeightVector& w) const {
  check(z, w);
  return output_loss(predict(z.x, w), z.y);
}

double ToyNetLandscape::error(const Sample& z, const WeightVector& w) const {
  check(z, w);
  return z.y * predict(z.x, w) <= 0.0 ? 1.0 : 0.0;
}

WeightVector ToyNetLandscape::gradient(const Sample& z, const WeightVector& w) const {
  WeightVector g = WeightVector::Zero(w.size());
  accumulate_gradient(z, w, 1.0, g);
  return g;
}

void ToyNetLandscape::accumulate_gradient(const Sample& z, const WeightVector& w,
                                          double scale, WeightVector& out) const {
  check(z, w);
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto D = static_cast<Eigen::Index>(input_dim_);
  ConstMat W1(w.data(), H, D);
  const auto b1 = w.segment(H * D, H);
  const auto W2 = w.segment(H * D + H, H);
  const double b2 = w(H * D + 2 * H);

  const Eigen::VectorXd pre = W1 * z.x + b1;
  Eigen::VectorXd act(H);
  Eigen::VectorXd dact(H);
  if (activation_ == Activation::Tanh) {
    act = pre.array().tanh();
    dact = 1.0 - act.array().square();
  } else {
    act = pre.cwiseMax(0.0);
    dact = (pre.array() > 0.0).cast<double>();
  }
  const double h = W2.dot(act) + b2;
  const double dout = scale * output_loss_derivative(h, z.y);

  const Eigen::VectorXd dpre = dout * W2.cwiseProduct(dact);
  MutMat dW1(out.data(), H, D);
  dW1.noalias() += dpre * z.x.transpose();
  out.segment(H * D, H) += dpre;
  out.segment(H * D + H, H) += dout * act;
  out(H * D + 2 * H) += dout;
}

WeightVector ToyNetLandscape::initial_weights(RngStream& rng, double gain) const {
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto D = static_cast<Eigen::Index>(input_dim_);
  WeightVector w = WeightVector::Zero(static_cast<Eigen::Index>(dimension()));
  const double s1 = gain / std::sqrt(static_cast<double>(D));
  const double s2 = gain / std::sqrt(static_cast<double>(H));
  for (Eigen::Index i = 0; i < H * D; ++i) w(i) = s1 * rng.normal();
  for (Eigen::Index j = 0; j < H; ++j) w(H * D + H + j) = s2 * rng.normal();
  return w;
}

}  // namespace ergostab
