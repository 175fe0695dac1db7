#pragma once

#include <string_view>

#include "ergostab/landscape.hpp"
#include "ergostab/rng.hpp"

namespace ergostab {

enum class Activation { Tanh, Relu };
enum class LossKind { Squared, Logistic };

Activation parse_activation(std::string_view name);
LossKind parse_loss_kind(std::string_view name);

/// Two-layer network h(x, w) = W2 . act(W1 x + b1) + b2 with a scalar output.
///
/// The flat weight vector is laid out as [W1 (row-major, hidden x d_in), b1,
/// W2, b2]. Squared loss is (h - y)^2 / 2; logistic loss is log(1 + e^{-y h})
/// for labels y in {-1, +1}. The 0-1 error counts y h <= 0.
class ToyNetLandscape final : public Landscape {
 public:
  ToyNetLandscape(std::size_t input_dim, std::size_t hidden, Activation activation,
                  LossKind loss_kind);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  Activation activation() const noexcept { return activation_; }
  LossKind loss_kind() const noexcept { return loss_kind_; }

  std::size_t dimension() const override;
  double predict(const Eigen::VectorXd& x, const WeightVector& w) const;

  double loss(const Sample& z, const WeightVector& w) const override;
  WeightVector gradient(const Sample& z, const WeightVector& w) const override;
  void accumulate_gradient(const Sample& z, const WeightVector& w, double scale,
                           WeightVector& out) const override;
  double error(const Sample& z, const WeightVector& w) const override;

  /// Gaussian init with variance 1/fan_in per layer, zero biases.
  WeightVector initial_weights(RngStream& rng, double gain = 1.0) const;

 private:
  void check(const Sample& z, const WeightVector& w) const;
  double output_loss(double h, double y) const;
  double output_loss_derivative(double h, double y) const;

  std::size_t input_dim_;
  std::size_t hidden_;
  Activation activation_;
  LossKind loss_kind_;
};

}  // namespace ergostab
