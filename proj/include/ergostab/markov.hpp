#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ergostab {

/// Uniform partition of a loss interval into K bins.
struct LossPartition {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t bins = 64;

  /// Throws ParameterError when bins < 2 or upper <= lower.
  static LossPartition uniform(double lower, double upper, std::size_t bins);
  /// Uniform over [min, max] of series[runup:] widened by `margin` of the range
  /// on each side (a degenerate range is widened around its single value).
  static LossPartition fit(std::span<const double> series, std::size_t runup,
                           std::size_t bins = 64, double margin = 0.05);

  std::vector<double> edges() const;

  struct Bin {
    std::size_t index;
    bool clamped;  // value fell outside [lower, upper]
  };
  Bin locate(double value) const;
};

/// Row-stochastic Ulam matrix of a scalar series: a finite Markov surrogate of
/// the loss-space transfer operator (the loss process itself is not Markov).
struct TransitionMatrix {
  Eigen::MatrixXd probabilities;
  Eigen::MatrixXd counts;
  double smoothing = 0.0;
  std::size_t transitions = 0;
  std::size_t clamped = 0;
  std::vector<std::uint8_t> empty_rows;  // 1 where a row had no mass and was set uniform
  LossPartition partition;
};

/// Counts bin(l_t) -> bin(l_{t+1}) over series[runup:], then normalizes each row
/// as (counts + smoothing) / (row total + K * smoothing).
TransitionMatrix ulam_transition(std::span<const double> series, std::size_t runup,
                                 const LossPartition& partition, double smoothing = 0.0);

/// Row-stochastic matrix from explicit probabilities (validated).
TransitionMatrix transition_from_matrix(const Eigen::MatrixXd& probabilities);

struct SpectralReport {
  std::vector<double> moduli;  // descending; only the top two beyond the dense limit
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  double gap = 1.0;  // 1 - |lambda_2|
  Eigen::VectorXd stationary;
  bool dense = true;
};

/// Dense limit for the full eigen-solve; larger matrices use power iteration.
inline constexpr Eigen::Index kDenseSpectrumLimit = 512;

/// Spectrum of a row-stochastic matrix. Throws ParameterError otherwise.
SpectralReport spectral_gap(const Eigen::MatrixXd& P);

/// Koopman mode of affine dynamics w -> A w + b: f(w) = v^T w + v^T b / (theta - 1)
/// with v a left eigenvector of A, so that f(A w + b) = theta f(w).
struct KoopmanMode {
  std::complex<double> eigenvalue;
  Eigen::VectorXcd left_vector;
  std::complex<double> offset;
  /// False for theta == 1, where the affine offset has a pole.
  bool defined = true;

  std::complex<double> evaluate(const Eigen::VectorXd& w) const;
};

/// Symmetric A takes the self-adjoint path; otherwise A must be diagonalizable.
std::vector<KoopmanMode> koopman_spectrum_linear(const Eigen::MatrixXd& A,
                                                 const Eigen::VectorXd& b,
                                                 double unit_tol = 1e-12);

/// Total-variation distance |delta^T P^t - pi|_TV for t = 0..steps, with pi the
/// stationary distribution from spectral_gap.
std::vector<double> tv_convergence_curve(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& initial,
                                         std::size_t steps);
std::vector<double> tv_convergence_curve(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& initial,
                                         const Eigen::VectorXd& stationary,
                                         std::size_t steps);

}  // namespace ergostab
