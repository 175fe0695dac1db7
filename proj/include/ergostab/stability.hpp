#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ergostab/dataset.hpp"
#include "ergostab/dynamics.hpp"
#include "ergostab/linear_models.hpp"
#include "ergostab/lipschitz.hpp"

namespace ergostab {

/// Two training sets of equal size that differ in at most one sample.
struct TrainingPair {
  TrainingSet base;
  TrainingSet perturbed;
};

/// S and S' = S with sample `index` replaced by `replacement`.
struct PerturbedPair {
  SyntheticDataset base;
  SyntheticDataset perturbed;
  std::size_t index = 0;
  Sample replacement;

  TrainingPair training_pair() const { return {base.samples, perturbed.samples}; }
};

/// Replaces sample k (0-based) by a fresh draw of the same corrupted-label
/// generator. Throws ParameterError when k is out of range.
PerturbedPair stochastic_perturbation(const SyntheticDataset& dataset, std::size_t k,
                                      RngStream& rng);
/// Same, with the replacement given explicitly.
PerturbedPair stochastic_perturbation(const SyntheticDataset& dataset, std::size_t k,
                                      Sample replacement);

enum class Statistic { Loss, Error };

Statistic parse_statistic(std::string_view name);
std::string_view to_string(Statistic statistic);

struct SasProtocol {
  std::size_t runup = 200;
  std::size_t window = 1200;
  /// Orbits per side; the statistic is the time average pooled over them.
  std::size_t inits_per_side = 1;
  /// Add the two swapped points z_k, z'_k of each pair to its probe set.
  bool include_swapped_points = true;
  Statistic statistic = Statistic::Loss;
};

struct PairStability {
  std::size_t pair_id = 0;
  bool valid = true;
  /// Probe set of this pair: the shared probes, then the swapped points if any.
  TrainingSet probes;
  std::vector<double> base_averages;
  std::vector<double> perturbed_averages;
  std::vector<double> diffs;
  double max_diff = 0.0;
  double mean_diff = 0.0;
  double sem = 0.0;  // standard error of the mean of diffs
};

/// beta_hat is a lower bound on the SAS coefficient: a max over finitely many
/// pairs and probes of |<l_z>_S - <l_z>_S'|.
struct StabilityReport {
  std::vector<PairStability> pairs;
  double beta_hat = 0.0;
  std::size_t valid_pairs = 0;
  std::size_t shared_probes = 0;
  SasProtocol protocol;
  OptimizerConfig optimizer;
  std::uint64_t master_seed = 0;
};

/// For pair p and init j, S and S' start from the same w0 and consume the same
/// batch stream, both derived from RngStream(master_seed, p). Orbits that
/// diverge invalidate their pair, which is then left out of beta_hat.
StabilityReport sas_lower_bound(const Landscape& landscape,
                                std::span<const TrainingPair> pairs,
                                const TrainingSet& probes, const OptimizerConfig& config,
                                const SasProtocol& protocol, std::uint64_t master_seed,
                                const WeightSampler& init, std::size_t workers = 1);

struct EmpiricalRisks {
  double empirical = 0.0;   // R_hat_S
  double population = 0.0;  // held-out estimate of R_S
  double gap = 0.0;
};

/// R_hat_S = mean of the training statistics, R_S = mean of the held-out ones.
/// Throws InsufficientDataError unless there is one statistic per training
/// sample and at least one held-out statistic.
EmpiricalRisks empirical_risks(std::span<const double> train_averages, std::size_t n,
                               std::span<const double> heldout_averages);

struct BoundReport {
  double empirical_risk = 0.0;
  std::optional<double> population_risk;
  std::optional<double> gap;
  double beta = 0.0;
  double L = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  double stability_term = 0.0;      // beta
  double concentration_term = 0.0;  // 2 (n beta + L) sqrt(log(2/delta) / 2n)
  double bound = 0.0;
};

/// R_S <= R_hat_S + beta + 2 (n beta + L) sqrt(log(2/delta) / (2n)).
BoundReport theorem1_bound(double empirical_risk, double beta, std::size_t n, double L,
                           double delta);

/// Order bound C m L_D eta / (n^2 (1 - lambda)). Throws DivergenceError when
/// lambda >= 1.
double theorem2_bound(double L_D, double lambda, std::size_t n, std::size_t m, double eta,
                      double C = 1.0);

struct WeylReport {
  double inverse_difference_norm = 0.0;  // |K_S^-1 - K_S'^-1|_2
  double inverse_theta_min_base = 0.0;
  double inverse_theta_min_perturbed = 0.0;
  double kernel_difference_norm = 0.0;  // |K_S' - K_S|_2
  std::vector<double> eigen_shifts;     // |theta_i(K_S') - theta_i(K_S)|, ascending order
  /// shift_i - |K_S' - K_S|_2; Weyl's inequality makes these <= 0.
  std::vector<double> residuals;
  double max_slack = 0.0;
};

/// Weyl comparison of the two empirical NTKs. Throws SingularityError if either
/// kernel is not invertible, DimensionError if the sample counts differ.
WeylReport weyl_stability_bound(const LinearizedModel& base,
                                const LinearizedModel& perturbed);

/// max_i |theta_i(B) - theta_i(A)| - |B - A|_2 for symmetric A, B.
double weyl_slack(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// beta + 2 C_Lip epsilon. Throws ParameterError on negative input.
double ntk_stability_transfer(double beta_linear, double C_Lip, double epsilon);

}  // namespace ergostab
