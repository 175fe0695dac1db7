#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ergostab/landscape.hpp"
#include "ergostab/rng.hpp"

namespace ergostab {

enum class TeacherKind { Linear, Logistic };

TeacherKind parse_teacher_kind(std::string_view name);
std::string_view to_string(TeacherKind kind);

/// Ground-truth label generator.
///
/// Linear: y = t^T x + noise * N(0, 1); a corrupted label is redrawn from
/// N(0, |t|^2 + noise^2), the marginal law of the clean label.
/// Logistic: y = +1 with probability sigmoid(t^T x / noise) (noise == 0 gives
/// the sign of t^T x); a corrupted label is flipped.
struct Teacher {
  TeacherKind kind = TeacherKind::Logistic;
  Eigen::VectorXd weights;
  double noise = 0.0;

  friend bool operator==(const Teacher& a, const Teacher& b);
};

/// Unit-norm random teacher direction in R^d.
Teacher make_teacher(TeacherKind kind, std::size_t d, std::uint64_t seed,
                     double noise = 0.0);

/// One draw of the corrupted-label generator with x ~ N(0, I_d).
struct LabelledPoint {
  Sample sample;
  double clean_label = 0.0;
  bool corrupted = false;
};

LabelledPoint draw_point(const Teacher& teacher, double p, RngStream& rng);

struct SyntheticDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  Teacher teacher;
  TrainingSet samples;
  std::vector<double> clean_labels;
  std::vector<std::uint8_t> corrupted;

  friend bool operator==(const SyntheticDataset& a, const SyntheticDataset& b);
};

/// n i.i.d. points from the generator, drawn from RngStream(seed, 0).
/// Throws ParameterError unless p lies in [0, 0.5].
SyntheticDataset make_dataset(std::size_t n, double p, const Teacher& teacher,
                              std::uint64_t seed);

/// One fresh point from the same (corrupted) distribution as `dataset`.
Sample resample_point(const SyntheticDataset& dataset, RngStream& rng);

/// `count` fresh points from the dataset's distribution.
TrainingSet draw_samples(const SyntheticDataset& dataset, std::size_t count,
                         RngStream& rng);

}  // namespace ergostab
