#include "ergostab/dataset.hpp"

#include <cmath>
#include <string>

#include "ergostab/error.hpp"

namespace ergostab {

TeacherKind parse_teacher_kind(std::string_view name) {
  if (name == "linear") return TeacherKind::Linear;
  if (name == "logistic") return TeacherKind::Logistic;
  throw ParameterError("unknown teacher kind '" + std::string(name) + "'");
}

std::string_view to_string(TeacherKind kind) {
  return kind == TeacherKind::Linear ? "linear" : "logistic";
}

bool operator==(const Teacher& a, const Teacher& b) {
  return a.kind == b.kind && a.noise == b.noise &&
         a.weights.size() == b.weights.size() && a.weights == b.weights;
}

bool operator==(const SyntheticDataset& a, const SyntheticDataset& b) {
  return a.n == b.n && a.d == b.d && a.p == b.p && a.seed == b.seed &&
         a.teacher == b.teacher && a.samples == b.samples &&
         a.clean_labels == b.clean_labels && a.corrupted == b.corrupted;
}

Teacher make_teacher(TeacherKind kind, std::size_t d, std::uint64_t seed,
                     double noise) {
  if (d == 0) throw ParameterError("make_teacher: d must be positive");
  RngStream rng(seed, 0x7eac4e7);
  Teacher t;
  t.kind = kind;
  t.noise = noise;
  t.weights.resize(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < t.weights.size(); ++i) t.weights(i) = rng.normal();
  t.weights.normalize();
  return t;
}

LabelledPoint draw_point(const Teacher& teacher, double p, RngStream& rng) {
  const Eigen::Index d = teacher.weights.size();
  LabelledPoint out;
  out.sample.x.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) out.sample.x(i) = rng.normal();
  const double margin = teacher.weights.dot(out.sample.x);

  // Fixed draw pattern per point: label noise, corruption coin, replacement.
  const double label_draw = teacher.kind == TeacherKind::Linear ? rng.normal()
                                                                : rng.uniform();
  out.corrupted = rng.bernoulli(p);
  const double replacement = rng.normal();

  if (teacher.kind == TeacherKind::Linear) {
    out.clean_label = margin + teacher.noise * label_draw;
    const double spread =
        std::sqrt(teacher.weights.squaredNorm() + teacher.noise * teacher.noise);
    out.sample.y = out.corrupted ? spread * replacement : out.clean_label;
  } else {
    double positive = 0.0;
    if (teacher.noise > 0.0) {
      positive = label_draw < 1.0 / (1.0 + std::exp(-margin / teacher.noise)) ? 1.0 : 0.0;
    } else {
      positive = margin >= 0.0 ? 1.0 : 0.0;
    }
    out.clean_label = positive > 0.0 ? 1.0 : -1.0;
    out.sample.y = out.corrupted ? -out.clean_label : out.clean_label;
  }
  return out;
}

SyntheticDataset make_dataset(std::size_t n, double p, const Teacher& teacher,
                              std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 0.5)) {
    throw ParameterError("make_dataset: corruption probability must lie in [0, 0.5]");
  }
  if (teacher.weights.size() == 0) {
    throw ParameterError("make_dataset: teacher has no weights");
  }
  SyntheticDataset ds;
  ds.n = n;
  ds.d = static_cast<std::size_t>(teacher.weights.size());
  ds.p = p;
  ds.seed = seed;
  ds.teacher = teacher;
  ds.samples.reserve(n);
  ds.clean_labels.reserve(n);
  ds.corrupted.reserve(n);
  RngStream rng(seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    LabelledPoint pt = draw_point(teacher, p, rng);
    ds.samples.push_back(std::move(pt.sample));
    ds.clean_labels.push_back(pt.clean_label);
    ds.corrupted.push_back(pt.corrupted ? 1 : 0);
  }
  return ds;
}

Sample resample_point(const SyntheticDataset& dataset, RngStream& rng) {
  return draw_point(dataset.teacher, dataset.p, rng).sample;
}

TrainingSet draw_samples(const SyntheticDataset& dataset, std::size_t count,
                         RngStream& rng) {
  TrainingSet out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(resample_point(dataset, rng));
  return out;
}

}  // namespace ergostab
