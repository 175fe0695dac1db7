#pragma once

#include <functional>
#include <utility>

#include "ergostab/landscape.hpp"
#include "ergostab/rng.hpp"

namespace ergostab {

using WeightSampler = std::function<WeightVector(RngStream&)>;
using SampleSampler = std::function<Sample(RngStream&)>;
using SamplePairSampler = std::function<std::pair<Sample, Sample>(RngStream&)>;

/// Pairs of independent draws.
SamplePairSampler independent_pairs(SampleSampler sampler);
/// z from `sampler`, z' = z + radius * N(0, I) on (x, y): probes the local
/// slope of z -> grad l(z, w).
SamplePairSampler local_pairs(SampleSampler sampler, double radius);

/// Sampled estimate of the data-Lipschitz constant L_D of z -> grad l(z, w).
/// This is a lower bound on the true constant and is reported as one.
struct LipschitzEstimate {
  double estimate = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
  bool lower_bound = true;
};

/// max over `weight_draws` sampled w and `pairs_per_weight` sampled (z, z') of
/// |grad l(z, w) - grad l(z', w)| / |z - z'|. Coincident pairs are skipped.
LipschitzEstimate grad_data_lipschitz(const Landscape& landscape,
                                      const WeightSampler& weights,
                                      const SamplePairSampler& pairs,
                                      std::size_t weight_draws,
                                      std::size_t pairs_per_weight, RngStream rng);

}  // namespace ergostab
