#include "ergostab/lipschitz.hpp"

#include <algorithm>

#include "ergostab/error.hpp"

namespace ergostab {

SamplePairSampler independent_pairs(SampleSampler sampler) {
  return [sampler = std::move(sampler)](RngStream& rng) {
    Sample a = sampler(rng);
    Sample b = sampler(rng);
    return std::pair{std::move(a), std::move(b)};
  };
}

SamplePairSampler local_pairs(SampleSampler sampler, double radius) {
  if (!(radius > 0.0)) throw ParameterError("local_pairs: radius must be positive");
  return [sampler = std::move(sampler), radius](RngStream& rng) {
    Sample a = sampler(rng);
    Sample b = a;
    for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x(i) += radius * rng.normal();
    b.y += radius * rng.normal();
    return std::pair{std::move(a), std::move(b)};
  };
}

LipschitzEstimate grad_data_lipschitz(const Landscape& landscape,
                                      const WeightSampler& weights,
                                      const SamplePairSampler& pairs,
                                      std::size_t weight_draws,
                                      std::size_t pairs_per_weight, RngStream rng) {
  if (weight_draws == 0 || pairs_per_weight == 0) {
    throw ParameterError("grad_data_lipschitz: trials must be >= 1");
  }
  LipschitzEstimate out;
  for (std::size_t i = 0; i < weight_draws; ++i) {
    const WeightVector w = weights(rng);
    for (std::size_t j = 0; j < pairs_per_weight; ++j) {
      const auto [z, zp] = pairs(rng);
      const double dz = sample_distance(z, zp);
      if (!(dz > 0.0)) {
        ++out.pairs_skipped;
        continue;
      }
      const double dg = (landscape.gradient(z, w) - landscape.gradient(zp, w)).norm();
      out.estimate = std::max(out.estimate, dg / dz);
      ++out.pairs_used;
    }
  }
  return out;
}

}  // namespace ergostab
