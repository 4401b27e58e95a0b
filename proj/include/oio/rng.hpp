#pragma once

#include <cstdint>
#include <random>

namespace oio {

// splitmix64 step; used to derive independent substream seeds from (seed, stream id)
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// mt19937_64 wrapper with portable derived distributions (libstdc++'s
// std::poisson_distribution et al. are not pinned across implementations)
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // uniform on [0, 1), 53-bit resolution
  double uniform01();
  double uniform(double a, double b);
  // CDF inversion; lambda > 30 is split into independent chunks
  long poisson(double lambda);
  // standard normal via inverse-CDF approximation
  double normal();

 private:
  std::mt19937_64 eng_;
};

// inverse standard normal CDF (Acklam approximation, ~1e-9 relative error)
double inverse_normal_cdf(double p);

}  // namespace oio
