#pragma once

#include <cstdint>
#include <random>

namespace xwalk
{

/// Mixes a base seed with stream identifiers (splitmix64 finalizer). Used to
/// give every trial, scenario and agent an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Random source with platform-independent variate transforms.
///
/// std::mt19937_64 output is fixed by the standard but the <random>
/// distributions are not, so the transforms live here.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double exponential(double mean);
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace xwalk
