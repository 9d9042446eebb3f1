#include "xwalk/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace xwalk
{

namespace
{
std::uint64_t splitmix(std::uint64_t z) noexcept
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept
{
  return splitmix(splitmix(splitmix(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

double Rng::uniform()
{
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::below(std::uint64_t n)
{
  if (n <= 1) {
    return 0;
  }
  // rejection sampling keeps the result unbiased
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t r = engine_();
  while (r >= limit) {
    r = engine_();
  }
  return r % n;
}

double Rng::exponential(double mean)
{
  return -mean * std::log1p(-uniform());
}

double Rng::normal(double mean, double sd)
{
  // Box-Muller without caching the second variate, so every call consumes
  // exactly two engine outputs.
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sd * z;
}

}  // namespace xwalk
