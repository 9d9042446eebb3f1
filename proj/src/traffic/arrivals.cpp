#include "xwalk/traffic/arrivals.hpp"

#include "xwalk/core/errors.hpp"
#include "xwalk/core/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xwalk
{

namespace
{
constexpr std::uint64_t kScheduleStream = 0x5C4EDu;
constexpr int kPlacementAttempts = 256;

// Headways live on a 2^-20 s grid. Sums of such values stay exact in double
// arithmetic over any realistic horizon, so spawn-time differences reproduce
// the drawn headways bit for bit.
double quantize(double seconds)
{
  return std::ldexp(std::round(std::ldexp(seconds, 20)), -20);
}

bool non_adjacent(const std::vector<std::size_t> & picks, std::size_t candidate)
{
  return std::none_of(picks.begin(), picks.end(), [&](std::size_t p) {
    return (p > candidate ? p - candidate : candidate - p) < 2;
  });
}
}  // namespace

std::vector<double> ArrivalSchedule::headways() const
{
  std::vector<double> out;
  if (spawn_times.size() < 2) {
    return out;
  }
  out.reserve(spawn_times.size() - 1);
  for (std::size_t i = 0; i + 1 < spawn_times.size(); ++i) {
    out.push_back(spawn_times[i + 1] - spawn_times[i]);
  }
  return out;
}

ArrivalSchedule generate_arrival_schedule(const TrafficConfig & config, double horizon)
{
  if (!(horizon > 0.0)) {
    throw InvalidArgument(fmt::format("schedule horizon must be positive, got {}", horizon));
  }
  config.validate();
  if (horizon < config.forced_gap_window) {
    throw InvalidArgument(fmt::format(
      "schedule horizon {} s is shorter than the forced-gap window {} s", horizon,
      config.forced_gap_window));
  }

  Rng rng(derive_seed(config.seed, kScheduleStream));
  const double excess_mean = config.mean_headway - config.min_headway;
  const double forced_total =
    std::accumulate(config.forced_safe_gaps.begin(), config.forced_safe_gaps.end(), 0.0);

  // gaps[0] is the lead-in from trial start to the first arrival; gaps[i + 1]
  // is the headway between vehicles i and i + 1.
  std::vector<double> gaps;
  double total = 0.0;
  while (total <= horizon + forced_total) {
    const double g = quantize(config.min_headway + rng.exponential(excess_mean));
    gaps.push_back(g);
    total += g;
  }

  const std::size_t n_forced = config.forced_safe_gaps.size();
  std::vector<std::size_t> candidates;
  {
    double start = gaps[0];
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
      if (start + forced_total > config.forced_gap_window) {
        break;
      }
      candidates.push_back(i);
      start += gaps[i + 1];
    }
  }

  auto forced_ends_fit = [&](const std::vector<std::size_t> & picks) {
    std::vector<double> trial = gaps;
    for (std::size_t k = 0; k < picks.size(); ++k) {
      trial[picks[k] + 1] = config.forced_safe_gaps[k];
    }
    double t = trial[0];
    for (std::size_t i = 0; i + 1 < trial.size(); ++i) {
      const double end = t + trial[i + 1];
      const bool forced = std::find(picks.begin(), picks.end(), i) != picks.end();
      if (forced && end > config.forced_gap_window) {
        return false;
      }
      t = end;
    }
    return true;
  };

  std::vector<std::size_t> picks;
  bool placed = n_forced == 0;
  for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
    picks.clear();
    std::vector<std::size_t> pool = candidates;
    while (picks.size() < n_forced && !pool.empty()) {
      const std::size_t k = rng.below(pool.size());
      const std::size_t candidate = pool[k];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      if (non_adjacent(picks, candidate)) {
        picks.push_back(candidate);
      }
    }
    placed = picks.size() == n_forced && forced_ends_fit(picks);
  }
  if (!placed) {
    // Only reachable when the first window holds very few vehicles: fall back
    // to the earliest admissible slots.
    picks.clear();
    for (std::size_t k = 0; k < n_forced; ++k) {
      picks.push_back(2 * k);
    }
    while (gaps.size() < 2 * n_forced + 1) {
      gaps.push_back(quantize(config.min_headway + rng.exponential(excess_mean)));
    }
  }
  for (std::size_t k = 0; k < picks.size(); ++k) {
    gaps[picks[k] + 1] = config.forced_safe_gaps[k];
  }

  ArrivalSchedule schedule;
  double t = gaps[0];
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i > 0) {
      t += gaps[i];
    }
    if (t > horizon) {
      break;
    }
    schedule.spawn_times.push_back(t);
  }
  schedule.forced_gap_indices = picks;
  return schedule;
}

double measured_gap(const ArrivalSchedule & schedule, std::size_t i)
{
  if (i + 1 >= schedule.spawn_times.size()) {
    throw std::out_of_range(fmt::format(
      "no vehicle pair at index {} (schedule holds {} vehicles)", i, schedule.spawn_times.size()));
  }
  return schedule.spawn_times[i + 1] - schedule.spawn_times[i];
}

}  // namespace xwalk
