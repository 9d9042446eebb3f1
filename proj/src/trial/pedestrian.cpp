#include "xwalk/trial/pedestrian.hpp"

#include "xwalk/core/errors.hpp"

#include <algorithm>
#include <string>

namespace xwalk
{

std::string_view to_string(Head head) noexcept
{
  return head == Head::TowardPhone ? "phone" : "road";
}

Head head_from_string(std::string_view s)
{
  if (s == "road") {
    return Head::TowardRoad;
  }
  if (s == "phone") {
    return Head::TowardPhone;
  }
  throw InvalidArgument("unknown head orientation '" + std::string(s) + "'");
}

PedestrianState apply_ped_input(
  const PedestrianState & state, const PedInput & input, double dt, const PedLimits & limits,
  bool phone_available)
{
  PedestrianState next = state;

  const double target =
    std::clamp(input.walk.target_speed.value_or(0.0), 0.0, limits.speed_cap);
  const double max_change = limits.accel_limit * dt;
  next.speed = std::clamp(target, state.speed - max_change, state.speed + max_change);
  next.speed = std::clamp(next.speed, 0.0, limits.speed_cap);
  next.y = std::clamp(state.y + next.speed * dt, 0.0, limits.crossing_length);
  next.crossing_initiated = state.crossing_initiated || next.y > 0.0;

  if (!phone_available) {
    next.head = Head::TowardRoad;
    next.phone.maze_active = false;
    return next;
  }
  if (input.head_toggle) {
    next.head = *input.head_toggle;
  }
  if (next.head == Head::TowardRoad) {
    next.phone.maze_active = false;
  } else if (input.maze_move) {
    next.phone.maze_active = true;
    if (input.maze_move->completes_maze) {
      ++next.phone.mazes_solved;
    }
  }
  return next;
}

}  // namespace xwalk
