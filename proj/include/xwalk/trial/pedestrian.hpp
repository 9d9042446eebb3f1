#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace xwalk
{

enum class Head : std::uint8_t { TowardRoad, TowardPhone };

std::string_view to_string(Head head) noexcept;
Head head_from_string(std::string_view s);

/// Abstract smartphone maze task: the puzzle itself lives in the client.
struct PhoneTask
{
  int mazes_solved = 0;
  bool maze_active = false;

  bool operator==(const PhoneTask &) const = default;
};

struct PedestrianState
{
  double y = 0.0;      // m along the crossing axis, 0 = curb B
  double speed = 0.0;  // m/s
  Head head = Head::TowardRoad;
  PhoneTask phone;
  bool crossing_initiated = false;  // latched when y first exceeds 0

  bool operator==(const PedestrianState &) const = default;
};

enum class MazeDirection : std::uint8_t { Up, Down, Left, Right };

struct MazeMove
{
  MazeDirection direction = MazeDirection::Up;
  bool completes_maze = false;

  bool operator==(const MazeMove &) const = default;
};

/// Locomotion command: std::nullopt target means stop.
struct WalkCommand
{
  std::optional<double> target_speed;

  static WalkCommand stop() { return {}; }
  static WalkCommand walk(double speed) { return {speed}; }
  bool operator==(const WalkCommand &) const = default;
};

struct PedInput
{
  WalkCommand walk;
  std::optional<Head> head_toggle;
  std::optional<MazeMove> maze_move;
  std::int64_t timestamp = 0;  // tick index the input was produced for

  bool operator==(const PedInput &) const = default;
};

struct PedLimits
{
  double speed_cap = 2.0;     // m/s, running is not allowed
  double accel_limit = 1.5;   // m/s^2, both speeding up and slowing down
  double crossing_length = 5.0;
};

/// One pedestrian tick. Inputs are clamped, never rejected. When
/// `phone_available` is false (control condition) head toggles and maze
/// moves are ignored and the head stays on the road.
PedestrianState apply_ped_input(
  const PedestrianState & state, const PedInput & input, double dt, const PedLimits & limits,
  bool phone_available);

}  // namespace xwalk
