#pragma once

#include "xwalk/trial/record_io.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xwalk
{

inline constexpr int kWireSchemaVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 1u << 20;

// Frame layout: 4-byte big-endian payload length, then a UTF-8 JSON object
// carrying "v":1 and a "type".

/// Stamps "v" and serializes. Throws InvalidArgument when the payload
/// exceeds kMaxFrameBytes.
std::string encode_frame(nlohmann::json payload);

/// Incremental decoder for a byte stream of frames.
class FrameDecoder
{
public:
  void feed(std::string_view bytes);
  /// Next complete frame. Throws ProtocolError on an oversized length or bad
  /// JSON and SchemaMismatch on a missing or foreign "v".
  std::optional<nlohmann::json> next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

private:
  std::string buffer_;
};

/// Client input. head_toggle flips the current orientation; walk_command
/// null means stop.
struct InputFrame
{
  std::optional<double> walk_command;  // m/s target
  bool head_toggle = false;
  std::optional<MazeMove> maze_move;
  double client_t = 0.0;  // s, client clock

  bool operator==(const InputFrame &) const = default;
};

nlohmann::json input_frame_json(const InputFrame & in);
/// Throws ProtocolError on a malformed frame.
InputFrame input_frame_from_json(const nlohmann::json & j);

/// Tick frame: the logged tick plus the trial status ("running" or the
/// outcome).
nlohmann::json tick_frame_json(const TickRecord & tick, std::string_view trial_status);

nlohmann::json ack_frame_json(std::int64_t server_tick, double client_t);
nlohmann::json error_frame_json(int status, std::string_view message);

}  // namespace xwalk
