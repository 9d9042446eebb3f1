#include "xwalk/gateway/wire.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

namespace xwalk
{

std::string encode_frame(nlohmann::json payload)
{
  payload["v"] = kWireSchemaVersion;
  const std::string body = payload.dump();
  if (body.size() > kMaxFrameBytes) {
    throw InvalidArgument(fmt::format("frame of {} bytes exceeds the limit", body.size()));
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out += body;
  return out;
}

void FrameDecoder::feed(std::string_view bytes)
{
  buffer_.append(bytes);
}

std::optional<nlohmann::json> FrameDecoder::next()
{
  if (buffer_.size() < 4) {
    return std::nullopt;
  }
  const auto byte = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer_[i])); };
  const std::uint32_t n = (byte(0) << 24) | (byte(1) << 16) | (byte(2) << 8) | byte(3);
  if (n > kMaxFrameBytes) {
    throw ProtocolError(fmt::format("frame length {} exceeds the limit", n));
  }
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) {
    return std::nullopt;
  }
  const std::string body = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProtocolError("frame is not a JSON object");
  }
  if (!j.contains("v") || !j.at("v").is_number_integer() || j.at("v").get<int>() != kWireSchemaVersion) {
    throw SchemaMismatch(fmt::format("frame schema {} is not {}", j.value("v", nlohmann::json()).dump(), kWireSchemaVersion));
  }
  return j;
}

nlohmann::json input_frame_json(const InputFrame & in)
{
  nlohmann::json j = {
    {"type", "input"},
    {"walk_command", in.walk_command ? nlohmann::json(*in.walk_command) : nlohmann::json()},
    {"head_toggle", in.head_toggle},
    {"client_t", in.client_t},
  };
  if (in.maze_move) {
    j["maze_move"] = {
      {"dir", std::string(to_string(in.maze_move->direction))},
      {"done", in.maze_move->completes_maze}};
  } else {
    j["maze_move"] = nullptr;
  }
  return j;
}

InputFrame input_frame_from_json(const nlohmann::json & j)
{
  try {
    if (j.value("type", std::string()) != "input") {
      throw ProtocolError("expected an input frame");
    }
    InputFrame in;
    if (j.contains("walk_command") && !j.at("walk_command").is_null()) {
      in.walk_command = j.at("walk_command").get<double>();
    }
    in.head_toggle = j.value("head_toggle", false);
    if (j.contains("maze_move") && !j.at("maze_move").is_null()) {
      const auto & m = j.at("maze_move");
      in.maze_move = MazeMove{
        maze_direction_from_string(m.at("dir").get<std::string>()), m.value("done", false)};
    }
    in.client_t = j.value("client_t", 0.0);
    return in;
  } catch (const nlohmann::json::exception & e) {
    throw ProtocolError(fmt::format("malformed input frame: {}", e.what()));
  } catch (const InvalidArgument & e) {
    throw ProtocolError(fmt::format("malformed input frame: {}", e.what()));
  }
}

nlohmann::json tick_frame_json(const TickRecord & tick, std::string_view trial_status)
{
  nlohmann::json j = tick_json(tick);
  j["type"] = "tick";
  j["trial_status"] = std::string(trial_status);
  return j;
}

nlohmann::json ack_frame_json(std::int64_t server_tick, double client_t)
{
  return {{"type", "ack"}, {"server_tick", server_tick}, {"client_t", client_t}};
}

nlohmann::json error_frame_json(int status, std::string_view message)
{
  return {{"type", "error"}, {"status", status}, {"message", std::string(message)}};
}

}  // namespace xwalk
