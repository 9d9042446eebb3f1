#include "xwalk/trial/record_io.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace xwalk
{

using nlohmann::json;

namespace
{

std::string_view to_string(YieldState s) noexcept
{
  switch (s) {
    case YieldState::None:
      return "none";
    case YieldState::Yielding:
      return "yield";
    case YieldState::Emergency:
      return "emergency";
  }
  return "none";
}

YieldState yield_from_string(std::string_view s)
{
  if (s == "none") {
    return YieldState::None;
  }
  if (s == "yield") {
    return YieldState::Yielding;
  }
  if (s == "emergency") {
    return YieldState::Emergency;
  }
  throw InvalidArgument(fmt::format("unknown yield state '{}'", s));
}

json optional_json(const std::optional<double> & v)
{
  return v ? json(*v) : json(nullptr);
}

json optional_json(const std::optional<std::int64_t> & v)
{
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json & j, const char * key)
{
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->get<T>();
}

PedestrianState ped_from_json(const json & j)
{
  PedestrianState p;
  p.y = j.at("y").get<double>();
  p.speed = j.at("v").get<double>();
  p.head = head_from_string(j.at("head").get<std::string>());
  p.crossing_initiated = j.at("init").get<bool>();
  const json & maze = j.at("maze");
  p.phone.mazes_solved = maze.at("solved").get<int>();
  p.phone.maze_active = maze.at("active").get<bool>();
  return p;
}

LedState led_from_json(const json & j)
{
  LedState l;
  l.mode = led_mode_from_string(j.at("mode").get<std::string>());
  l.phase = j.at("phase").get<std::int64_t>();
  l.initiation_seen = j.at("seen").get<bool>();
  return l;
}

VehicleState vehicle_from_json(const json & j, const TrafficConfig & traffic)
{
  VehicleState v;
  v.id = j.at("id").get<std::int64_t>();
  v.x = j.at("x").get<double>();
  v.v = j.at("v").get<double>();
  v.a = j.at("a").get<double>();
  v.spawn_time = j.at("s").get<double>();
  v.yield = yield_from_string(j.at("yield").get<std::string>());
  v.length = traffic.vehicle_length;
  v.width = traffic.vehicle_width;
  return v;
}

TickRecord tick_from_json(const json & j, const TrafficConfig & traffic)
{
  TickRecord t;
  t.k = j.at("k").get<std::int64_t>();
  t.t = j.at("t").get<double>();
  t.ped = ped_from_json(j.at("ped"));
  t.led = led_from_json(j.at("led"));
  for (const json & v : j.at("vehicles")) {
    t.vehicles.push_back(vehicle_from_json(v, traffic));
  }
  if (const auto it = j.find("in"); it != j.end() && !it->is_null()) {
    t.input = input_from_json(*it);
    t.input->timestamp = t.k - 1;
  }
  t.held = j.value("held", false);
  return t;
}

void check_version(const json & j)
{
  const auto it = j.find("v");
  if (it == j.end() || !it->is_number_integer() || it->get<int>() != kLogSchemaVersion) {
    throw SchemaMismatch(fmt::format(
      "log schema version {} is not supported (expected {})", it == j.end() ? "missing" : it->dump(),
      kLogSchemaVersion));
  }
}

void apply_header(const json & j, TrialRecord & r)
{
  TrialMeta & m = r.meta;
  m.session_id = j.value("session_id", "");
  m.trial_index = j.value("trial_index", std::int64_t{0});
  m.participant_id = j.value("participant_id", "");
  const json & p = j.at("participant");
  m.participant.female = p.at("female").get<bool>();
  m.participant.age_band = age_band_from_string(p.at("age_band").get<std::string>());
  m.condition = condition_from_string(j.at("condition").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.scenario = j.value("scenario", 0);
  m.attempt = j.value("attempt", 0);
  m.practice = j.value("practice", false);
  r.traffic = j.at("traffic").get<TrafficConfig>();
  r.geometry = j.at("geometry").get<RoadGeometry>();
  r.settings = j.at("settings").get<TrialSettings>();
  r.settings.ped.crossing_length = r.geometry.crossing_length;
}

void apply_footer(const json & j, TrialRecord & r)
{
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  if (const auto cause = optional_from<std::string>(j, "cause")) {
    r.cause = failure_cause_from_string(*cause);
  }
  r.wait_end_tick = optional_from<std::int64_t>(j, "wait_end_k");
  r.cross_end_tick = optional_from<std::int64_t>(j, "cross_end_k");
}

}  // namespace

std::string_view to_string(MazeDirection d) noexcept
{
  switch (d) {
    case MazeDirection::Up:
      return "up";
    case MazeDirection::Down:
      return "down";
    case MazeDirection::Left:
      return "left";
    case MazeDirection::Right:
      return "right";
  }
  return "up";
}

MazeDirection maze_direction_from_string(std::string_view s)
{
  if (s == "up") {
    return MazeDirection::Up;
  }
  if (s == "down") {
    return MazeDirection::Down;
  }
  if (s == "left") {
    return MazeDirection::Left;
  }
  if (s == "right") {
    return MazeDirection::Right;
  }
  throw InvalidArgument(fmt::format("unknown maze direction '{}'", s));
}

json ped_json(const PedestrianState & ped)
{
  return {
    {"y", ped.y},
    {"v", ped.speed},
    {"head", to_string(ped.head)},
    {"init", ped.crossing_initiated},
    {"maze", {{"solved", ped.phone.mazes_solved}, {"active", ped.phone.maze_active}}},
  };
}

json led_json(const LedState & led)
{
  return {{"mode", to_string(led.mode)}, {"phase", led.phase}, {"seen", led.initiation_seen}};
}

json vehicle_json(const VehicleState & v)
{
  return {
    {"id", v.id}, {"x", v.x}, {"v", v.v}, {"a", v.a}, {"s", v.spawn_time},
    {"yield", to_string(v.yield)},
  };
}

json input_json(const PedInput & in)
{
  json j = {{"walk", in.walk.target_speed ? json(*in.walk.target_speed) : json(nullptr)}};
  if (in.head_toggle) {
    j["head"] = to_string(*in.head_toggle);
  }
  if (in.maze_move) {
    j["maze"] = {
      {"dir", to_string(in.maze_move->direction)}, {"done", in.maze_move->completes_maze}};
  }
  return j;
}

PedInput input_from_json(const json & j)
{
  PedInput in;
  if (const auto it = j.find("walk"); it != j.end() && !it->is_null()) {
    in.walk = WalkCommand::walk(it->get<double>());
  }
  if (const auto it = j.find("head"); it != j.end() && !it->is_null()) {
    in.head_toggle = head_from_string(it->get<std::string>());
  }
  if (const auto it = j.find("maze"); it != j.end() && !it->is_null()) {
    in.maze_move = MazeMove{
      maze_direction_from_string(it->at("dir").get<std::string>()), it->value("done", false)};
  }
  return in;
}

json header_json(const TrialRecord & r)
{
  const TrialMeta & m = r.meta;
  return {
    {"v", kLogSchemaVersion},
    {"type", "trial_header"},
    {"session_id", m.session_id},
    {"trial_index", m.trial_index},
    {"participant_id", m.participant_id},
    {"participant",
     {{"female", m.participant.female}, {"age_band", to_string(m.participant.age_band)}}},
    {"condition", to_string(m.condition)},
    {"seed", m.seed},
    {"scenario", m.scenario},
    {"attempt", m.attempt},
    {"practice", m.practice},
    {"traffic", r.traffic},
    {"geometry", r.geometry},
    {"settings", r.settings},
  };
}

json tick_json(const TickRecord & tick)
{
  json vehicles = json::array();
  for (const VehicleState & v : tick.vehicles) {
    vehicles.push_back(vehicle_json(v));
  }
  json j = {
    {"k", tick.k},
    {"t", tick.t},
    {"ped", ped_json(tick.ped)},
    {"led", led_json(tick.led)},
    {"vehicles", std::move(vehicles)},
  };
  if (tick.input) {
    j["in"] = input_json(*tick.input);
  }
  if (tick.held) {
    j["held"] = true;
  }
  return j;
}

json footer_json(const TrialRecord & r)
{
  return {
    {"v", kLogSchemaVersion},
    {"type", "trial_footer"},
    {"outcome", r.outcome ? json(to_string(*r.outcome)) : json(nullptr)},
    {"cause", r.cause ? json(to_string(*r.cause)) : json(nullptr)},
    {"wait_end_k", optional_json(r.wait_end_tick)},
    {"cross_end_k", optional_json(r.cross_end_tick)},
    {"wait_end_t", optional_json(r.wait_end_t())},
    {"cross_end_t", optional_json(r.cross_end_t())},
    {"ticks", r.ticks.size()},
  };
}

void write_trial(std::ostream & os, const TrialRecord & record)
{
  os << header_json(record).dump() << '\n';
  for (const TickRecord & tick : record.ticks) {
    os << tick_json(tick).dump() << '\n';
  }
  os << footer_json(record).dump() << '\n';
}

std::vector<TrialRecord> read_trials(std::istream & is, const std::string & source)
{
  std::vector<TrialRecord> out;
  std::optional<TrialRecord> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      const std::string type = j.value("type", "");
      if (type == "trial_header") {
        check_version(j);
        if (current) {
          throw InvalidArgument("trial header before the previous trial's footer");
        }
        current.emplace();
        apply_header(j, *current);
      } else if (type == "trial_footer") {
        check_version(j);
        if (!current) {
          throw InvalidArgument("trial footer without header");
        }
        apply_footer(j, *current);
        out.push_back(std::move(*current));
        current.reset();
      } else if (type.empty()) {
        if (!current) {
          throw InvalidArgument("tick line outside a trial block");
        }
        current->ticks.push_back(tick_from_json(j, current->traffic));
      } else {
        throw InvalidArgument(fmt::format("unknown line type '{}'", type));
      }
    } catch (const SchemaMismatch & e) {
      throw SchemaMismatch(fmt::format("{}:{}: {}", source, line_no, e.what()));
    } catch (const json::exception & e) {
      throw InvalidArgument(fmt::format("{}:{}: {}", source, line_no, e.what()));
    } catch (const InvalidArgument & e) {
      throw InvalidArgument(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  if (current) {
    throw InvalidArgument(fmt::format("{}: truncated trial block (no footer)", source));
  }
  return out;
}

std::vector<TrialRecord> read_trial_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw InvalidArgument(fmt::format("cannot open log '{}'", path.string()));
  }
  return read_trials(in, path.string());
}

std::vector<std::filesystem::path> find_logs(const std::filesystem::path & root)
{
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_regular_file(root)) {
    out.push_back(root);
    return out;
  }
  if (!std::filesystem::is_directory(root)) {
    return out;
  }
  for (const auto & entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReplayInputSource::ReplayInputSource(const TrialRecord & record)
{
  inputs_.reserve(record.ticks.size());
  for (std::size_t i = 1; i < record.ticks.size(); ++i) {
    const TickRecord & tick = record.ticks[i];
    inputs_.push_back({tick.input.value_or(PedInput{}), tick.held});
  }
}

std::optional<SourcedInput> ReplayInputSource::next(const Observation & /*obs*/)
{
  if (pos_ >= inputs_.size()) {
    return std::nullopt;
  }
  return inputs_[pos_++];
}

namespace
{

std::string first_difference(const TickRecord & a, const TickRecord & b)
{
  if (a.t != b.t || a.k != b.k) {
    return "tick time";
  }
  if (!(a.ped == b.ped)) {
    return fmt::format("pedestrian state (y {} vs {})", a.ped.y, b.ped.y);
  }
  if (!(a.led == b.led)) {
    return "LED state";
  }
  if (a.vehicles.size() != b.vehicles.size()) {
    return fmt::format("vehicle count {} vs {}", a.vehicles.size(), b.vehicles.size());
  }
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    if (!(a.vehicles[i] == b.vehicles[i])) {
      return fmt::format(
        "vehicle {} (x {} vs {}, v {} vs {})", a.vehicles[i].id, a.vehicles[i].x, b.vehicles[i].x,
        a.vehicles[i].v, b.vehicles[i].v);
    }
  }
  if (a.held != b.held || a.input != b.input) {
    return "input";
  }
  return {};
}

}  // namespace

ReplayReport replay_trial(const TrialRecord & record)
{
  TrialSetup setup{record.traffic, record.geometry, record.settings, record.meta};
  ReplayInputSource source(record);
  TrialRunner runner(setup);

  ReplayReport report;
  auto diverge = [&](std::int64_t k, std::string detail) {
    report.identical = false;
    report.first_divergent_tick = k;
    report.detail = std::move(detail);
    return report;
  };

  if (record.ticks.empty()) {
    return diverge(0, "log holds no ticks");
  }
  std::size_t i = 0;
  while (true) {
    const TickRecord & mine = runner.record().ticks[i];
    if (i >= record.ticks.size()) {
      return diverge(mine.k, "re-simulation runs past the end of the log");
    }
    if (auto d = first_difference(mine, record.ticks[i]); !d.empty()) {
      return diverge(record.ticks[i].k, std::move(d));
    }
    ++i;
    if (runner.finished()) {
      break;
    }
    auto in = source.next(runner.observation());
    if (!in) {
      return diverge(record.ticks.back().k, "log ends before the trial outcome");
    }
    runner.step(*in);
  }
  if (i != record.ticks.size()) {
    return diverge(record.ticks[i].k, "log continues past the re-simulated outcome");
  }
  const TrialRecord & mine = runner.record();
  if (
    mine.outcome != record.outcome || mine.cause != record.cause ||
    mine.wait_end_tick != record.wait_end_tick || mine.cross_end_tick != record.cross_end_tick) {
    return diverge(record.ticks.back().k, "outcome differs");
  }
  report.identical = true;
  return report;
}

}  // namespace xwalk
