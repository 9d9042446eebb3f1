#pragma once

#include "xwalk/trial/trial.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xwalk
{

inline constexpr int kLogSchemaVersion = 1;

// JSON Lines trial log. Each trial is a block of
//   {"v":1,"type":"trial_header", ...meta, traffic, geometry, settings}
//   {"k":0,"t":0,"ped":{...},"led":{...},"vehicles":[...]}        one per tick
//   {"v":1,"type":"trial_footer","outcome":...,"wait_end_t":...,"cross_end_t":...}
// Numbers are written in shortest round-trip form, so reading a log back
// yields bit-identical doubles.

nlohmann::json header_json(const TrialRecord & record);
nlohmann::json tick_json(const TickRecord & tick);
nlohmann::json footer_json(const TrialRecord & record);

nlohmann::json ped_json(const PedestrianState & ped);
nlohmann::json led_json(const LedState & led);
nlohmann::json vehicle_json(const VehicleState & v);
nlohmann::json input_json(const PedInput & in);
PedInput input_from_json(const nlohmann::json & j);

std::string_view to_string(MazeDirection d) noexcept;
MazeDirection maze_direction_from_string(std::string_view s);

/// Appends one trial block.
void write_trial(std::ostream & os, const TrialRecord & record);

/// Parses every trial block in a stream. Throws SchemaMismatch on a version
/// other than kLogSchemaVersion and InvalidArgument (with `source` and line
/// number) on malformed content.
std::vector<TrialRecord> read_trials(std::istream & is, const std::string & source = "<stream>");
std::vector<TrialRecord> read_trial_file(const std::filesystem::path & path);

/// All *.jsonl files below `root` (recursively), in path order.
std::vector<std::filesystem::path> find_logs(const std::filesystem::path & root);

/// Feeds back the inputs recorded in a log, tick by tick.
class ReplayInputSource : public InputSource
{
public:
  explicit ReplayInputSource(const TrialRecord & record);
  std::optional<SourcedInput> next(const Observation & obs) override;

private:
  std::vector<SourcedInput> inputs_;
  std::size_t pos_ = 0;
};

struct ReplayReport
{
  bool identical = false;
  std::optional<std::int64_t> first_divergent_tick;
  std::string detail;
};

/// Re-simulates a recorded trial from its seed and inputs and compares the
/// result with the record tick by tick.
ReplayReport replay_trial(const TrialRecord & record);

}  // namespace xwalk
