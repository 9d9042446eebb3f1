#pragma once

#include "xwalk/analytics/summary.hpp"
#include "xwalk/gateway/wire.hpp"
#include "xwalk/trial/session.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace xwalk
{

/// Questionnaire answers attached to a session.
struct ParticipantMeta
{
  std::string participant_id;
  ParticipantTags tags;
  std::optional<int> years_smartphone;
  std::optional<bool> has_license;
};

void to_json(nlohmann::json & j, const ParticipantMeta & m);
/// Accepts "gender": "female" | "male" and "age_band": "18-30" | "30+".
/// Throws InvalidArgument on malformed input.
void from_json(const nlohmann::json & j, ParticipantMeta & m);

enum class SessionStatus { Idle, TrialRunning, Complete };

std::string_view to_string(SessionStatus s) noexcept;

struct SessionDescriptor
{
  std::string session_id;
  ParticipantMeta participant;
  ConditionPlan plan;
  std::string created_at;  // UTC, ISO 8601
  SessionStatus status = SessionStatus::Idle;
  std::uint64_t seed = 0;
};

nlohmann::json descriptor_json(const SessionDescriptor & d);

struct GatewayConfig
{
  std::filesystem::path root = "sessions";
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  int trial_budget = 200;
  std::uint64_t seed = 0;
};

struct TrialStart
{
  std::int64_t trial_index = 0;
  Condition condition = Condition::Control;
  bool practice = false;
  nlohmann::json first_frame;  // tick 0
};

struct InputAck
{
  std::int64_t server_tick = 0;  // tick the input will be applied on
  double client_t = 0.0;
};

/// Result of advancing a live trial by one tick.
struct TickUpdate
{
  nlohmann::json frame;
  bool finished = false;
};

/// Transport-independent session service. Every method is thread safe;
/// sessions never share mutable state.
///
/// Persistence under `root/<session_id>/`: session.json (descriptor, plan,
/// seed) and trials.jsonl (completed trials, append only).
class Gateway
{
public:
  /// Reloads the sessions already present under `config.root`.
  explicit Gateway(GatewayConfig config);
  ~Gateway();

  /// Body: {"participant": {...}, "plan": {...}, "seed": n}; the plan
  /// defaults to 10 / 10 / 10 and the seed to a fresh derived one. Throws
  /// InvalidArgument on malformed input.
  SessionDescriptor create_session(const nlohmann::json & request);
  /// Throws NotFound.
  SessionDescriptor descriptor(const std::string & session_id) const;
  std::vector<std::string> session_ids() const;

  /// Throws NotFound, Conflict ("trial already running", "session complete")
  /// and SessionAbort.
  TrialStart start_trial(const std::string & session_id, bool practice);
  /// Queues an input for the next tick. Throws NotFound and Conflict when no
  /// trial is running.
  InputAck ingest_input(const std::string & session_id, const InputFrame & frame);
  /// Consumes the latest queued input (or repeats the previous one, marking
  /// the tick held) and steps once. A finished trial is persisted and the
  /// session returns to Idle, or Complete.
  TickUpdate advance(const std::string & session_id);
  /// Drops the running trial without persisting it.
  void abort_trial(const std::string & session_id);
  bool trial_running(const std::string & session_id) const;
  /// Frame of the latest tick of the running trial. Throws NotFound and
  /// Conflict.
  nlohmann::json latest_frame(const std::string & session_id) const;

  /// kind: "logs" (JSONL), "summary" (CSV), "design" (CSV) or "fit" (JSON).
  /// Regenerated from the persisted log on every call. Throws NotFound and
  /// InvalidArgument (unknown kind, no completed trial).
  std::string fetch_artifact(
    const std::string & session_id, const std::string & kind,
    double threshold = kDefaultDangerThreshold) const;

  const GatewayConfig & config() const noexcept { return config_; }

private:
  struct Session;

  std::shared_ptr<Session> find(const std::string & session_id) const;
  void load_existing();

  GatewayConfig config_;
  mutable std::mutex mutex_;  // guards sessions_ and counter_
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace xwalk
