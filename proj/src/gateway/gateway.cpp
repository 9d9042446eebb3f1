#include "xwalk/gateway/gateway.hpp"

#include "xwalk/choice/design.hpp"
#include "xwalk/choice/mnl.hpp"
#include "xwalk/core/errors.hpp"
#include "xwalk/core/files.hpp"
#include "xwalk/core/rng.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace xwalk
{

namespace
{
constexpr std::uint64_t kSessionIdStream = 0x1D5E55u;
constexpr std::uint64_t kSessionSeedStream = 0x5EED5u;
constexpr const char * kDescriptorFile = "session.json";
constexpr const char * kLogFile = "trials.jsonl";

std::string utc_now()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

Head flipped(Head h)
{
  return h == Head::TowardRoad ? Head::TowardPhone : Head::TowardRoad;
}
}  // namespace

void to_json(nlohmann::json & j, const ParticipantMeta & m)
{
  j = {
    {"participant_id", m.participant_id},
    {"gender", m.tags.female ? "female" : "male"},
    {"age_band", std::string(to_string(m.tags.age_band))},
    {"years_smartphone", m.years_smartphone ? nlohmann::json(*m.years_smartphone) : nlohmann::json()},
    {"has_license", m.has_license ? nlohmann::json(*m.has_license) : nlohmann::json()},
  };
}

void from_json(const nlohmann::json & j, ParticipantMeta & m)
{
  if (!j.is_object()) {
    throw InvalidArgument("participant must be an object");
  }
  try {
    m.participant_id = j.value("participant_id", std::string());
    const std::string gender = j.at("gender").get<std::string>();
    if (gender != "female" && gender != "male") {
      throw InvalidArgument(fmt::format("gender must be 'female' or 'male', got '{}'", gender));
    }
    m.tags.female = gender == "female";
    m.tags.age_band = age_band_from_string(j.at("age_band").get<std::string>());
    if (j.contains("years_smartphone") && !j.at("years_smartphone").is_null()) {
      const int years = j.at("years_smartphone").get<int>();
      if (years < 0) {
        throw InvalidArgument("years_smartphone must be non-negative");
      }
      m.years_smartphone = years;
    }
    if (j.contains("has_license") && !j.at("has_license").is_null()) {
      m.has_license = j.at("has_license").get<bool>();
    }
  } catch (const nlohmann::json::exception & e) {
    throw InvalidArgument(fmt::format("participant: {}", e.what()));
  }
}

std::string_view to_string(SessionStatus s) noexcept
{
  switch (s) {
    case SessionStatus::Idle:
      return "Idle";
    case SessionStatus::TrialRunning:
      return "TrialRunning";
    case SessionStatus::Complete:
      return "Complete";
  }
  return "Idle";
}

nlohmann::json descriptor_json(const SessionDescriptor & d)
{
  return {
    {"session_id", d.session_id},
    {"participant", d.participant},
    {"plan", d.plan},
    {"created_at", d.created_at},
    {"status", std::string(to_string(d.status))},
    {"seed", d.seed},
  };
}

struct Gateway::Session
{
  Session(SessionDescriptor d, SessionConfig c, std::filesystem::path directory)
  : desc(std::move(d)), protocol(std::move(c)), dir(std::move(directory))
  {
  }

  std::mutex m;
  SessionDescriptor desc;
  SessionProtocol protocol;
  std::filesystem::path dir;
  std::unique_ptr<TrialRunner> runner;
  std::optional<InputFrame> pending;
  PedInput last;
  bool have_last = false;

  void save(const GatewayConfig & config) const
  {
    nlohmann::json j = descriptor_json(desc);
    j["traffic"] = config.traffic;
    j["geometry"] = config.geometry;
    j["settings"] = config.settings;
    j["trial_budget"] = protocol.config().trial_budget;
    write_atomically(dir / kDescriptorFile, j.dump(2) + "\n");
  }

  SessionStatus idle_status() const
  {
    return protocol.complete() ? SessionStatus::Complete : SessionStatus::Idle;
  }
};

Gateway::Gateway(GatewayConfig config) : config_(std::move(config))
{
  config_.traffic.validate();
  config_.geometry.validate(config_.traffic);
  config_.settings.validate();
  std::filesystem::create_directories(config_.root);
  load_existing();
}

Gateway::~Gateway() = default;

void Gateway::load_existing()
{
  for (const auto & entry : std::filesystem::directory_iterator(config_.root)) {
    const auto file = entry.path() / kDescriptorFile;
    if (!entry.is_directory() || !std::filesystem::exists(file)) {
      continue;
    }
    const auto j = nlohmann::json::parse(read_file(file));
    SessionDescriptor d;
    d.session_id = j.at("session_id").get<std::string>();
    d.participant = j.at("participant").get<ParticipantMeta>();
    d.plan = j.at("plan").get<ConditionPlan>();
    d.created_at = j.at("created_at").get<std::string>();
    d.seed = j.at("seed").get<std::uint64_t>();

    SessionConfig c;
    c.traffic = j.at("traffic").get<TrafficConfig>();
    c.geometry = j.at("geometry").get<RoadGeometry>();
    c.settings = j.at("settings").get<TrialSettings>();
    c.trial_budget = j.at("trial_budget").get<int>();
    c.plan = d.plan;
    c.seed = d.seed;
    c.session_id = d.session_id;
    c.participant_id = d.participant.participant_id;
    c.participant = d.participant.tags;

    auto s = std::make_shared<Session>(d, c, entry.path());
    const auto log = entry.path() / kLogFile;
    if (std::filesystem::exists(log)) {
      for (const TrialRecord & r : read_trial_file(log)) {
        s->protocol.record(r);
      }
    }
    s->desc.status = s->idle_status();
    sessions_.emplace(d.session_id, std::move(s));
  }
}

SessionDescriptor Gateway::create_session(const nlohmann::json & request)
{
  if (!request.is_object()) {
    throw InvalidArgument("request body must be a JSON object");
  }
  SessionDescriptor d;
  d.participant = request.at("participant").get<ParticipantMeta>();
  if (request.contains("plan") && !request.at("plan").is_null()) {
    try {
      d.plan = request.at("plan").get<ConditionPlan>();
    } catch (const nlohmann::json::exception & e) {
      throw InvalidArgument(fmt::format("plan: {}", e.what()));
    }
  } else {
    d.plan = ConditionPlan::standard();
  }
  d.plan.validate();
  d.created_at = utc_now();

  std::lock_guard lock(mutex_);
  std::uint64_t n = 0;
  do {
    n = counter_++;
    d.session_id = fmt::format("{:016x}", derive_seed(config_.seed, kSessionIdStream, n));
  } while (sessions_.count(d.session_id) > 0 || std::filesystem::exists(config_.root / d.session_id));
  d.seed = derive_seed(config_.seed, kSessionSeedStream, n);
  if (request.contains("seed") && !request.at("seed").is_null()) {
    if (!request.at("seed").is_number_unsigned()) {
      throw InvalidArgument("seed must be a non-negative integer");
    }
    d.seed = request.at("seed").get<std::uint64_t>();
  }
  if (d.participant.participant_id.empty()) {
    d.participant.participant_id = d.session_id;
  }

  SessionConfig c;
  c.traffic = config_.traffic;
  c.geometry = config_.geometry;
  c.settings = config_.settings;
  c.plan = d.plan;
  c.seed = d.seed;
  c.trial_budget = config_.trial_budget;
  c.session_id = d.session_id;
  c.participant_id = d.participant.participant_id;
  c.participant = d.participant.tags;

  const auto dir = config_.root / d.session_id;
  std::filesystem::create_directories(dir);
  auto s = std::make_shared<Session>(d, c, dir);
  s->save(config_);
  sessions_.emplace(d.session_id, s);
  return d;
}

std::shared_ptr<Gateway::Session> Gateway::find(const std::string & session_id) const
{
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw NotFound(fmt::format("unknown session '{}'", session_id));
  }
  return it->second;
}

SessionDescriptor Gateway::descriptor(const std::string & session_id) const
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  return s->desc;
}

std::vector<std::string> Gateway::session_ids() const
{
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto & [id, s] : sessions_) {
    out.push_back(id);
  }
  return out;
}

TrialStart Gateway::start_trial(const std::string & session_id, bool practice)
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  if (s->runner) {
    throw Conflict("trial already running");
  }
  if (s->protocol.complete()) {
    throw Conflict("session complete");
  }
  const TrialSetup setup = s->protocol.next_trial(practice);
  s->runner = std::make_unique<TrialRunner>(setup);
  s->pending.reset();
  s->last = PedInput{};
  s->have_last = false;
  s->desc.status = SessionStatus::TrialRunning;

  TrialStart out;
  out.trial_index = setup.meta.trial_index;
  out.condition = setup.meta.condition;
  out.practice = practice;
  out.first_frame = tick_frame_json(s->runner->record().ticks.front(), "running");
  return out;
}

InputAck Gateway::ingest_input(const std::string & session_id, const InputFrame & frame)
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  if (!s->runner) {
    throw Conflict("no trial running");
  }
  s->pending = frame;
  return {s->runner->record().ticks.back().k + 1, frame.client_t};
}

TickUpdate Gateway::advance(const std::string & session_id)
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  if (!s->runner) {
    throw Conflict("no trial running");
  }
  TrialRunner & runner = *s->runner;
  const std::int64_t k = runner.record().ticks.back().k + 1;

  SourcedInput in;
  if (s->pending) {
    const InputFrame & f = *s->pending;
    PedInput p;
    p.walk = f.walk_command ? WalkCommand::walk(*f.walk_command) : WalkCommand::stop();
    if (f.head_toggle) {
      p.head_toggle = flipped(runner.record().ticks.back().ped.head);
    }
    p.maze_move = f.maze_move;
    p.timestamp = k;
    in.input = p;
    s->last = p;
    s->have_last = true;
    s->pending.reset();
  } else {
    // Nothing arrived for this tick: repeat the previous command. The head
    // target is absolute, so repeating it is harmless; a maze move is an
    // event and is not repeated.
    PedInput p = s->have_last ? s->last : PedInput{};
    p.maze_move.reset();
    in.input = p;
    in.held = true;
  }

  const TickRecord & tick = runner.step(in);
  TickUpdate out;
  out.finished = runner.finished();
  out.frame = tick_frame_json(
    tick, out.finished ? to_string(*runner.record().outcome) : std::string_view("running"));
  if (out.finished) {
    TrialRecord record = std::move(*s->runner).take();
    s->runner.reset();
    {
      std::ofstream log(s->dir / kLogFile, std::ios::binary | std::ios::app);
      write_trial(log, record);
      if (!log) {
        throw std::runtime_error(fmt::format("cannot append to {}", (s->dir / kLogFile).string()));
      }
    }
    s->protocol.record(record);
    s->desc.status = s->idle_status();
    s->save(config_);
  }
  return out;
}

void Gateway::abort_trial(const std::string & session_id)
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  s->runner.reset();
  s->pending.reset();
  s->desc.status = s->idle_status();
}

bool Gateway::trial_running(const std::string & session_id) const
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  return s->runner != nullptr;
}

nlohmann::json Gateway::latest_frame(const std::string & session_id) const
{
  auto s = find(session_id);
  std::lock_guard lock(s->m);
  if (!s->runner) {
    throw Conflict("no trial running");
  }
  return tick_frame_json(s->runner->record().ticks.back(), "running");
}

std::string Gateway::fetch_artifact(
  const std::string & session_id, const std::string & kind, double threshold) const
{
  auto s = find(session_id);
  std::filesystem::path log;
  {
    std::lock_guard lock(s->m);
    log = s->dir / kLogFile;
  }
  if (kind != "logs" && kind != "summary" && kind != "design" && kind != "fit") {
    throw InvalidArgument(fmt::format("unknown artifact kind '{}'", kind));
  }
  if (!std::filesystem::exists(log)) {
    throw InvalidArgument("session has no completed trial");
  }
  // The log is append-only and written under the session lock; a read may
  // miss a trial being appended but never sees a partial block because
  // read_trials() only accepts whole blocks.
  std::string raw;
  {
    std::lock_guard lock(s->m);
    raw = read_file(log);
  }
  if (kind == "logs") {
    return raw;
  }
  std::istringstream in(raw);
  const auto records = read_trials(in, log.string());
  std::vector<TrialMetrics> metrics;
  for (const TrialRecord & r : records) {
    metrics.push_back(compute_metrics(r, threshold));
  }
  if (kind == "summary") {
    return summary_csv(summarize(metrics, {"gender", "age_band"}, threshold));
  }
  if (kind == "design") {
    DesignSpec spec;
    spec.threshold = threshold;
    spec.covariates = {"female", "wait_time", "initial_walking_speed", "avg_accel", "avg_decel"};
    return design_csv(build_design(metrics, spec));
  }

  nlohmann::json fits = nlohmann::json::array();
  for (const Condition c : kAllConditions) {
    DesignSpec spec = DesignSpec::standard(c);
    spec.threshold = threshold;
    Design d = build_design(metrics, spec);
    if (d.observations.empty()) {
      continue;
    }
    // Covariates constant across a single participant's trials (gender) are
    // not identified; drop them from the per-session fit.
    const auto dropped = drop_constant_columns(d);
    nlohmann::json entry = {{"condition", std::string(to_string(c))}, {"dropped", dropped}, {"n", d.observations.size()}};
    try {
      if (d.columns.empty()) {
        throw EstimationError("no covariate varies", {});
      }
      entry["fit"] = fit_json(estimate(d.observations, d.columns));
    } catch (const EstimationError & e) {
      entry["error"] = e.what();
      entry["columns"] = e.columns();
    }
    fits.push_back(std::move(entry));
  }
  return nlohmann::json{{"threshold", threshold}, {"fits", std::move(fits)}}.dump(2) + "\n";
}

}  // namespace xwalk
