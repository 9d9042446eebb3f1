#include "xwalk/cli/commands.hpp"

#include "xwalk/agents/population.hpp"
#include "xwalk/analytics/summary.hpp"
#include "xwalk/choice/design.hpp"
#include "xwalk/choice/mnl.hpp"
#include "xwalk/choice/report.hpp"
#include "xwalk/core/errors.hpp"
#include "xwalk/core/files.hpp"
#include "xwalk/gateway/gateway.hpp"
#include "xwalk/gateway/server.hpp"
#include "xwalk/trial/record_io.hpp"
#include "xwalk/trial/session.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace xwalk::cli
{

namespace
{
namespace fs = std::filesystem;

constexpr const char * kManifestFile = "manifest.json";
constexpr const char * kSessionPrefix = "session-";

/// Settings shared by the batch commands. Every key is optional.
struct RunConfig
{
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  ConditionPlan plan = ConditionPlan::standard();
  std::uint64_t seed = 1;
  double threshold = kDefaultDangerThreshold;
  std::size_t agents = 10;
  int trial_budget = 200;
  CalibrationTargets targets = CalibrationTargets::behavioural_table();
  AgentTuning tuning;

  void validate() const
  {
    traffic.validate();
    geometry.validate(traffic);
    settings.validate();
    plan.validate();
    if (!(threshold > 0.0)) {
      throw InvalidArgument(fmt::format("threshold must be positive, got {}", threshold));
    }
    if (agents == 0) {
      throw InvalidArgument("agents must be at least 1");
    }
    if (trial_budget < 1) {
      throw InvalidArgument("trial_budget must be at least 1");
    }
  }
};

const std::set<std::string> kConfigKeys{
  "traffic", "geometry", "settings", "plan",    "seed",
  "threshold", "agents", "trial_budget", "targets", "tuning"};

nlohmann::json parse_json_file(const std::string & path)
{
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception & e) {
    throw InvalidArgument(fmt::format("{}: {}", path, e.what()));
  }
}

RunConfig load_config(const std::string & path)
{
  RunConfig c;
  if (path.empty()) {
    return c;
  }
  const nlohmann::json j = parse_json_file(path);
  if (!j.is_object()) {
    throw InvalidArgument(fmt::format("{}: config must be a JSON object", path));
  }
  for (const auto & [key, value] : j.items()) {
    if (kConfigKeys.count(key) == 0) {
      throw InvalidArgument(fmt::format("{}: unknown key '{}'", path, key));
    }
  }
  try {
    if (j.contains("traffic")) c.traffic = j.at("traffic").get<TrafficConfig>();
    if (j.contains("geometry")) c.geometry = j.at("geometry").get<RoadGeometry>();
    if (j.contains("settings")) c.settings = j.at("settings").get<TrialSettings>();
    if (j.contains("plan")) c.plan = j.at("plan").get<ConditionPlan>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
    if (j.contains("agents")) c.agents = j.at("agents").get<std::size_t>();
    if (j.contains("trial_budget")) c.trial_budget = j.at("trial_budget").get<int>();
    if (j.contains("targets")) c.targets = j.at("targets").get<CalibrationTargets>();
    if (j.contains("tuning")) c.tuning = j.at("tuning").get<AgentTuning>();
  } catch (const nlohmann::json::exception & e) {
    throw InvalidArgument(fmt::format("{}: {}", path, e.what()));
  } catch (const InvalidArgument & e) {
    throw InvalidArgument(fmt::format("{}: {}", path, e.what()));
  }
  return c;
}

/// "10" gives every condition 10 successes; "control=5,led=3" lists them.
ConditionPlan parse_plan(const std::string & s)
{
  const bool plain = !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
  ConditionPlan plan;
  if (plain) {
    const int n = std::stoi(s);
    for (const Condition c : kAllConditions) {
      plan.targets.emplace_back(c, n);
    }
    plan.validate();
    return plan;
  }
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto sep = item.find_first_of("=:");
    if (sep == std::string::npos || sep == 0 || sep + 1 == item.size()) {
      throw InvalidArgument(fmt::format("bad --trials entry '{}', expected condition=count", item));
    }
    const std::string count = item.substr(sep + 1);
    if (count.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidArgument(fmt::format("bad trial count '{}'", count));
    }
    j[item.substr(0, sep)] = std::stoi(count);
  }
  return j.get<ConditionPlan>();
}

std::vector<std::string> split_list(const std::string & s)
{
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty() && item != "none") {
      out.push_back(item);
    }
  }
  return out;
}

CalibrationOptions calibration_options(const RunConfig & cfg)
{
  CalibrationOptions o;
  o.traffic = cfg.traffic;
  o.geometry = cfg.geometry;
  o.settings = cfg.settings;
  return o;
}

PolicyPopulation load_population(const std::string & path)
{
  const nlohmann::json j = parse_json_file(path);
  try {
    return j.get<PolicyPopulation>();
  } catch (const nlohmann::json::exception & e) {
    throw InvalidArgument(fmt::format("{}: {}", path, e.what()));
  } catch (const InvalidArgument & e) {
    throw InvalidArgument(fmt::format("{}: {}", path, e.what()));
  }
}

fs::path output_dir(const std::string & flag, const char * leaf)
{
  return flag.empty() ? fs::path(default_output_root()) / leaf : fs::path(flag);
}

std::vector<fs::path> collect_logs(const std::vector<std::string> & inputs)
{
  std::vector<fs::path> files;
  for (const std::string & in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      const auto found = find_logs(p);
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw InvalidArgument(fmt::format("{}: no such file or directory", in));
    }
  }
  if (files.empty()) {
    throw InvalidArgument("no trial logs (*.jsonl) found");
  }
  return files;
}

std::vector<TrialRecord> load_records(const std::vector<fs::path> & files)
{
  std::vector<TrialRecord> records;
  for (const fs::path & f : files) {
    auto block = read_trial_file(f);
    records.insert(records.end(), std::make_move_iterator(block.begin()),
      std::make_move_iterator(block.end()));
  }
  if (records.empty()) {
    throw InvalidArgument("the logs hold no trials");
  }
  return records;
}

std::vector<TrialMetrics> metrics_of(const std::vector<TrialRecord> & records, double threshold)
{
  std::vector<TrialMetrics> out;
  out.reserve(records.size());
  for (const TrialRecord & r : records) {
    out.push_back(compute_metrics(r, threshold));
  }
  return out;
}

void check_format(const std::string & format)
{
  if (format != "text" && format != "csv" && format != "json") {
    throw InvalidArgument(fmt::format("unknown format '{}'", format));
  }
}

// ---------------------------------------------------------------- simulate

struct Tally
{
  int trials = 0;
  int success = 0;
  int failed = 0;
  int timeout = 0;
  int practice = 0;
};

std::string tally_output(const std::array<Tally, 3> & tallies, const std::string & format)
{
  if (format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const Condition c : kAllConditions) {
      const Tally & t = tallies[index_of(c)];
      j.push_back({{"condition", std::string(to_string(c))}, {"trials", t.trials},
        {"success", t.success}, {"failed", t.failed}, {"timeout", t.timeout}});
    }
    return j.dump(2) + "\n";
  }
  if (format == "csv") {
    std::string out = "condition,trials,success,failed,timeout\n";
    for (const Condition c : kAllConditions) {
      const Tally & t = tallies[index_of(c)];
      out += fmt::format("{},{},{},{},{}\n", to_string(c), t.trials, t.success, t.failed, t.timeout);
    }
    return out;
  }
  std::string out = fmt::format("{:<30}{:>8}{:>9}{:>8}{:>9}\n", "Condition", "Trials", "Success",
    "Failed", "TimeOut");
  for (const Condition c : kAllConditions) {
    const Tally & t = tallies[index_of(c)];
    out += fmt::format("{:<30}{:>8}{:>9}{:>8}{:>9}\n", display_name(c), t.trials, t.success,
      t.failed, t.timeout);
  }
  return out;
}

/// Reuses a directory only when it holds a previous run; stale session
/// directories from that run are removed so analysis sees this run only.
void prepare_run_dir(const fs::path & root)
{
  if (fs::exists(root) && !fs::is_directory(root)) {
    throw InvalidArgument(fmt::format("{} is not a directory", root.string()));
  }
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!fs::exists(root / kManifestFile)) {
      throw InvalidArgument(
        fmt::format("{} is not empty and holds no {}; refusing to write into it", root.string(),
          kManifestFile));
    }
    for (const auto & entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && entry.path().filename().string().rfind(kSessionPrefix, 0) == 0) {
        fs::remove_all(entry.path());
      }
    }
  }
  fs::create_directories(root);
}

nlohmann::json tags_json(const ParticipantTags & t)
{
  return {{"female", t.female}, {"age_band", std::string(to_string(t.age_band))}};
}

struct SimulateOptions
{
  std::string config;
  std::string population;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string trials;
  std::optional<std::size_t> agents;
  std::string format = "text";
};

int cmd_simulate(const SimulateOptions & o, std::ostream & out, std::ostream & err)
{
  check_format(o.format);
  RunConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (!o.trials.empty()) {
    cfg.plan = parse_plan(o.trials);
  }
  if (o.agents) {
    cfg.agents = *o.agents;
  }
  cfg.validate();

  PolicyPopulation pop;
  if (!o.population.empty()) {
    pop = load_population(o.population);
  } else {
    err << fmt::format("calibrating {} agents (seed {})\n", cfg.agents, cfg.seed);
    pop = calibrated_population(cfg.targets, cfg.agents, cfg.seed, calibration_options(cfg));
    pop.tuning = cfg.tuning;
  }

  const fs::path root = output_dir(o.out, "sessions");
  prepare_run_dir(root);

  std::array<Tally, 3> tallies{};
  nlohmann::json sessions = nlohmann::json::array();
  for (std::size_t i = 0; i < pop.members.size(); ++i) {
    const PopulationMember & m = pop.members[i];
    SessionConfig sc =
      member_session(m, i, cfg.seed, cfg.plan, cfg.traffic, cfg.geometry, cfg.settings);
    sc.trial_budget = cfg.trial_budget;
    SessionRecord rec;
    try {
      ScenarioCache cache;
      rec = run_session(sc, agent_factory(m, pop.tuning), &cache);
    } catch (const SessionAbort & e) {
      throw SessionAbort(fmt::format("{} ({}): {}", sc.session_id, m.id, e.what()));
    }

    std::ostringstream log;
    for (const TrialRecord & r : rec.trials) {
      write_trial(log, r);
      Tally & t = tallies[index_of(r.condition())];
      ++t.trials;
      switch (r.outcome.value_or(Outcome::TimeOut)) {
        case Outcome::Success: ++t.success; break;
        case Outcome::Failed: ++t.failed; break;
        case Outcome::TimeOut: ++t.timeout; break;
      }
    }
    const fs::path dir = root / sc.session_id;
    fs::create_directories(dir);
    write_atomically(dir / "trials.jsonl", log.str());
    const nlohmann::json descriptor = {
      {"session_id", sc.session_id},
      {"participant_id", sc.participant_id},
      {"participant", tags_json(sc.participant)},
      {"seed", sc.seed},
      {"plan", sc.plan},
      {"trials", rec.trials.size()},
    };
    write_atomically(dir / "session.json", descriptor.dump(2) + "\n");
    sessions.push_back(sc.session_id);
  }

  const nlohmann::json manifest = {
    {"command", "simulate"},
    {"seed", cfg.seed},
    {"plan", cfg.plan},
    {"threshold", cfg.threshold},
    {"trial_budget", cfg.trial_budget},
    {"traffic", cfg.traffic},
    {"geometry", cfg.geometry},
    {"settings", cfg.settings},
    {"population_source", o.population.empty() ? std::string("calibrated") : o.population},
    {"population", pop},
    {"sessions", sessions},
    {"log_schema", kLogSchemaVersion},
  };
  write_atomically(root / kManifestFile, manifest.dump(2) + "\n");

  out << tally_output(tallies, o.format);
  if (o.format == "text") {
    out << fmt::format("wrote {} sessions to {}\n", pop.members.size(), root.string());
  }
  return kExitOk;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOptions
{
  std::vector<std::string> inputs;
  std::string out;
  double threshold = kDefaultDangerThreshold;
  std::string group_by = "gender";
  std::string format = "text";
  bool include_practice = false;
};

nlohmann::json bins_json(const std::vector<BinCell> & cells)
{
  nlohmann::json j = nlohmann::json::array();
  for (const BinCell & c : cells) {
    j.push_back({{"segment", c.segment}, {"level", c.level},
      {"condition", std::string(to_string(c.condition))}, {"n", c.n}, {"n_safe", c.n_safe},
      {"share", c.share ? nlohmann::json(*c.share) : nlohmann::json(nullptr)}});
  }
  return j;
}

std::vector<std::string> default_inputs(const std::vector<std::string> & inputs)
{
  if (!inputs.empty()) {
    return inputs;
  }
  return {(fs::path(default_output_root()) / "sessions").string()};
}

int cmd_analyze(const AnalyzeOptions & o, std::ostream & out, std::ostream & err)
{
  check_format(o.format);
  if (!(o.threshold > 0.0)) {
    throw InvalidArgument(fmt::format("threshold must be positive, got {}", o.threshold));
  }
  const auto keys = split_list(o.group_by);
  for (const std::string & k : keys) {
    if (k != "gender" && k != "age_band") {
      throw InvalidArgument(fmt::format("unknown group key '{}' (gender, age_band)", k));
    }
  }
  const auto records = load_records(collect_logs(default_inputs(o.inputs)));
  const auto metrics = metrics_of(records, o.threshold);

  const SummaryTable table = summarize(metrics, keys, o.threshold, o.include_practice);
  const auto bins = sensitivity_bins(
    metrics, make_segments(default_segment_names()), o.threshold, o.include_practice);
  for (const std::string & w : table.warnings) {
    err << "warning: " << w << "\n";
  }

  const nlohmann::json combined = {
    {"summary", summary_json(table)},
    {"bins", bins_json(bins)},
  };
  const fs::path dir = output_dir(o.out, "analysis");
  fs::create_directories(dir);
  write_atomically(dir / "summary.csv", summary_csv(table));
  write_atomically(dir / "summary.txt", summary_text(table));
  write_atomically(dir / "summary.json", combined.dump(2) + "\n");
  write_atomically(dir / "bins.csv", bins_csv(bins));

  if (o.format == "csv") {
    out << summary_csv(table);
  } else if (o.format == "json") {
    out << combined.dump(2) << "\n";
  } else {
    out << summary_text(table);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions
{
  std::vector<std::string> inputs;
  std::string design;
  std::string out;
  std::optional<double> threshold;
  std::string format = "text";
};

int cmd_estimate(const EstimateOptions & o, std::ostream & out, std::ostream & err)
{
  check_format(o.format);
  if (o.threshold && !(*o.threshold > 0.0)) {
    throw InvalidArgument(fmt::format("threshold must be positive, got {}", *o.threshold));
  }
  const bool user_design = !o.design.empty();
  std::vector<DesignSpec> specs;
  if (user_design) {
    specs = design_specs_from_json(parse_json_file(o.design));
  }
  const auto records = load_records(collect_logs(default_inputs(o.inputs)));
  const double threshold = o.threshold.value_or(kDefaultDangerThreshold);
  const auto metrics = metrics_of(records, threshold);

  if (!user_design) {
    std::set<Condition> present;
    for (const TrialMetrics & m : metrics) {
      if (!m.meta.practice) {
        present.insert(m.meta.condition);
      }
    }
    for (const Condition c : kAllConditions) {
      if (present.count(c) != 0) {
        specs.push_back(DesignSpec::standard(c));
      }
    }
  }
  if (o.threshold) {
    for (DesignSpec & s : specs) {
      s.threshold = *o.threshold;
    }
  }

  std::vector<ReportColumn> columns;
  nlohmann::json fits = nlohmann::json::array();
  for (const DesignSpec & spec : specs) {
    const std::string label =
      spec.condition ? std::string(display_name(*spec.condition)) : std::string("Pooled");
    Design d = build_design(metrics, spec);
    std::vector<std::string> dropped;
    if (!user_design) {
      dropped = drop_constant_columns(d);
      for (const std::string & c : dropped) {
        err << fmt::format("note: {}: dropped '{}' (no variation)\n", label, c);
      }
    }
    if (d.observations.empty()) {
      throw EstimationError(fmt::format("{}: no trials with a defined PET", label), {});
    }
    if (d.columns.empty()) {
      throw EstimationError(fmt::format("{}: no covariate varies", label), {});
    }
    MNLFit fit;
    try {
      fit = estimate(d.observations, d.columns);
    } catch (const EstimationError & e) {
      throw EstimationError(fmt::format("{}: {}", label, e.what()), e.columns());
    }
    if (!fit.converged) {
      err << fmt::format("warning: {}: no convergence after {} iterations\n", label, fit.iterations);
    }
    fits.push_back({
      {"label", label},
      {"spec", spec},
      {"dropped", dropped},
      {"excluded_undefined_pet", d.excluded_undefined_pet},
      {"excluded_missing_covariate", d.excluded_missing_covariate},
      {"fit", fit_json(fit)},
    });
    columns.push_back({label, std::move(fit)});
  }

  const nlohmann::json fit_doc = {{"threshold", threshold}, {"fits", fits}};
  const fs::path dir = output_dir(o.out, "estimate");
  fs::create_directories(dir);
  write_atomically(dir / "fit.json", fit_doc.dump(2) + "\n");
  write_atomically(dir / "report.csv", report_csv(columns));
  write_atomically(dir / "report.txt", report_text(columns));

  if (o.format == "csv") {
    out << report_csv(columns);
  } else if (o.format == "json") {
    out << fit_doc.dump(2) << "\n";
  } else {
    out << report_text(columns);
  }
  return kExitOk;
}

// ------------------------------------------------------------------ replay

struct ReplayOptions
{
  std::vector<std::string> inputs;
  std::string format = "text";
};

int cmd_replay(const ReplayOptions & o, std::ostream & out, std::ostream &)
{
  check_format(o.format);
  const auto files = collect_logs(default_inputs(o.inputs));
  std::size_t trials = 0;
  nlohmann::json mismatches = nlohmann::json::array();
  for (const fs::path & f : files) {
    const auto records = read_trial_file(f);
    for (const TrialRecord & r : records) {
      ++trials;
      const ReplayReport rep = replay_trial(r);
      if (rep.identical) {
        continue;
      }
      const std::int64_t tick = rep.first_divergent_tick.value_or(-1);
      mismatches.push_back({{"file", f.string()}, {"session_id", r.meta.session_id},
        {"trial_index", r.meta.trial_index}, {"tick", tick}, {"detail", rep.detail}});
      if (o.format == "text") {
        out << fmt::format("{}: trial {}/{}: first divergent tick {}: {}\n", f.string(),
          r.meta.session_id, r.meta.trial_index, tick, rep.detail);
      }
    }
  }
  if (o.format == "json") {
    out << nlohmann::json{{"files", files.size()}, {"trials", trials}, {"mismatches", mismatches}}
             .dump(2)
        << "\n";
  } else if (o.format == "csv") {
    out << "file,session_id,trial_index,tick,detail\n";
    for (const auto & m : mismatches) {
      out << fmt::format("{},{},{},{},\"{}\"\n", m["file"].get<std::string>(),
        m["session_id"].get<std::string>(), m["trial_index"].get<std::int64_t>(),
        m["tick"].get<std::int64_t>(), m["detail"].get<std::string>());
    }
  } else {
    out << fmt::format("replayed {} trials from {} files: {}\n", trials, files.size(),
      mismatches.empty() ? std::string("all identical")
                         : fmt::format("{} diverged", mismatches.size()));
  }
  return mismatches.empty() ? kExitOk : kExitVerifyFailed;
}

// --------------------------------------------------------------- calibrate

struct CalibrateOptions
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> agents;
  std::string format = "text";
};

int cmd_calibrate(const CalibrateOptions & o, std::ostream & out, std::ostream & err)
{
  check_format(o.format);
  RunConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.agents) {
    cfg.agents = *o.agents;
  }
  cfg.validate();
  err << fmt::format("calibrating {} agents (seed {})\n", cfg.agents, cfg.seed);
  PolicyPopulation pop = calibrated_population(cfg.targets, cfg.agents, cfg.seed, calibration_options(cfg));
  pop.tuning = cfg.tuning;

  const fs::path path = o.out.empty() ? fs::path(default_output_root()) / "population.json" : fs::path(o.out);
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const std::string doc = nlohmann::json(pop).dump(2) + "\n";
  write_atomically(path, doc);
  if (o.format == "json") {
    out << doc;
  } else {
    out << fmt::format("wrote {} members to {}\n", pop.members.size(), path.string());
  }
  return kExitOk;
}

// ------------------------------------------------------------------- serve

struct ServeOptions
{
  std::string config;
  std::string out;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  double tick_rate = 60.0;
  std::optional<std::uint64_t> seed;
};

int cmd_serve(const ServeOptions & o, std::ostream & out, std::ostream &)
{
  RunConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  cfg.validate();
  if (!(o.tick_rate >= 0.0)) {
    throw InvalidArgument("tick rate must be non-negative");
  }
  GatewayConfig gc;
  gc.root = output_dir(o.out, "live");
  gc.traffic = cfg.traffic;
  gc.geometry = cfg.geometry;
  gc.settings = cfg.settings;
  gc.trial_budget = cfg.trial_budget;
  gc.seed = cfg.seed;
  fs::create_directories(gc.root);
  Gateway gateway(gc);

  // Block the stop signals before the server thread exists so only this
  // thread receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServerOptions so;
  so.address = o.address;
  so.port = o.port;
  so.tick_rate = o.tick_rate;
  Server server(gateway, so);
  server.start();
  out << fmt::format("listening on {}:{} (sessions in {})\n", o.address, server.port(), gc.root.string())
      << std::flush;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return kExitOk;
}

template <typename F>
int guarded(std::ostream & err, F && f)
{
  try {
    return f();
  } catch (const EstimationError & e) {
    err << "estimation error: " << e.what() << "\n";
    return kExitEstimationError;
  } catch (const InvalidSpec & e) {
    err << "invalid design: " << e.what() << "\n";
    return kExitEstimationError;
  } catch (const SchemaMismatch & e) {
    err << "schema mismatch: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace

std::string default_output_root()
{
  const char * env = std::getenv("XWALK_OUT");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("xwalk-out");
}

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Crosswalk simulation, analysis and estimation toolkit", "xwalk"};
  app.require_subcommand(1);
  const std::vector<std::string> formats{"text", "csv", "json"};

  SimulateOptions sim;
  auto * simulate = app.add_subcommand("simulate", "Run synthetic sessions and write JSONL logs");
  simulate->add_option("--config", sim.config, "Run configuration JSON");
  simulate->add_option("--population", sim.population, "Population JSON (calibrated when omitted)");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--agents", sim.agents, "Members to calibrate when --population is omitted");
  simulate->add_option("--trials", sim.trials, "Successes per condition: N or control=N,distracted=N,...");
  simulate->add_option("--format", sim.format, "Tally format")->check(CLI::IsMember(formats));

  AnalyzeOptions ana;
  auto * analyze = app.add_subcommand("analyze", "Summary table and sensitivity bins");
  analyze->add_option("logs", ana.inputs, "Log files or directories");
  analyze->add_option("--out", ana.out, "Output directory");
  analyze->add_option("--threshold", ana.threshold, "Danger threshold (s)");
  analyze->add_option("--group-by", ana.group_by, "Group keys: gender,age_band or none");
  analyze->add_option("--format", ana.format, "Output format")->check(CLI::IsMember(formats));
  analyze->add_flag("--include-practice", ana.include_practice, "Count practice trials");

  EstimateOptions est;
  auto * estimate_cmd = app.add_subcommand("estimate", "Fit the safe-crossing logit per condition");
  estimate_cmd->add_option("logs", est.inputs, "Log files or directories");
  estimate_cmd->add_option("--design", est.design, "Design spec JSON");
  estimate_cmd->add_option("--out", est.out, "Output directory");
  estimate_cmd->add_option("--threshold", est.threshold, "Safe iff min PET above this (s)");
  estimate_cmd->add_option("--format", est.format, "Output format")->check(CLI::IsMember(formats));

  ReplayOptions rep;
  auto * replay = app.add_subcommand("replay", "Re-simulate logs and compare tick by tick");
  replay->add_option("logs", rep.inputs, "Log files or directories");
  replay->add_option("--format", rep.format, "Output format")->check(CLI::IsMember(formats));

  CalibrateOptions cal;
  auto * calibrate = app.add_subcommand("calibrate", "Fit a synthetic population to target means");
  calibrate->add_option("--config", cal.config, "Run configuration JSON");
  calibrate->add_option("--out", cal.out, "Population JSON path");
  calibrate->add_option("--seed", cal.seed, "Master seed");
  calibrate->add_option("--agents", cal.agents, "Number of members");
  calibrate->add_option("--format", cal.format, "Output format")->check(CLI::IsMember(formats));

  ServeOptions srv;
  auto * serve = app.add_subcommand("serve", "Run the participant gateway");
  serve->add_option("--config", srv.config, "Run configuration JSON");
  serve->add_option("--out", srv.out, "Session directory");
  serve->add_option("--address", srv.address, "Listen address");
  serve->add_option("--port", srv.port, "Listen port (0 picks one)");
  serve->add_option("--tick-rate", srv.tick_rate, "Ticks per second, 0 for unpaced");
  serve->add_option("--seed", srv.seed, "Master seed for session ids and seeds");

  std::vector<const char *> argv;
  argv.reserve(args.size());
  for (const std::string & a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  return guarded(err, [&] {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*analyze) return cmd_analyze(ana, out, err);
    if (*estimate_cmd) return cmd_estimate(est, out, err);
    if (*replay) return cmd_replay(rep, out, err);
    if (*calibrate) return cmd_calibrate(cal, out, err);
    return cmd_serve(srv, out, err);
  });
}

int run(int argc, char ** argv)
{
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace xwalk::cli
