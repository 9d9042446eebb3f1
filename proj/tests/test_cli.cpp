#include "xwalk/agents/population.hpp"
#include "xwalk/cli/commands.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace xwalk;
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

class TempDir
{
public:
  TempDir()
  {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("xwalk-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string & leaf) const { return path_ / leaf; }

private:
  fs::path path_;
};

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result xwalk_cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "xwalk");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path & p, const std::string & s)
{
  std::ofstream(p) << s;
}

// Four members with simple jittered policies; skips calibration. Without
// jitter a failed scenario would be re-presented with the same outcome.
fs::path write_population(const TempDir & dir)
{
  PolicyPopulation pop;
  for (int i = 0; i < 4; ++i) {
    PopulationMember m;
    m.id = "m" + std::to_string(i);
    m.tags.female = i % 2 == 0;
    for (auto & p : m.policies) {
      p.accept_threshold = 4.5 + 0.5 * i;
      p.desired_speed = 1.2 + 0.1 * i;
      p.threshold_jitter = 0.5;
      p.reaction_jitter = 0.3;
      p.speed_jitter = 0.1;
    }
    m.policies[1].glance = GlanceCycle{3.0, 1.5};
    m.policies[2].glance = GlanceCycle{3.0, 1.5};
    pop.members.push_back(m);
  }
  const fs::path p = dir / "population.json";
  spit(p, json(pop).dump(2));
  return p;
}

std::vector<fs::path> logs_under(const fs::path & root)
{
  std::vector<fs::path> out;
  for (const auto & e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() == ".jsonl") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Cli, SimulateAnalyzeReplay)
{
  TempDir dir;
  const auto pop = write_population(dir);
  const auto runs = (dir / "runs").string();
  auto r = xwalk_cli({"simulate", "--population", pop.string(), "--out", runs, "--seed", "3",
    "--trials", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto logs = logs_under(runs);
  ASSERT_EQ(logs.size(), 4u);
  EXPECT_TRUE(fs::exists(fs::path(runs) / "manifest.json"));

  r = xwalk_cli({"analyze", runs, "--out", (dir / "analysis").string(), "--threshold", "1.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(slurp(dir / "analysis" / "summary.json"));
  EXPECT_EQ(summary.at("summary").at("threshold"), 1.5);
  EXPECT_FALSE(summary.at("summary").at("rows").empty());
  EXPECT_TRUE(fs::exists(dir / "analysis" / "bins.csv"));

  r = xwalk_cli({"analyze", runs, "--out", (dir / "a2").string(), "--format", "json",
    "--group-by", "gender,age_band"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NO_THROW(json::parse(r.out));

  r = xwalk_cli({"replay", runs});
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, SameSeedSameLogs)
{
  TempDir dir;
  const auto pop = write_population(dir);
  for (const char * leaf : {"a", "b"}) {
    const auto r = xwalk_cli({"simulate", "--population", pop.string(), "--out", (dir / leaf).string(),
      "--seed", "21", "--trials", "control=1"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto a = logs_under(dir / "a");
  const auto b = logs_under(dir / "b");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(slurp(a[i]), slurp(b[i]));
  }
}

TEST(Cli, ReplayFlagsAMutatedLog)
{
  TempDir dir;
  const auto pop = write_population(dir);
  const auto runs = (dir / "runs").string();
  ASSERT_EQ(xwalk_cli({"simulate", "--population", pop.string(), "--out", runs, "--seed", "4",
    "--trials", "control=1"}).code, 0);
  const fs::path log = logs_under(runs).front();
  std::istringstream in(slurp(log));
  std::string line;
  std::string edited;
  int n = 0;
  while (std::getline(in, line)) {
    if (n == 30) {
      json j = json::parse(line);
      ASSERT_TRUE(j.contains("ped"));
      j["ped"]["y"] = j["ped"]["y"].get<double>() + 0.05;
      line = j.dump();
    }
    edited += line + "\n";
    ++n;
  }
  spit(log, edited);
  const auto r = xwalk_cli({"replay", runs, "--format", "json"});
  EXPECT_EQ(r.code, 1);
  const json report = json::parse(r.out);
  ASSERT_EQ(report.at("mismatches").size(), 1u);
  EXPECT_EQ(report.at("mismatches")[0].at("tick"), 29);
}

TEST(Cli, InputErrors)
{
  TempDir dir;
  fs::create_directories(dir / "empty");
  EXPECT_EQ(xwalk_cli({"analyze", (dir / "empty").string()}).code, 2);
  EXPECT_EQ(xwalk_cli({"replay", (dir / "missing").string()}).code, 2);
  EXPECT_EQ(xwalk_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(xwalk_cli({"analyze", (dir / "empty").string(), "--threshold", "-1"}).code, 2);

  const auto pop = write_population(dir);
  const auto runs = (dir / "runs").string();
  ASSERT_EQ(xwalk_cli({"simulate", "--population", pop.string(), "--out", runs, "--seed", "5",
    "--trials", "control=1"}).code, 0);
  const fs::path log = logs_under(runs).front();
  const std::string body = slurp(log);
  const auto nl = body.find('\n');
  json header = json::parse(body.substr(0, nl));
  header["v"] = 2;
  spit(log, header.dump() + body.substr(nl));
  const auto r = xwalk_cli({"analyze", runs, "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("schema"), std::string::npos);

  fs::create_directories(dir / "occupied");
  spit(dir / "occupied" / "notes.txt", "keep");
  EXPECT_EQ(xwalk_cli({"simulate", "--population", pop.string(), "--out", (dir / "occupied").string(),
    "--trials", "control=1"}).code, 2);
  EXPECT_TRUE(fs::exists(dir / "occupied" / "notes.txt"));
}

TEST(Cli, InvalidDesignIsAnEstimationFailure)
{
  TempDir dir;
  const auto pop = write_population(dir);
  const auto runs = (dir / "runs").string();
  ASSERT_EQ(xwalk_cli({"simulate", "--population", pop.string(), "--out", runs, "--seed", "6",
    "--trials", "control=1"}).code, 0);
  spit(dir / "design.json",
    R"({"condition": "Control", "covariates": ["female", "pct_phone_wait"]})");
  const auto r = xwalk_cli({"estimate", runs, "--design", (dir / "design.json").string(),
    "--out", (dir / "fit").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("pct_phone_wait"), std::string::npos) << r.err;
}
