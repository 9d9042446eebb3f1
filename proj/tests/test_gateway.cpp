#include "xwalk/core/errors.hpp"
#include "xwalk/gateway/gateway.hpp"
#include "xwalk/gateway/server.hpp"
#include "xwalk/gateway/wire.hpp"
#include "xwalk/trial/record_io.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace xwalk;
namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;
using nlohmann::json;

namespace
{

class TempDir
{
public:
  TempDir()
  {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("xwalk-gw-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path & path() const { return path_; }

private:
  fs::path path_;
};

GatewayConfig config_at(const fs::path & root)
{
  GatewayConfig c;
  c.root = root;
  c.seed = 99;
  return c;
}

json request(std::uint64_t seed, json plan = {{"control", 1}})
{
  return {
    {"participant", {{"gender", "female"}, {"age_band", "18-30"}}},
    {"plan", std::move(plan)},
    {"seed", seed}};
}

// Smallest headway to the line among vehicles still short of it.
double frame_gap(const json & frame)
{
  double best = std::numeric_limits<double>::infinity();
  double nearest = -std::numeric_limits<double>::infinity();
  for (const json & v : frame.at("vehicles")) {
    const double x = v.at("x").get<double>();
    const double speed = v.at("v").get<double>();
    if (x < 0.0 && x > nearest) {
      nearest = x;
      best = speed > 0.0 ? -x / speed : std::numeric_limits<double>::infinity();
    }
  }
  return best;
}

InputFrame walk_if_clear(const json & frame, double t)
{
  InputFrame in;
  in.client_t = t;
  if (frame.at("ped").at("init").get<bool>() || frame_gap(frame) >= 7.0) {
    in.walk_command = 1.4;
  }
  return in;
}

// Drives one trial through the gateway with a cautious walker; returns the final frame.
json drive(Gateway & gw, const std::string & id)
{
  json frame = gw.start_trial(id, false).first_frame;
  for (;;) {
    gw.ingest_input(id, walk_if_clear(frame, frame.at("t").get<double>()));
    const TickUpdate u = gw.advance(id);
    frame = u.frame;
    if (u.finished) {
      return frame;
    }
  }
}

json strip_transport(json frame)
{
  frame.erase("type");
  frame.erase("trial_status");
  frame.erase("v");
  return frame;
}

}  // namespace

TEST(Wire, FramesRoundTripInPieces)
{
  InputFrame in;
  in.walk_command = 1.2;
  in.head_toggle = true;
  in.client_t = 3.5;
  const std::string a = encode_frame(input_frame_json(in));
  const std::string b = encode_frame(ack_frame_json(7, 3.5));
  ASSERT_GE(a.size(), 4u);
  const auto len = (static_cast<unsigned char>(a[0]) << 24) | (static_cast<unsigned char>(a[1]) << 16) |
                   (static_cast<unsigned char>(a[2]) << 8) | static_cast<unsigned char>(a[3]);
  EXPECT_EQ(static_cast<std::size_t>(len), a.size() - 4);

  FrameDecoder d;
  const std::string both = a + b;
  for (const char c : both) {
    d.feed(std::string_view(&c, 1));
  }
  const auto first = d.next();
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(first->at("v"), 1);
  EXPECT_EQ(input_frame_from_json(*first), in);
  const auto second = d.next();
  ASSERT_TRUE(second.has_value());
  EXPECT_EQ(second->at("type"), "ack");
  EXPECT_EQ(second->at("server_tick"), 7);
  EXPECT_FALSE(d.next().has_value());
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(Wire, DecoderRejectsBadFrames)
{
  {
    FrameDecoder d;
    d.feed(std::string("\x7f\xff\xff\xff", 4));
    EXPECT_THROW(d.next(), ProtocolError);
  }
  {
    const std::string body = "{not json";
    std::string f(4, '\0');
    f[3] = static_cast<char>(body.size());
    FrameDecoder d;
    d.feed(f + body);
    EXPECT_THROW(d.next(), ProtocolError);
  }
  {
    const std::string body = R"({"v":2,"type":"input"})";
    std::string f(4, '\0');
    f[3] = static_cast<char>(body.size());
    FrameDecoder d;
    d.feed(f + body);
    EXPECT_THROW(d.next(), SchemaMismatch);
  }
  EXPECT_THROW(input_frame_from_json({{"type", "input"}, {"walk_command", "fast"}}), ProtocolError);
  EXPECT_THROW(input_frame_from_json({{"type", "tick"}}), ProtocolError);
}

TEST(Gateway, CreateAndDescribe)
{
  TempDir dir;
  Gateway gw(config_at(dir.path()));
  const auto a = gw.create_session(request(1));
  const auto b = gw.create_session(request(1));
  EXPECT_NE(a.session_id, b.session_id);
  EXPECT_EQ(a.status, SessionStatus::Idle);
  EXPECT_EQ(a.seed, 1u);
  EXPECT_EQ(gw.descriptor(a.session_id).participant.tags.female, true);
  EXPECT_EQ(gw.session_ids().size(), 2u);
  EXPECT_TRUE(fs::exists(dir.path() / a.session_id / "session.json"));

  EXPECT_THROW(gw.descriptor("nope"), NotFound);
  EXPECT_THROW(gw.start_trial("nope", false), NotFound);
  EXPECT_THROW(gw.create_session(json{{"participant", {{"gender", "x"}, {"age_band", "18-30"}}}}), InvalidArgument);
  EXPECT_THROW(gw.create_session(request(1, {{"control", -1}})), InvalidArgument);

  Gateway reloaded(config_at(dir.path()));
  EXPECT_EQ(reloaded.descriptor(b.session_id).seed, 1u);
}

TEST(Gateway, TrialLifecycleConflicts)
{
  TempDir dir;
  Gateway gw(config_at(dir.path()));
  const std::string id = gw.create_session(request(5)).session_id;
  InputFrame idle;
  EXPECT_THROW(gw.ingest_input(id, idle), Conflict);
  EXPECT_THROW(gw.advance(id), Conflict);

  gw.start_trial(id, false);
  EXPECT_TRUE(gw.trial_running(id));
  EXPECT_EQ(gw.descriptor(id).status, SessionStatus::TrialRunning);
  EXPECT_THROW(gw.start_trial(id, false), Conflict);
  gw.abort_trial(id);
  EXPECT_FALSE(gw.trial_running(id));
  EXPECT_THROW(gw.fetch_artifact(id, "logs"), InvalidArgument);

  const json last = drive(gw, id);
  EXPECT_EQ(last.at("trial_status"), "Success");
  EXPECT_EQ(gw.descriptor(id).status, SessionStatus::Complete);
  try {
    gw.start_trial(id, false);
    FAIL() << "expected Conflict";
  } catch (const Conflict & e) {
    EXPECT_NE(std::string(e.what()).find("session complete"), std::string::npos);
  }
  EXPECT_THROW(gw.ingest_input(id, idle), Conflict);
}

TEST(Gateway, BurstOfInputsKeepsTheLatest)
{
  TempDir dir;
  Gateway gw(config_at(dir.path()));
  const std::string id = gw.create_session(request(6)).session_id;
  gw.start_trial(id, false);
  for (int i = 0; i < 5; ++i) {
    InputFrame in;
    in.walk_command = 0.2 * (i + 1);
    in.client_t = i;
    const InputAck ack = gw.ingest_input(id, in);
    EXPECT_EQ(ack.server_tick, 1);
    EXPECT_EQ(ack.client_t, i);
  }
  const json f1 = gw.advance(id).frame;
  EXPECT_EQ(f1.at("k"), 1);
  EXPECT_DOUBLE_EQ(f1.at("in").at("walk").get<double>(), 1.0);
  EXPECT_FALSE(f1.value("held", false));
  // Nothing queued: the previous input is held.
  const json f2 = gw.advance(id).frame;
  EXPECT_TRUE(f2.value("held", false));
  EXPECT_DOUBLE_EQ(f2.at("in").at("walk").get<double>(), 1.0);
  EXPECT_EQ(strip_transport(gw.latest_frame(id)), strip_transport(f2));
}

TEST(Gateway, ArtifactsAreStableAndComplete)
{
  TempDir dir;
  Gateway gw(config_at(dir.path()));
  const std::string id = gw.create_session(request(8, {{"control", 3}})).session_id;
  std::vector<json> finals;
  while (gw.descriptor(id).status != SessionStatus::Complete) {
    finals.push_back(drive(gw, id));
  }
  const std::string logs = gw.fetch_artifact(id, "logs");
  EXPECT_EQ(logs, gw.fetch_artifact(id, "logs"));
  std::istringstream in(logs);
  const auto records = read_trials(in, "logs");
  EXPECT_EQ(records.size(), finals.size());
  EXPECT_GE(records.size(), 3u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(strip_transport(finals[i]), tick_json(records[i].ticks.back()));
    EXPECT_TRUE(replay_trial(records[i]).identical);
  }
  const std::string summary = gw.fetch_artifact(id, "summary", 1.5);
  EXPECT_EQ(summary, gw.fetch_artifact(id, "summary", 1.5));
  EXPECT_NE(summary.find("General"), std::string::npos);
  EXPECT_FALSE(gw.fetch_artifact(id, "design").empty());
  EXPECT_THROW(gw.fetch_artifact(id, "bogus"), InvalidArgument);
}

TEST(Gateway, SameSeedSameLogs)
{
  TempDir a;
  TempDir b;
  Gateway ga(config_at(a.path()));
  Gateway gb(config_at(b.path()));
  const std::string ia = ga.create_session(request(42)).session_id;
  const std::string ib = gb.create_session(request(42)).session_id;
  drive(ga, ia);
  drive(gb, ib);
  EXPECT_EQ(ga.fetch_artifact(ia, "logs"), gb.fetch_artifact(ib, "logs"));
}

namespace
{

struct HttpReply
{
  unsigned status;
  std::string body;
};

HttpReply http_call(unsigned short port, http::verb verb, const std::string & target, const std::string & body = "")
{
  boost::asio::io_context ioc;
  beast::tcp_stream stream(ioc);
  stream.connect(tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), port));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  req.set(http::field::content_type, "application/json");
  req.body() = body;
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body()};
}

}  // namespace

TEST(Server, StreamsATrialOverWebSocket)
{
  TempDir dir;
  Gateway gw(config_at(dir.path()));
  ServerOptions opt;
  opt.tick_rate = 0.0;
  Server server(gw, opt);
  server.start();
  const unsigned short port = server.port();
  ASSERT_NE(port, 0);

  const HttpReply created = http_call(port, http::verb::post, "/sessions", request(17).dump());
  ASSERT_EQ(created.status, 201u) << created.body;
  const std::string id = json::parse(created.body).at("session_id").get<std::string>();
  EXPECT_EQ(http_call(port, http::verb::get, "/sessions/" + id).status, 200u);
  EXPECT_EQ(http_call(port, http::verb::get, "/sessions/zzz").status, 404u);
  EXPECT_EQ(http_call(port, http::verb::get, "/nowhere").status, 404u);
  EXPECT_EQ(http_call(port, http::verb::post, "/sessions", "{").status, 400u);

  const HttpReply started = http_call(port, http::verb::post, "/sessions/" + id + "/trials", "{}");
  ASSERT_EQ(started.status, 201u) << started.body;
  EXPECT_EQ(http_call(port, http::verb::post, "/sessions/" + id + "/trials", "{}").status, 409u);

  boost::asio::io_context ioc;
  websocket::stream<tcp::socket> ws(ioc);
  ws.next_layer().connect(tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), port));
  ws.handshake("127.0.0.1", "/sessions/" + id + "/trial");
  ws.binary(true);

  std::vector<json> ticks;
  FrameDecoder decoder;
  beast::flat_buffer buf;
  int acks = 0;
  bool sent = false;
  for (;;) {
    beast::error_code ec;
    ws.read(buf, ec);
    if (ec) {
      break;
    }
    decoder.feed(beast::buffers_to_string(buf.data()));
    buf.consume(buf.size());
    while (auto f = decoder.next()) {
      const std::string type = f->at("type").get<std::string>();
      if (type == "ack") {
        ++acks;
      } else if (type == "tick") {
        ticks.push_back(*f);
        if (!sent) {
          InputFrame in;
          in.walk_command = 1.4;
          in.client_t = 0.5;
          ws.write(boost::asio::buffer(encode_frame(input_frame_json(in))));
          sent = true;
        }
      } else {
        ADD_FAILURE() << f->dump();
      }
    }
  }
  ASSERT_FALSE(ticks.empty());
  EXPECT_EQ(acks, 1);
  EXPECT_NE(ticks.back().at("trial_status"), "running");

  const HttpReply logs = http_call(port, http::verb::get, "/sessions/" + id + "/artifacts/logs");
  ASSERT_EQ(logs.status, 200u);
  std::istringstream in(logs.body);
  const auto records = read_trials(in, "logs");
  ASSERT_EQ(records.size(), 1u);
  const TrialRecord & r = records[0];
  ASSERT_EQ(r.ticks.size(), ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    ASSERT_EQ(strip_transport(ticks[i]), tick_json(r.ticks[i])) << "tick " << i;
  }
  EXPECT_TRUE(replay_trial(r).identical);
  EXPECT_EQ(http_call(port, http::verb::get, "/sessions/" + id + "/artifacts/summary").status, 200u);
  EXPECT_EQ(http_call(port, http::verb::get, "/sessions/" + id + "/artifacts/bogus").status, 400u);
  server.stop();
}
