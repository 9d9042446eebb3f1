#include "xwalk/gateway/server.hpp"

#include "xwalk/core/errors.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include <chrono>
#include <deque>
#include <sstream>
#include <thread>

namespace xwalk
{

namespace
{
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

constexpr auto kReadTimeout = std::chrono::seconds(30);
constexpr auto kStallPoll = std::chrono::milliseconds(1);

struct Target
{
  std::vector<std::string> parts;
  std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target)
{
  Target out;
  const auto q = target.find('?');
  const std::string_view path = target.substr(0, q);
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto next = path.find('/', pos);
    const auto part = path.substr(pos, next == std::string_view::npos ? next : next - pos);
    if (!part.empty()) {
      out.parts.emplace_back(part);
    }
    if (next == std::string_view::npos) {
      break;
    }
    pos = next + 1;
  }
  if (q != std::string_view::npos) {
    std::istringstream rest{std::string(target.substr(q + 1))};
    std::string item;
    while (std::getline(rest, item, '&')) {
      const auto eq = item.find('=');
      if (eq != std::string::npos) {
        out.query[item.substr(0, eq)] = item.substr(eq + 1);
      }
    }
  }
  return out;
}

Response make_response(
  const Request & req, http::status status, std::string body, std::string_view type)
{
  Response res{status, req.version()};
  res.set(http::field::server, "xwalk");
  res.set(http::field::content_type, std::string(type));
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const Request & req, http::status status, const nlohmann::json & j)
{
  return make_response(req, status, j.dump() + "\n", "application/json");
}

Response error_response(const Request & req, http::status status, std::string_view message)
{
  return json_response(req, status, {{"error", std::string(message)}});
}

nlohmann::json request_body(const Request & req)
{
  if (req.body().empty()) {
    return nlohmann::json::object();
  }
  return nlohmann::json::parse(req.body());
}

std::string_view artifact_type(const std::string & kind)
{
  if (kind == "logs") return "application/x-ndjson";
  if (kind == "fit") return "application/json";
  return "text/csv";
}

Response route(Gateway & gateway, const Request & req)
{
  const Target t = parse_target(std::string_view(req.target().data(), req.target().size()));
  const auto & p = t.parts;
  const auto method = req.method();
  try {
    if (p.size() == 1 && p[0] == "sessions") {
      if (method == http::verb::post) {
        return json_response(
          req, http::status::created, descriptor_json(gateway.create_session(request_body(req))));
      }
      if (method == http::verb::get) {
        return json_response(req, http::status::ok, gateway.session_ids());
      }
    }
    if (p.size() >= 2 && p[0] == "sessions") {
      const std::string & id = p[1];
      if (p.size() == 2 && method == http::verb::get) {
        return json_response(req, http::status::ok, descriptor_json(gateway.descriptor(id)));
      }
      if (p.size() == 3 && p[2] == "trials" && method == http::verb::post) {
        const bool practice = request_body(req).value("practice", false);
        const TrialStart s = gateway.start_trial(id, practice);
        return json_response(
          req, http::status::created,
          {{"trial_index", s.trial_index},
           {"condition", std::string(to_string(s.condition))},
           {"practice", s.practice},
           {"stream", fmt::format("/sessions/{}/trial", id)},
           {"first_frame", s.first_frame}});
      }
      if (p.size() == 3 && p[2] == "trial" && method == http::verb::delete_) {
        gateway.abort_trial(id);
        return make_response(req, http::status::no_content, "", "application/json");
      }
      if (p.size() == 4 && p[2] == "artifacts" && method == http::verb::get) {
        double threshold = kDefaultDangerThreshold;
        if (const auto it = t.query.find("threshold"); it != t.query.end()) {
          try {
            threshold = std::stod(it->second);
          } catch (const std::exception &) {
            throw InvalidArgument(fmt::format("bad threshold '{}'", it->second));
          }
        }
        return make_response(
          req, http::status::ok, gateway.fetch_artifact(id, p[3], threshold), artifact_type(p[3]));
      }
    }
    return error_response(req, http::status::not_found, "no such endpoint");
  } catch (const NotFound & e) {
    return error_response(req, http::status::not_found, e.what());
  } catch (const Conflict & e) {
    return error_response(req, http::status::conflict, e.what());
  } catch (const SessionAbort & e) {
    return error_response(req, http::status::conflict, e.what());
  } catch (const InvalidArgument & e) {
    return error_response(req, http::status::bad_request, e.what());
  } catch (const nlohmann::json::exception & e) {
    return error_response(req, http::status::bad_request, e.what());
  } catch (const std::exception & e) {
    return error_response(req, http::status::internal_server_error, e.what());
  }
}

class TrialStream : public std::enable_shared_from_this<TrialStream>
{
public:
  TrialStream(tcp::socket && socket, Gateway & gateway, std::string id, const ServerOptions & options)
  : ws_(std::move(socket)),
    timer_(ws_.get_executor()),
    gateway_(gateway),
    id_(std::move(id)),
    options_(options)
  {
  }

  void start(Request req)
  {
    ws_.binary(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

private:
  using Clock = std::chrono::steady_clock;

  void on_accept(beast::error_code ec)
  {
    if (ec) {
      return;
    }
    try {
      enqueue(encode_frame(gateway_.latest_frame(id_)));
    } catch (const NotFound & e) {
      finish_with_error(404, e.what());
      return;
    } catch (const Conflict & e) {
      finish_with_error(409, e.what());
      return;
    }
    do_read();
    next_deadline_ = Clock::now();
    schedule_tick();
  }

  void finish_with_error(int status, std::string_view message)
  {
    finished_ = true;
    enqueue(encode_frame(error_frame_json(status, message)));
    do_read();
  }

  void do_read()
  {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec)
  {
    if (ec) {
      on_disconnect();
      return;
    }
    decoder_.feed(beast::buffers_to_string(in_.data()));
    in_.consume(in_.size());
    try {
      while (auto frame = decoder_.next()) {
        handle_frame(*frame);
      }
    } catch (const SchemaMismatch & e) {
      enqueue(encode_frame(error_frame_json(400, e.what())));
    } catch (const ProtocolError & e) {
      enqueue(encode_frame(error_frame_json(400, e.what())));
    }
    do_read();
  }

  void handle_frame(const nlohmann::json & j)
  {
    if (j.value("type", std::string()) != "input") {
      enqueue(encode_frame(error_frame_json(400, "unexpected frame type")));
      return;
    }
    const InputFrame in = input_frame_from_json(j);
    try {
      const InputAck ack = gateway_.ingest_input(id_, in);
      enqueue(encode_frame(ack_frame_json(ack.server_tick, ack.client_t)));
    } catch (const Conflict & e) {
      enqueue(encode_frame(error_frame_json(409, e.what())));
    } catch (const NotFound & e) {
      enqueue(encode_frame(error_frame_json(404, e.what())));
    }
  }

  void schedule_tick()
  {
    if (finished_ || closed_) {
      return;
    }
    if (options_.tick_rate > 0.0) {
      next_deadline_ += std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / options_.tick_rate));
      timer_.expires_at(next_deadline_);
    } else {
      timer_.expires_after(Clock::duration::zero());
    }
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) { self->on_tick(ec); });
  }

  void on_tick(beast::error_code ec)
  {
    if (ec || finished_ || closed_) {
      return;
    }
    if (out_.size() >= options_.max_backlog) {
      // Client is behind: hold the simulation at this tick boundary and
      // restart the pacing clock once it catches up.
      next_deadline_ = Clock::now();
      timer_.expires_after(kStallPoll);
      timer_.async_wait([self = shared_from_this()](beast::error_code e) { self->on_tick(e); });
      return;
    }
    try {
      const TickUpdate u = gateway_.advance(id_);
      enqueue(encode_frame(u.frame));
      if (u.finished) {
        finished_ = true;
        return;
      }
    } catch (const std::exception & e) {
      finish_with_error(500, e.what());
      return;
    }
    schedule_tick();
  }

  void enqueue(std::string frame)
  {
    out_.push_back(std::move(frame));
    if (!writing_) {
      do_write();
    }
  }

  void do_write()
  {
    writing_ = true;
    ws_.async_write(
      asio::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        self->on_write(ec);
      });
  }

  void on_write(beast::error_code ec)
  {
    if (ec) {
      on_disconnect();
      return;
    }
    out_.pop_front();
    if (!out_.empty()) {
      do_write();
      return;
    }
    writing_ = false;
    if (finished_ && !closed_) {
      closed_ = true;
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }
  }

  void on_disconnect()
  {
    if (disconnected_) {
      return;
    }
    disconnected_ = true;
    closed_ = true;
    timer_.cancel();
    if (!finished_) {
      try {
        gateway_.abort_trial(id_);
      } catch (const std::exception &) {
      }
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  Gateway & gateway_;
  std::string id_;
  ServerOptions options_;
  beast::flat_buffer in_;
  FrameDecoder decoder_;
  std::deque<std::string> out_;
  Clock::time_point next_deadline_;
  bool writing_ = false;
  bool finished_ = false;
  bool closed_ = false;
  bool disconnected_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection>
{
public:
  HttpConnection(tcp::socket && socket, Gateway & gateway, const ServerOptions & options)
  : stream_(std::move(socket)), gateway_(gateway), options_(options)
  {
  }

  void start() { do_read(); }

private:
  void do_read()
  {
    req_ = {};
    stream_.expires_after(kReadTimeout);
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec)
  {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec) {
      return;
    }
    if (websocket::is_upgrade(req_)) {
      const Target t = parse_target(std::string_view(req_.target().data(), req_.target().size()));
      if (t.parts.size() == 3 && t.parts[0] == "sessions" && t.parts[2] == "trial") {
        stream_.expires_never();
        std::make_shared<TrialStream>(stream_.release_socket(), gateway_, t.parts[1], options_)
          ->start(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<Response>(route(gateway_, req_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code e, std::size_t) {
      if (e) {
        return;
      }
      if (res->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  Gateway & gateway_;
  ServerOptions options_;
};
}  // namespace

struct Server::Impl
{
  Impl(Gateway & g, ServerOptions o)
  : gateway(g), options(std::move(o)), acceptor(ioc)
  {
    const tcp::endpoint endpoint{asio::ip::make_address(options.address), options.port};
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(asio::socket_base::max_listen_connections);
    do_accept();
  }

  void do_accept()
  {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        return;
      }
      std::make_shared<HttpConnection>(std::move(socket), gateway, options)->start();
      do_accept();
    });
  }

  Gateway & gateway;
  ServerOptions options;
  asio::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread thread;
};

Server::Server(Gateway & gateway, ServerOptions options)
: impl_(std::make_unique<Impl>(gateway, std::move(options)))
{
}

Server::~Server()
{
  stop();
}

unsigned short Server::port() const noexcept
{
  return impl_->acceptor.local_endpoint().port();
}

void Server::run()
{
  impl_->ioc.run();
}

void Server::start()
{
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::stop()
{
  impl_->ioc.stop();
  if (impl_->thread.joinable()) {
    impl_->thread.join();
  }
}

}  // namespace xwalk
