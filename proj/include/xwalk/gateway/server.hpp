#pragma once

#include "xwalk/gateway/gateway.hpp"

#include <cstddef>
#include <memory>
#include <string>

namespace xwalk
{

struct ServerOptions
{
  std::string address = "127.0.0.1";
  unsigned short port = 0;      // 0 picks a free port
  double tick_rate = 60.0;      // ticks per second; 0 runs as fast as the client reads
  std::size_t max_backlog = 8;  // unsent frames before the trial pauses
};

/// HTTP control plane and WebSocket trial stream over one port.
///
///   POST /sessions                          create a session
///   GET  /sessions/{id}                     descriptor
///   POST /sessions/{id}/trials              start a trial, {"practice": bool}
///   GET  /sessions/{id}/artifacts/{kind}    logs | summary | design | fit, ?threshold=s
///   GET  /sessions/{id}/trial               WebSocket upgrade, binary messages
///                                           carrying length-prefixed frames
///
/// The stream pauses at a tick boundary while the client falls behind; a
/// disconnect before the outcome aborts the trial.
class Server
{
public:
  Server(Gateway & gateway, ServerOptions options);
  ~Server();

  Server(const Server &) = delete;
  Server & operator=(const Server &) = delete;

  /// Bound port, valid after construction.
  unsigned short port() const noexcept;
  /// Serves on the calling thread until stop().
  void run();
  /// Serves on a background thread.
  void start();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xwalk
