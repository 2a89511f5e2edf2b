#pragma once

#include "drillsim/wire.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace drillsim {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port" (port 0 picks a free one).
Endpoint parse_endpoint(const std::string& address);

struct ServerOptions {
  std::size_t queue_limit = 64;  ///< per-subscriber messages in flight before dropping
};

/// Live endpoint. Each connection opens with a handshake message (topic 0)
/// naming its role and topic filter; connections that begin with an HTTP
/// "GET " are upgraded to WebSocket and carry one framed message per binary
/// WebSocket message. At most one controller; its control messages go to the
/// control handler. Slow subscribers lose messages, never the publisher.
class StreamServer {
 public:
  using ControlHandler = std::function<void(const Message&)>;

  /// Binds and listens immediately; throws Error(BindFailure).
  explicit StreamServer(const std::string& address, ServerOptions options = {});
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  void set_control_handler(ControlHandler handler);
  void start();
  void stop();

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }

  void publish(const Message& m);
  void publish(const std::vector<Message>& ms) {
    for (const Message& m : ms) publish(m);
  }

  std::size_t subscriber_count() const;
  bool has_controller() const;
  std::uint64_t dropped() const { return dropped_; }
  /// Blocks until `n` subscribers completed their handshake or the timeout passes.
  bool wait_for_subscribers(std::size_t n, std::chrono::milliseconds timeout) const;

 private:
  struct Connection;
  void accept_loop();
  void serve_connection(const std::shared_ptr<Connection>& c);
  void reap();

  int listen_fd_ = -1;
  std::string host_;
  std::uint16_t port_ = 0;
  ServerOptions options_;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Connection>> connections_;
  ControlHandler control_;
  std::atomic<std::uint64_t> dropped_{0};
};

/// Blocking client for tests and external consumers; speaks raw framing or,
/// with `websocket`, the browser adapter (masked client frames).
class StreamClient {
 public:
  StreamClient(const std::string& host, std::uint16_t port, const Handshake& hello, bool websocket = false,
               std::chrono::milliseconds timeout = std::chrono::seconds(5));
  ~StreamClient();
  StreamClient(const StreamClient&) = delete;
  StreamClient& operator=(const StreamClient&) = delete;

  /// The server's handshake reply; `accepted` is false if the role was refused.
  const std::string& ack() const { return ack_; }
  bool accepted() const { return accepted_; }

  void send(const Message& m);
  std::optional<Message> receive(std::chrono::milliseconds timeout);
  void close();

 private:
  bool fill(std::chrono::milliseconds timeout);

  int fd_ = -1;
  bool websocket_ = false;
  std::string ack_;
  bool accepted_ = false;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::uint32_t mask_seed_ = 0x9E3779B9u;
  struct WsState;
  std::unique_ptr<WsState> ws_;
};

}  // namespace drillsim
