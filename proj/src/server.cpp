#include "drillsim/server.hpp"

#include "drillsim/error.hpp"
#include "drillsim/websocket.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bitset>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>

namespace drillsim {

using json = nlohmann::json;

namespace {

using Bytes = std::shared_ptr<const std::vector<std::uint8_t>>;

bool send_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

/// Waits up to `ms` for input; returns bytes read, 0 on timeout, -1 on EOF/error.
ssize_t recv_some(int fd, std::vector<std::uint8_t>& out, int ms) {
  pollfd p{fd, POLLIN, 0};
  const int r = ::poll(&p, 1, ms);
  if (r == 0) return 0;
  if (r < 0) return errno == EINTR ? 0 : -1;
  std::uint8_t tmp[65536];
  const ssize_t n = ::recv(fd, tmp, sizeof tmp, 0);
  if (n <= 0) return -1;
  out.insert(out.end(), tmp, tmp + n);
  return n;
}

std::optional<Message> take_frame(std::vector<std::uint8_t>& buf, std::size_t& pos) {
  DecodeResult r = decode_frame(buf.data() + pos, buf.size() - pos);
  if (r.status == DecodeStatus::NeedMore) return std::nullopt;
  if (r.status == DecodeStatus::Corrupt) throw Error(ErrorCode::CorruptRecording, r.error);
  pos += r.consumed;
  if (pos == buf.size()) {
    buf.clear();
    pos = 0;
  }
  return std::move(r.message);
}

Message unwrap(const std::vector<std::uint8_t>& data) {
  DecodeResult r = decode_frame(data.data(), data.size());
  if (r.status != DecodeStatus::Ok || r.consumed != data.size())
    throw Error(ErrorCode::CorruptRecording, "websocket message is not exactly one frame");
  return std::move(r.message);
}

std::string ack_header(const std::string& status, const std::string& role, const std::vector<Topic>& topics) {
  json j;
  j["status"] = status;
  j["role"] = role;
  j["topics"] = json::array();
  for (Topic t : topics) j["topics"].push_back(topic_name(t));
  return j.dump();
}

}  // namespace

Endpoint parse_endpoint(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected host:port, got '" + address + "'");
  Endpoint e;
  e.host = address.substr(0, colon);
  if (e.host.empty()) e.host = "0.0.0.0";
  const std::string port = address.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || v < 0 || v > 65535) throw Error(ErrorCode::InvalidArgument, "bad port in '" + address + "'");
  e.port = static_cast<std::uint16_t>(v);
  return e;
}

struct StreamServer::Connection {
  int fd = -1;
  std::atomic<bool> alive{true};
  std::atomic<bool> ready{false};
  bool websocket = false;
  bool controller = false;
  std::bitset<256> topics;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> queue;
  std::thread reader;
  std::thread writer;

  void push(Bytes b) {
    {
      std::lock_guard lock(mu);
      queue.push_back(std::move(b));
    }
    cv.notify_one();
  }
  void kill() {
    if (alive.exchange(false)) ::shutdown(fd, SHUT_RDWR);
    cv.notify_all();
  }
};

StreamServer::StreamServer(const std::string& address, ServerOptions options) : options_(options) {
  const Endpoint ep = parse_endpoint(address);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::BindFailure, "cannot resolve " + ep.host);
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const bool ok = listen_fd_ >= 0 && ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) == 0 && ::listen(listen_fd_, 16) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    const std::string why = std::strerror(errno);
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::BindFailure, "cannot bind " + address + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  host_ = ep.host;
}

StreamServer::~StreamServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void StreamServer::set_control_handler(ControlHandler handler) {
  std::lock_guard lock(mu_);
  control_ = std::move(handler);
}

void StreamServer::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void StreamServer::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(mu_);
    conns.swap(connections_);
  }
  // let writers flush what is already queued
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(1);
  for (auto& c : conns) {
    while (c->alive && std::chrono::steady_clock::now() < deadline) {
      {
        std::lock_guard lock(c->mu);
        if (c->queue.empty()) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  for (auto& c : conns) {
    c->kill();
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
}

void StreamServer::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, 50);
    reap();
    if (r <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto c = std::make_shared<Connection>();
    c->fd = fd;
    {
      std::lock_guard lock(mu_);
      connections_.push_back(c);
    }
    c->reader = std::thread([this, c] { serve_connection(c); });
  }
}

void StreamServer::reap() {
  std::vector<std::shared_ptr<Connection>> dead;
  {
    std::lock_guard lock(mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (!(*it)->alive) {
        dead.push_back(*it);
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : dead) {
    c->kill();
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
}

void StreamServer::serve_connection(const std::shared_ptr<Connection>& c) {
  std::vector<std::uint8_t> buf;
  std::size_t pos = 0;
  ws::Decoder decoder;
  const auto recv_more = [&]() -> bool {
    while (c->alive && running_) {
      const ssize_t n = recv_some(c->fd, buf, 50);
      if (n > 0) return true;
      if (n < 0) return false;
    }
    return false;
  };
  const auto start_writer = [&] {
    c->writer = std::thread([c] {
      for (;;) {
        Bytes b;
        {
          std::unique_lock lock(c->mu);
          c->cv.wait(lock, [&] { return !c->queue.empty() || !c->alive; });
          if (!c->alive) return;
          b = std::move(c->queue.front());
          c->queue.pop_front();
        }
        if (!send_all(c->fd, b->data(), b->size())) {
          c->kill();
          return;
        }
      }
    });
  };
  const auto send_message = [&](const Message& m) {
    std::vector<std::uint8_t> raw = encode_frame(m);
    c->push(std::make_shared<const std::vector<std::uint8_t>>(c->websocket ? ws::encode_frame(ws::Opcode::Binary, raw) : std::move(raw)));
  };
  // next framed message from either transport
  const auto next_message = [&]() -> std::optional<Message> {
    for (;;) {
      if (c->websocket) {
        if (auto wm = decoder.next()) {
          switch (wm->opcode) {
            case ws::Opcode::Binary:
              return unwrap(wm->data);
            case ws::Opcode::Ping:
              c->push(std::make_shared<const std::vector<std::uint8_t>>(ws::encode_frame(ws::Opcode::Pong, wm->data)));
              continue;
            case ws::Opcode::Close:
              c->push(std::make_shared<const std::vector<std::uint8_t>>(ws::encode_frame(ws::Opcode::Close, wm->data)));
              return std::nullopt;
            default:
              continue;  // text and pong are ignored
          }
        }
        buf.clear();
        if (!recv_more()) return std::nullopt;
        decoder.feed(buf.data(), buf.size());
      } else {
        if (auto m = take_frame(buf, pos)) return m;
        if (!recv_more()) return std::nullopt;
      }
    }
  };

  try {
    while (buf.size() < 4)
      if (!recv_more()) throw Error(ErrorCode::InputStreamClosed, "closed before handshake");
    if (std::memcmp(buf.data(), "GET ", 4) == 0) {
      std::string request(buf.begin(), buf.end());
      while (request.find("\r\n\r\n") == std::string::npos) {
        if (request.size() > 16384 || !recv_more()) throw Error(ErrorCode::InputStreamClosed, "bad upgrade request");
        request.assign(buf.begin(), buf.end());
      }
      const std::size_t end = request.find("\r\n\r\n") + 4;
      const auto key = ws::parse_upgrade_request(request.substr(0, end));
      if (!key) {
        const std::string bad = "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n";
        send_all(c->fd, reinterpret_cast<const std::uint8_t*>(bad.data()), bad.size());
        throw Error(ErrorCode::InputStreamClosed, "not a websocket upgrade");
      }
      const std::string resp = ws::upgrade_response(*key);
      if (!send_all(c->fd, reinterpret_cast<const std::uint8_t*>(resp.data()), resp.size()))
        throw Error(ErrorCode::InputStreamClosed, "upgrade failed");
      c->websocket = true;
      decoder.feed(buf.data() + end, buf.size() - end);
      buf.clear();
    }
    start_writer();

    const auto hello_msg = next_message();
    if (!hello_msg || hello_msg->topic != Topic::Handshake) throw Error(ErrorCode::InputStreamClosed, "missing handshake");
    const Handshake hello = decode_handshake(*hello_msg);
    bool refused = false;
    {
      std::lock_guard lock(mu_);
      if (hello.role == "controller") {
        for (const auto& other : connections_)
          if (other != c && other->alive && other->controller) refused = true;
        c->controller = !refused;
      }
      if (hello.topics.empty()) c->topics.set();
      for (Topic t : hello.topics) c->topics.set(static_cast<std::size_t>(t));
      c->topics.reset(0);
    }
    send_message({Topic::Handshake, 0, ack_header(refused ? "rejected" : "ok", hello.role, hello.topics), {}});
    if (refused) {
      // give the writer a moment to deliver the refusal
      for (int i = 0; i < 100 && c->alive; ++i) {
        {
          std::lock_guard lock(c->mu);
          if (c->queue.empty()) break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      c->kill();
      return;
    }
    c->ready = true;

    while (auto m = next_message()) {
      if (!c->controller) continue;
      if (m->topic != Topic::ControlDrill && m->topic != Topic::ControlCamera) continue;
      if (check_payload(*m)) continue;
      ControlHandler handler;
      {
        std::lock_guard lock(mu_);
        handler = control_;
      }
      if (handler) handler(*m);
    }
  } catch (const std::exception&) {
    // protocol error or early close: drop the connection
  }
  c->kill();
}

void StreamServer::publish(const Message& m) {
  Bytes raw, wrapped;
  std::lock_guard lock(mu_);
  for (const auto& c : connections_) {
    if (!c->ready || !c->alive || !c->topics.test(static_cast<std::size_t>(m.topic))) continue;
    if (!raw) raw = std::make_shared<const std::vector<std::uint8_t>>(encode_frame(m));
    if (c->websocket && !wrapped) wrapped = std::make_shared<const std::vector<std::uint8_t>>(ws::encode_frame(ws::Opcode::Binary, *raw));
    {
      std::lock_guard qlock(c->mu);
      if (c->queue.size() >= options_.queue_limit) {
        ++dropped_;
        continue;
      }
      c->queue.push_back(c->websocket ? wrapped : raw);
    }
    c->cv.notify_one();
  }
}

std::size_t StreamServer::subscriber_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : connections_) n += c->ready && c->alive && !c->controller;
  return n;
}

bool StreamServer::has_controller() const {
  std::lock_guard lock(mu_);
  for (const auto& c : connections_)
    if (c->ready && c->alive && c->controller) return true;
  return false;
}

bool StreamServer::wait_for_subscribers(std::size_t n, std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (subscriber_count() < n) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return true;
}

// ---------------------------------------------------------------- client

struct StreamClient::WsState {
  ws::Decoder decoder;
};

StreamClient::StreamClient(const std::string& host, std::uint16_t port, const Handshake& hello, bool websocket,
                           std::chrono::milliseconds timeout)
    : websocket_(websocket) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string p = std::to_string(port);
  if (::getaddrinfo(host.c_str(), p.c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::Io, "cannot resolve " + host);
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    close();
    throw Error(ErrorCode::Io, "cannot connect to " + host + ":" + p);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  if (websocket_) {
    ws_ = std::make_unique<WsState>();
    const std::string key = "ZHJpbGxzaW0tY2xpZW50MQ==";
    const std::string req = ws::upgrade_request(host + ":" + p, "/", key);
    if (!send_all(fd_, reinterpret_cast<const std::uint8_t*>(req.data()), req.size()))
      throw Error(ErrorCode::Io, "upgrade request failed");
    std::string resp;
    while (resp.find("\r\n\r\n") == std::string::npos) {
      if (!fill(timeout)) throw Error(ErrorCode::Io, "no upgrade response");
      resp.assign(buf_.begin(), buf_.end());
    }
    const std::size_t end = resp.find("\r\n\r\n") + 4;
    if (resp.rfind("HTTP/1.1 101", 0) != 0 || resp.find(ws::accept_key(key)) == std::string::npos)
      throw Error(ErrorCode::Io, "websocket upgrade refused");
    ws_->decoder.feed(buf_.data() + end, buf_.size() - end);
    buf_.clear();
  }
  send(handshake_message(hello));
  const auto reply = receive(timeout);
  if (!reply || reply->topic != Topic::Handshake) throw Error(ErrorCode::Io, "no handshake reply");
  ack_ = reply->header;
  const json j = json::parse(ack_, nullptr, false);
  accepted_ = j.is_object() && j.value("status", "") == "ok";
}

StreamClient::~StreamClient() { close(); }

void StreamClient::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
  }
  fd_ = -1;
}

void StreamClient::send(const Message& m) {
  if (fd_ < 0) throw Error(ErrorCode::Io, "client closed");
  std::vector<std::uint8_t> raw = encode_frame(m);
  if (websocket_) {
    mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
    raw = ws::encode_frame(ws::Opcode::Binary, raw, mask_seed_);
  }
  if (!send_all(fd_, raw.data(), raw.size())) throw Error(ErrorCode::Io, "send failed");
}

bool StreamClient::fill(std::chrono::milliseconds timeout) {
  if (fd_ < 0) return false;
  return recv_some(fd_, buf_, static_cast<int>(timeout.count())) > 0;
}

std::optional<Message> StreamClient::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (websocket_) {
      while (auto wm = ws_->decoder.next()) {
        if (wm->opcode == ws::Opcode::Binary) return unwrap(wm->data);
        if (wm->opcode == ws::Opcode::Close) {
          close();
          return std::nullopt;
        }
      }
    } else if (auto m = take_frame(buf_, pos_)) {
      return m;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || fd_ < 0) return std::nullopt;
    if (websocket_) {
      buf_.clear();
      if (recv_some(fd_, buf_, static_cast<int>(left.count())) < 0) {
        close();
        return std::nullopt;
      }
      ws_->decoder.feed(buf_.data(), buf_.size());
      buf_.clear();
    } else if (recv_some(fd_, buf_, static_cast<int>(left.count())) < 0) {
      close();
      return std::nullopt;
    }
  }
}

}  // namespace drillsim
