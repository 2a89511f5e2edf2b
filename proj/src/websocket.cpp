#include "drillsim/websocket.hpp"

#include "drillsim/error.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace drillsim::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::CorruptRecording, "websocket: " + what); }

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string in = client_key + kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(in.data()), in.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

std::optional<std::string> parse_upgrade_request(const std::string& request) {
  std::istringstream in(request);
  std::string line;
  if (!std::getline(in, line) || line.rfind("GET ", 0) != 0) return std::nullopt;
  std::string key;
  bool upgrade = false, connection = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string name = lower(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    if (name == "upgrade") upgrade = lower(value) == "websocket";
    else if (name == "connection") connection = lower(value).find("upgrade") != std::string::npos;
    else if (name == "sec-websocket-key") key = value;
  }
  if (!upgrade || !connection || key.empty()) return std::nullopt;
  return key;
}

std::string upgrade_response(const std::string& client_key) {
  return "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: " +
         accept_key(client_key) + "\r\n\r\n";
}

std::string upgrade_request(const std::string& host, const std::string& path, const std::string& client_key) {
  return "GET " + path + " HTTP/1.1\r\nHost: " + host +
         "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + client_key +
         "\r\nSec-WebSocket-Version: 13\r\n\r\n";
}

std::vector<std::uint8_t> encode_frame(Opcode op, const std::uint8_t* data, std::size_t size,
                                       std::optional<std::uint32_t> mask_key, bool fin) {
  std::vector<std::uint8_t> out;
  out.reserve(size + 14);
  out.push_back(static_cast<std::uint8_t>((fin ? 0x80 : 0x00) | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask_key ? 0x80 : 0x00;
  if (size < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | size));
  } else if (size <= 0xFFFF) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(size >> 8));
    out.push_back(static_cast<std::uint8_t>(size));
  } else {
    out.push_back(mask_bit | 127);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(size) >> (8 * i)));
  }
  if (!mask_key) {
    out.insert(out.end(), data, data + size);
    return out;
  }
  std::uint8_t m[4];
  for (int i = 0; i < 4; ++i) m[i] = static_cast<std::uint8_t>(*mask_key >> (24 - 8 * i));
  out.insert(out.end(), m, m + 4);
  for (std::size_t i = 0; i < size; ++i) out.push_back(data[i] ^ m[i & 3]);
  return out;
}

void Decoder::feed(const std::uint8_t* data, std::size_t size) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > (1u << 20)) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), data, data + size);
}

std::optional<WsMessage> Decoder::next() {
  for (;;) {
    const std::size_t avail = buf_.size() - pos_;
    if (avail < 2) return std::nullopt;
    const std::uint8_t* p = buf_.data() + pos_;
    const bool fin = p[0] & 0x80;
    if (p[0] & 0x70) violation("reserved bits set");
    const auto op = static_cast<Opcode>(p[0] & 0x0F);
    const bool masked = p[1] & 0x80;
    std::uint64_t len = p[1] & 0x7F;
    std::size_t head = 2;
    if (len == 126) {
      if (avail < 4) return std::nullopt;
      len = (std::uint64_t{p[2]} << 8) | p[3];
      head = 4;
    } else if (len == 127) {
      if (avail < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | p[2 + i];
      head = 10;
    }
    const bool control = static_cast<std::uint8_t>(op) & 0x08;
    if (control && (!fin || len > 125)) violation("bad control frame");
    if (len > max_message_) violation("frame too large");
    const std::size_t mask_off = head;
    if (masked) head += 4;
    if (avail < head + len) return std::nullopt;
    std::vector<std::uint8_t> data(p + head, p + head + len);
    if (masked)
      for (std::size_t i = 0; i < data.size(); ++i) data[i] ^= p[mask_off + (i & 3)];
    pos_ += head + len;

    if (control) return WsMessage{op, std::move(data)};
    if (op == Opcode::Continuation) {
      if (!partial_) violation("continuation without a started message");
      if (partial_->data.size() + data.size() > max_message_) violation("message too large");
      partial_->data.insert(partial_->data.end(), data.begin(), data.end());
    } else if (op == Opcode::Text || op == Opcode::Binary) {
      if (partial_) violation("new message inside a fragmented one");
      partial_ = WsMessage{op, std::move(data)};
    } else {
      violation("unknown opcode " + std::to_string(static_cast<int>(op)));
    }
    if (fin) {
      WsMessage done = std::move(*partial_);
      partial_.reset();
      return done;
    }
  }
}

}  // namespace drillsim::ws
