#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drillsim::ws {

enum class Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

/// Sec-WebSocket-Accept for a client key (RFC 6455: base64(sha1(key + GUID))).
std::string accept_key(const std::string& client_key);

/// Returns the Sec-WebSocket-Key of a valid upgrade request, else nullopt.
std::optional<std::string> parse_upgrade_request(const std::string& request);
std::string upgrade_response(const std::string& client_key);
std::string upgrade_request(const std::string& host, const std::string& path, const std::string& client_key);

/// One complete frame. Clients must mask (mask_key set); servers must not.
std::vector<std::uint8_t> encode_frame(Opcode op, const std::uint8_t* data, std::size_t size,
                                       std::optional<std::uint32_t> mask_key = std::nullopt, bool fin = true);
inline std::vector<std::uint8_t> encode_frame(Opcode op, const std::vector<std::uint8_t>& data,
                                              std::optional<std::uint32_t> mask_key = std::nullopt) {
  return encode_frame(op, data.data(), data.size(), mask_key);
}

struct WsMessage {
  Opcode opcode = Opcode::Binary;
  std::vector<std::uint8_t> data;
};

/// Incremental decoder; reassembles fragmented data messages. Control frames
/// are returned as they arrive, even between fragments.
class Decoder {
 public:
  explicit Decoder(std::size_t max_message = std::size_t{1} << 30) : max_message_(max_message) {}
  void feed(const std::uint8_t* data, std::size_t size);
  /// Next complete message; throws Error(CorruptRecording) on a protocol violation.
  std::optional<WsMessage> next();

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::size_t max_message_;
  std::optional<WsMessage> partial_;
};

}  // namespace drillsim::ws
