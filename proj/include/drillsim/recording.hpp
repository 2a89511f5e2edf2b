#pragma once

#include "drillsim/wire.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

namespace recording {
inline constexpr std::uint32_t kFileMagic = 0x414D4252;   // "AMBR"
inline constexpr std::uint32_t kIndexMagic = 0x414D4249;  // "AMBI"
inline constexpr std::uint32_t kEndMagic = 0x414D4245;    // "AMBE"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kFileHeaderSize = 12;
}  // namespace recording

using MessageSink = std::function<void(const Message&)>;

/// Appends framed messages to a file; close() adds the footer index.
/// Never overwrites an existing file unless `overwrite` is set.
class RecordingWriter {
 public:
  RecordingWriter(const std::filesystem::path& path, const std::string& header_json, bool overwrite = false);
  ~RecordingWriter();
  RecordingWriter(const RecordingWriter&) = delete;
  RecordingWriter& operator=(const RecordingWriter&) = delete;

  void write(const Message& m);
  void close();
  std::uint64_t messages() const { return count_; }
  std::uint64_t bytes() const { return offset_; }

 private:
  void put(const std::vector<std::uint8_t>& bytes);

  std::FILE* file_ = nullptr;
  std::filesystem::path path_;
  std::uint64_t offset_ = 0;
  std::uint64_t count_ = 0;
  std::vector<std::pair<std::uint8_t, std::uint64_t>> index_;
  std::vector<std::uint8_t> scratch_;
};

/// Sequential reader. A file that ends mid-message yields the valid prefix and
/// sets truncated(); bad framing throws Error(CorruptRecording) naming the offset.
class RecordingReader {
 public:
  explicit RecordingReader(const std::filesystem::path& path);
  ~RecordingReader();
  RecordingReader(const RecordingReader&) = delete;
  RecordingReader& operator=(const RecordingReader&) = delete;

  const std::string& header() const { return header_; }
  /// Next message, or nullopt at the footer / end of file.
  std::optional<Message> next();
  /// Offset of the message that next() will return.
  std::uint64_t offset() const { return offset_; }
  bool truncated() const { return truncated_; }
  std::optional<std::uint64_t> truncated_at() const { return truncated_at_; }
  bool has_footer() const { return footer_; }

  /// Footer index (topic, offset) if the file has one; reads it without scanning.
  std::optional<std::vector<std::pair<Topic, std::uint64_t>>> read_index();
  Message read_at(std::uint64_t offset);

 private:
  bool read_exact(void* dst, std::size_t n);

  std::FILE* file_ = nullptr;
  std::string path_;
  std::string header_;
  std::uint64_t offset_ = 0;
  std::uint64_t size_ = 0;
  bool truncated_ = false;
  std::optional<std::uint64_t> truncated_at_;
  bool footer_ = false;
  bool done_ = false;
};

struct Recording {
  std::string header;
  std::vector<Message> messages;
  bool truncated = false;
  bool has_footer = false;
};

/// Loads a whole recording into memory (small files and tests).
Recording read_recording(const std::filesystem::path& path);

struct ReplayResult {
  std::uint64_t messages = 0;
  bool truncated = false;
};

/// Re-emits messages in order, pacing by timestamp gaps divided by `speed`
/// (speed 0 means as fast as possible).
ReplayResult replay(const std::filesystem::path& path, double speed, const MessageSink& sink);

}  // namespace drillsim
