#include "drillsim/recording.hpp"

#include "drillsim/error.hpp"

#include <chrono>
#include <thread>

namespace drillsim {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

RecordingWriter::RecordingWriter(const std::filesystem::path& path, const std::string& header_json, bool overwrite)
    : path_(path) {
  if (!overwrite && std::filesystem::exists(path))
    throw Error(ErrorCode::Io, path.string() + " exists; refusing to overwrite");
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw Error(ErrorCode::Io, "cannot write " + path.string());
  std::vector<std::uint8_t> head;
  put_le(head, recording::kFileMagic, 4);
  head.push_back(recording::kVersion);
  head.push_back(0);
  put_le(head, 0, 2);
  put_le(head, header_json.size(), 4);
  head.insert(head.end(), header_json.begin(), header_json.end());
  put(head);
}

RecordingWriter::~RecordingWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RecordingWriter::put(const std::vector<std::uint8_t>& bytes) {
  if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size())
    throw Error(ErrorCode::Io, "write failed on " + path_.string());
  offset_ += bytes.size();
}

void RecordingWriter::write(const Message& m) {
  if (!file_) throw Error(ErrorCode::Io, "recording already closed");
  index_.emplace_back(static_cast<std::uint8_t>(m.topic), offset_);
  scratch_.clear();
  append_frame(scratch_, m);
  put(scratch_);
  ++count_;
}

void RecordingWriter::close() {
  if (!file_) return;
  std::vector<std::uint8_t> foot;
  const std::uint64_t footer_offset = offset_;
  put_le(foot, recording::kIndexMagic, 4);
  put_le(foot, index_.size(), 4);
  for (const auto& [topic, off] : index_) {
    foot.push_back(topic);
    put_le(foot, off, 8);
  }
  put_le(foot, footer_offset, 8);
  put_le(foot, recording::kEndMagic, 4);
  put(foot);
  const bool ok = std::fclose(file_) == 0;
  file_ = nullptr;
  if (!ok) throw Error(ErrorCode::Io, "close failed on " + path_.string());
}

// ---------------------------------------------------------------- reader

RecordingReader::RecordingReader(const std::filesystem::path& path) : path_(path.string()) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) throw Error(ErrorCode::MissingFile, "cannot open " + path_);
  size_ = std::filesystem::file_size(path);
  std::uint8_t head[recording::kFileHeaderSize];
  if (!read_exact(head, sizeof head)) throw Error(ErrorCode::TruncatedFile, path_ + ": file header is incomplete");
  if (get_le(head, 4) != recording::kFileMagic) throw Error(ErrorCode::CorruptRecording, path_ + ": bad magic at offset 0");
  if (head[4] != recording::kVersion)
    throw Error(ErrorCode::CorruptRecording, path_ + ": unsupported version " + std::to_string(head[4]));
  const std::uint64_t hlen = get_le(head + 8, 4);
  if (hlen > size_) throw Error(ErrorCode::TruncatedFile, path_ + ": header is incomplete");
  header_.resize(hlen);
  if (!read_exact(header_.data(), hlen)) throw Error(ErrorCode::TruncatedFile, path_ + ": header is incomplete");
  offset_ = recording::kFileHeaderSize + hlen;
}

RecordingReader::~RecordingReader() {
  if (file_) std::fclose(file_);
}

bool RecordingReader::read_exact(void* dst, std::size_t n) { return std::fread(dst, 1, n, file_) == n; }

std::optional<Message> RecordingReader::next() {
  if (done_) return std::nullopt;
  const std::uint64_t start = offset_;
  if (start == size_) {
    done_ = true;
    return std::nullopt;
  }
  std::uint8_t prefix[wire::kPrefixSize];
  const std::size_t got = std::fread(prefix, 1, sizeof prefix, file_);
  if (got >= 4 && get_le(prefix, 4) == recording::kIndexMagic) {
    footer_ = true;
    done_ = true;
    return std::nullopt;
  }
  if (got >= 4 && get_le(prefix, 4) != wire::kFrameMagic)
    throw Error(ErrorCode::CorruptRecording, path_ + ": bad frame magic at offset " + std::to_string(start));
  if (got < sizeof prefix) {
    truncated_ = true;
    truncated_at_ = start;
    done_ = true;
    return std::nullopt;
  }
  const std::uint64_t hlen = get_le(prefix + 16, 4);
  const std::uint64_t plen = get_le(prefix + 20, 4);
  std::vector<std::uint8_t> buf(wire::kPrefixSize + hlen + plen);
  std::copy(prefix, prefix + sizeof prefix, buf.begin());
  if (hlen > wire::kMaxHeader || plen > wire::kMaxPayload) {
    throw Error(ErrorCode::CorruptRecording, path_ + ": bad frame lengths at offset " + std::to_string(start));
  }
  if (!read_exact(buf.data() + wire::kPrefixSize, hlen + plen)) {
    truncated_ = true;
    truncated_at_ = start;
    done_ = true;
    return std::nullopt;
  }
  DecodeResult r = decode_frame(buf.data(), buf.size());
  if (r.status != DecodeStatus::Ok)
    throw Error(ErrorCode::CorruptRecording, path_ + ": " + r.error + " at offset " + std::to_string(start));
  offset_ = start + r.consumed;
  return std::move(r.message);
}

std::optional<std::vector<std::pair<Topic, std::uint64_t>>> RecordingReader::read_index() {
  if (size_ < 12) return std::nullopt;
  std::uint8_t tail[12];
  const long saved = std::ftell(file_);
  std::fseek(file_, static_cast<long>(size_ - 12), SEEK_SET);
  const bool ok = read_exact(tail, 12);
  std::optional<std::vector<std::pair<Topic, std::uint64_t>>> out;
  if (ok && get_le(tail + 8, 4) == recording::kEndMagic) {
    const std::uint64_t foff = get_le(tail, 8);
    if (foff + 8 <= size_ - 12) {
      std::fseek(file_, static_cast<long>(foff), SEEK_SET);
      std::uint8_t h[8];
      if (read_exact(h, 8) && get_le(h, 4) == recording::kIndexMagic) {
        const std::uint64_t n = get_le(h + 4, 4);
        if (foff + 8 + n * 9 + 12 == size_) {
          std::vector<std::uint8_t> raw(n * 9);
          if (read_exact(raw.data(), raw.size())) {
            out.emplace();
            for (std::uint64_t i = 0; i < n; ++i)
              out->emplace_back(static_cast<Topic>(raw[i * 9]), get_le(&raw[i * 9 + 1], 8));
          }
        }
      }
    }
  }
  std::fseek(file_, saved, SEEK_SET);
  return out;
}

Message RecordingReader::read_at(std::uint64_t offset) {
  const long saved = std::ftell(file_);
  std::fseek(file_, static_cast<long>(offset), SEEK_SET);
  std::uint8_t prefix[wire::kPrefixSize];
  if (!read_exact(prefix, sizeof prefix)) throw Error(ErrorCode::TruncatedFile, path_ + ": no message at offset " + std::to_string(offset));
  const std::uint64_t hlen = get_le(prefix + 16, 4);
  const std::uint64_t plen = get_le(prefix + 20, 4);
  if (get_le(prefix, 4) != wire::kFrameMagic || hlen > wire::kMaxHeader || plen > wire::kMaxPayload)
    throw Error(ErrorCode::CorruptRecording, path_ + ": bad frame at offset " + std::to_string(offset));
  std::vector<std::uint8_t> buf(wire::kPrefixSize + hlen + plen);
  std::copy(prefix, prefix + sizeof prefix, buf.begin());
  if (!read_exact(buf.data() + wire::kPrefixSize, hlen + plen))
    throw Error(ErrorCode::TruncatedFile, path_ + ": message at offset " + std::to_string(offset) + " is incomplete");
  std::fseek(file_, saved, SEEK_SET);
  DecodeResult r = decode_frame(buf.data(), buf.size());
  if (r.status != DecodeStatus::Ok)
    throw Error(ErrorCode::CorruptRecording, path_ + ": " + r.error + " at offset " + std::to_string(offset));
  return std::move(r.message);
}

Recording read_recording(const std::filesystem::path& path) {
  RecordingReader reader(path);
  Recording rec;
  rec.header = reader.header();
  while (auto m = reader.next()) rec.messages.push_back(std::move(*m));
  rec.truncated = reader.truncated();
  rec.has_footer = reader.has_footer();
  return rec;
}

ReplayResult replay(const std::filesystem::path& path, double speed, const MessageSink& sink) {
  if (speed < 0.0) throw Error(ErrorCode::InvalidArgument, "speed must be >= 0");
  RecordingReader reader(path);
  ReplayResult res;
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::uint64_t> t0;
  while (auto m = reader.next()) {
    if (speed > 0.0) {
      if (!t0) t0 = m->timestamp_ns;
      const double rel = static_cast<double>(m->timestamp_ns >= *t0 ? m->timestamp_ns - *t0 : 0) / speed;
      std::this_thread::sleep_until(start + std::chrono::nanoseconds(static_cast<std::int64_t>(rel)));
    }
    sink(*m);
    ++res.messages;
  }
  res.truncated = reader.truncated();
  return res;
}

}  // namespace drillsim
