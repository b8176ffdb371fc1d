// Copyright 2026 The xmlops Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmlops/store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xmlops/error.hpp"

namespace xmlops {
namespace fs = std::filesystem;
namespace {

constexpr std::array<char, 4> kMagic = {'X', 'M', 'L', 'R'};
constexpr std::size_t kHeaderSize = 12;
constexpr std::uint32_t kMaxRecord = 64u << 20;

void put_u32(char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  return v;
}

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

enum class FrameStatus { kOk, kPartial, kCorrupt };

struct ScanResult {
  std::vector<std::string> records;
  std::uint64_t good_bytes = 0;
  FrameStatus tail = FrameStatus::kOk;
};

ScanResult scan_frames(const std::string& data) {
  ScanResult result;
  std::size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < kHeaderSize) {
      result.tail = FrameStatus::kPartial;
      break;
    }
    if (std::memcmp(data.data() + pos, kMagic.data(), kMagic.size()) != 0) {
      result.tail = FrameStatus::kCorrupt;
      break;
    }
    const std::uint32_t length = get_u32(data.data() + pos + 4);
    const std::uint32_t crc = get_u32(data.data() + pos + 8);
    if (length > kMaxRecord) {
      result.tail = FrameStatus::kCorrupt;
      break;
    }
    if (data.size() - pos - kHeaderSize < length) {
      result.tail = FrameStatus::kPartial;
      break;
    }
    std::string_view payload(data.data() + pos + kHeaderSize, length);
    if (crc_of(payload) != crc) {
      result.tail = FrameStatus::kCorrupt;
      break;
    }
    result.records.emplace_back(payload);
    pos += kHeaderSize + length;
    result.good_bytes = pos;
  }
  return result;
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_not_found("file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_internal("cannot write " + tmp.string() + ": " + errno_text());
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw_internal("write failed for " + tmp.string() + ": " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw_internal("rename failed for " + path.string() + ": " + ec.message());
}

// --- AppendLog --------------------------------------------------------------

AppendLog::AppendLog(fs::path path, bool fsync_each_append)
    : path_(std::move(path)), fsync_(fsync_each_append) {
  fs::create_directories(path_.parent_path());
  std::string data;
  if (fs::exists(path_)) data = read_file(path_);
  ScanResult scan = scan_frames(data);
  records_ = std::move(scan.records);
  recovery_.valid_records = records_.size();
  recovery_.truncated_bytes = data.size() - scan.good_bytes;
  if (recovery_.truncated_bytes > 0) {
    if (::truncate(path_.c_str(), static_cast<off_t>(scan.good_bytes)) != 0) {
      throw_internal("cannot truncate torn log tail in " + path_.string());
    }
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw_internal("cannot open log " + path_.string() + ": " + errno_text());
}

AppendLog::~AppendLog() {
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
  }
}

std::uint64_t AppendLog::append(std::string_view payload) {
  if (payload.size() > kMaxRecord) throw_validation("log record too large");
  std::string frame(kHeaderSize + payload.size(), '\0');
  std::memcpy(frame.data(), kMagic.data(), kMagic.size());
  put_u32(frame.data() + 4, static_cast<std::uint32_t>(payload.size()));
  put_u32(frame.data() + 8, crc_of(payload));
  std::memcpy(frame.data() + kHeaderSize, payload.data(), payload.size());
  std::size_t written = 0;
  while (written < frame.size()) {
    const ssize_t n = ::write(fd_, frame.data() + written, frame.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_internal("append failed for " + path_.string() + ": " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
  if (fsync_) ::fdatasync(fd_);
  records_.emplace_back(payload);
  return records_.size() - 1;
}

void AppendLog::flush() {
  if (fd_ >= 0) ::fsync(fd_);
}

LogAudit AppendLog::audit(const fs::path& path) {
  LogAudit audit;
  if (!fs::exists(path)) return audit;
  const std::string data = read_file(path);
  ScanResult scan = scan_frames(data);
  audit.valid_records = scan.records.size();
  audit.trailing_bytes = data.size() - scan.good_bytes;
  if (scan.tail == FrameStatus::kPartial) audit.partial_records = 1;
  if (scan.tail == FrameStatus::kCorrupt) audit.corrupt_records = 1;
  return audit;
}

// --- Store ------------------------------------------------------------------

Store::Store(fs::path root, Options options)
    : root_(std::move(root)), options_(options) {}

std::unique_ptr<Store> Store::open(const fs::path& root, Options options) {
  std::unique_ptr<Store> store(new Store(root, options));
  fs::create_directories(root / "objects");
  fs::create_directories(root / "meta");
  fs::create_directories(root / "logs");
  const fs::path manifest_path = root / "manifest.json";
  if (fs::exists(manifest_path)) {
    Json manifest;
    try {
      manifest = Json::parse(read_file(manifest_path));
    } catch (const Json::exception& e) {
      throw_validation("corrupt store manifest " + manifest_path.string() +
                       ": " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("schema_version") ||
        !manifest.contains("hash_algorithm") ||
        !manifest["schema_version"].is_number_integer()) {
      throw_validation("corrupt store manifest " + manifest_path.string() +
                       ": missing schema_version or hash_algorithm");
    }
    if (manifest["hash_algorithm"] != std::string(kHashAlgorithm)) {
      throw_validation("store " + root.string() + " uses unsupported hash " +
                       manifest["hash_algorithm"].dump());
    }
    const int version = manifest["schema_version"].get<int>();
    if (version > kSchemaVersion) {
      throw_precondition("store schema version " + std::to_string(version) +
                         " is newer than supported version " +
                         std::to_string(kSchemaVersion) + " (" +
                         manifest_path.string() + ")");
    }
    store->manifest_ = std::move(manifest);
  } else {
    store->manifest_ = Json{{"hash_algorithm", std::string(kHashAlgorithm)},
                            {"schema_version", kSchemaVersion},
                            {"layout", "objects/<first2>/<hash>, meta/<kind>/<id>.json, logs/<name>.log"}};
    write_file_atomic(manifest_path, store->manifest_.dump(2));
  }
  // Leftover temp files from an interrupted atomic write are garbage.
  for (const auto& entry : fs::recursive_directory_iterator(root / "meta")) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmp") {
      fs::remove(entry.path());
    }
  }
  return store;
}

fs::path Store::blob_path(const Id& id) const {
  return root_ / "objects" / id.substr(0, 2) / id;
}

fs::path Store::meta_path(std::string_view kind, const Id& id) const {
  return root_ / "meta" / std::string(kind) / (id + ".json");
}

Id Store::put_blob(std::string_view bytes) {
  const Id id = sha256_hex(bytes);
  const fs::path path = blob_path(id);
  if (!fs::exists(path)) write_file_atomic(path, bytes);
  return id;
}

std::string Store::get_blob(const Id& id) const {
  if (!is_hex_digest(id) || !fs::exists(blob_path(id))) throw_not_found("blob", id);
  return read_file(blob_path(id));
}

bool Store::has_blob(const Id& id) const {
  return is_hex_digest(id) && fs::exists(blob_path(id));
}

std::map<Id, Json>& Store::load_kind(std::string_view kind) const {
  auto it = cache_.find(kind);
  if (it != cache_.end()) return it->second;
  auto& entries = cache_[std::string(kind)];
  const fs::path dir = root_ / "meta" / std::string(kind);
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
      try {
        entries[entry.path().stem().string()] = Json::parse(read_file(entry.path()));
      } catch (const Json::exception& e) {
        throw_internal("corrupt metadata file " + entry.path().string() + ": " +
                       e.what());
      }
    }
  }
  return entries;
}

void Store::put_meta(std::string_view kind, const Id& id, const Json& value) {
  write_file_atomic(meta_path(kind, id), value.dump());
  load_kind(kind)[id] = value;
}

std::optional<Json> Store::get_meta(std::string_view kind, const Id& id) const {
  const auto& entries = load_kind(kind);
  auto it = entries.find(id);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

bool Store::has_meta(std::string_view kind, const Id& id) const {
  return load_kind(kind).count(id) > 0;
}

void Store::remove_meta(std::string_view kind, const Id& id) {
  std::error_code ec;
  fs::remove(meta_path(kind, id), ec);
  load_kind(kind).erase(id);
}

std::vector<Id> Store::list_meta(std::string_view kind) const {
  std::vector<Id> ids;
  for (const auto& [id, _] : load_kind(kind)) ids.push_back(id);
  return ids;
}

std::optional<std::string> Store::kind_of(const Id& id) const {
  const fs::path meta = root_ / "meta";
  for (const auto& entry : fs::directory_iterator(meta)) {
    if (!entry.is_directory()) continue;
    const std::string kind = entry.path().filename().string();
    if (load_kind(kind).count(id) > 0) return kind;
  }
  return std::nullopt;
}

AppendLog& Store::log(std::string_view name) {
  auto it = logs_.find(name);
  if (it != logs_.end()) return *it->second;
  auto log = std::make_unique<AppendLog>(root_ / "logs" / (std::string(name) + ".log"),
                                         options_.fsync_appends);
  auto& ref = *log;
  logs_.emplace(std::string(name), std::move(log));
  return ref;
}

}  // namespace xmlops
