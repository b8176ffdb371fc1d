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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xmlops/hash.hpp"

namespace xmlops {

inline constexpr int kSchemaVersion = 1;

struct LogRecoveryReport {
  std::uint64_t valid_records = 0;
  std::uint64_t truncated_bytes = 0;  // torn tail removed on open
};

struct LogAudit {
  std::uint64_t valid_records = 0;
  std::uint64_t partial_records = 0;  // trailing frame cut short
  std::uint64_t corrupt_records = 0;  // checksum or header mismatch
  std::uint64_t trailing_bytes = 0;
  bool clean() const { return partial_records == 0 && corrupt_records == 0; }
};

// Append-only record log. Each frame is
//   magic "XMLR" | u32 length | u32 crc32(payload) | payload
// written with a single write(2). Opening the log truncates a torn tail so
// readers never observe a partial record.
class AppendLog {
 public:
  AppendLog(std::filesystem::path path, bool fsync_each_append);
  ~AppendLog();
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  // Returns the zero-based sequence number of the appended record.
  std::uint64_t append(std::string_view payload);

  const std::vector<std::string>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const LogRecoveryReport& recovery() const { return recovery_; }
  const std::filesystem::path& path() const { return path_; }

  void flush();

  // Scans a log file without modifying it.
  static LogAudit audit(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  bool fsync_;
  int fd_ = -1;
  std::vector<std::string> records_;
  LogRecoveryReport recovery_;
};

// File-backed store:
//   <root>/manifest.json                 hash algorithm + schema version
//   <root>/objects/<first2>/<hash>       content-addressed blobs
//   <root>/meta/<kind>/<id>.json         entity metadata (atomic rename)
//   <root>/logs/<name>.log               append-only framed logs
// Single-writer: callers serialize mutations.
class Store {
 public:
  struct Options {
    bool fsync_appends = false;
  };

  // Creates the layout on an empty or missing directory. Fails on a corrupt
  // manifest, an unknown hash algorithm, or a schema newer than this binary.
  static std::unique_ptr<Store> open(const std::filesystem::path& root,
                                     Options options);
  static std::unique_ptr<Store> open(const std::filesystem::path& root) {
    return open(root, Options{});
  }

  const std::filesystem::path& root() const { return root_; }
  const Json& manifest() const { return manifest_; }

  Id put_blob(std::string_view bytes);
  std::string get_blob(const Id& id) const;
  bool has_blob(const Id& id) const;

  void put_meta(std::string_view kind, const Id& id, const Json& value);
  std::optional<Json> get_meta(std::string_view kind, const Id& id) const;
  bool has_meta(std::string_view kind, const Id& id) const;
  void remove_meta(std::string_view kind, const Id& id);
  // Sorted ids of a kind.
  std::vector<Id> list_meta(std::string_view kind) const;
  // Kind of a stored entity, searching every meta kind.
  std::optional<std::string> kind_of(const Id& id) const;

  AppendLog& log(std::string_view name);

 private:
  Store(std::filesystem::path root, Options options);
  std::map<Id, Json>& load_kind(std::string_view kind) const;
  std::filesystem::path meta_path(std::string_view kind, const Id& id) const;
  std::filesystem::path blob_path(const Id& id) const;

  std::filesystem::path root_;
  Options options_;
  Json manifest_;
  mutable std::map<std::string, std::map<Id, Json>, std::less<>> cache_;
  std::map<std::string, std::unique_ptr<AppendLog>, std::less<>> logs_;
};

// Durable whole-file write: temp file + fsync + rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace xmlops
