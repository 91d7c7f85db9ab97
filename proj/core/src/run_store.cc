// Copyright 2026 The qxplain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qx/run_store.h"

#include <algorithm>
#include <atomic>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

namespace {

std::atomic<uint64_t> g_counter{0};

std::string QuoteCsv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

size_t Table::Column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::kNotFound, "table has no column '" + std::string(name) + "'");
}

std::string Table::ToCsv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += QuoteCsv(cells[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

Table Table::FromCsv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> cur;
  std::string cell;
  bool quoted = false, any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      cur.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        cur.push_back(std::move(cell));
        lines.push_back(std::move(cur));
      }
      cur.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParseError, "unterminated quote in CSV");
  if (any || !cell.empty()) {
    cur.push_back(std::move(cell));
    lines.push_back(std::move(cur));
  }
  Table t;
  if (lines.empty()) return t;
  t.header = std::move(lines.front());
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size()) {
      throw Error(ErrorCode::kParseError,
                  "CSV row " + std::to_string(i) + " has " +
                      std::to_string(lines[i].size()) + " cells, expected " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

bool IsSafeRunName(std::string_view name) {
  if (name.empty() || name.size() > 200) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "records", ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot create run store at " + root_.string(),
                {{"path", root_.string()}, {"reason", ec.message()}});
  }
}

std::string RunStore::CreateUnique(const std::filesystem::path& parent,
                                   const std::string& prefix) {
  // Plain "<prefix><ts>" first; a "-<n>" suffix only on collision.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string name = prefix + UtcTimestampCompact();
    if (attempt > 0) name += "-" + std::to_string(++g_counter);
    std::error_code ec;
    // create_directory reports false when the directory already exists.
    if (std::filesystem::create_directory(parent / name, ec)) return name;
    if (ec) {
      throw Error(ErrorCode::kIoError, "cannot create " + (parent / name).string(),
                  {{"reason", ec.message()}});
    }
  }
  throw Error(ErrorCode::kIoError, "could not allocate a unique run directory");
}

std::string RunStore::CreateExplainerDir(std::string_view type,
                                         std::string_view explainer) {
  return CreateUnique(root_, std::string(type) + "_" + std::string(explainer) + "_");
}

std::string RunStore::CreateRunId(std::string_view type) {
  return CreateUnique(root_ / "records", std::string(type) + "_");
}

std::filesystem::path RunStore::ExplainerDir(std::string_view name) const {
  if (!IsSafeRunName(name)) {
    throw Error(ErrorCode::kNotFound, "invalid run directory name",
                {{"name", std::string(name)}});
  }
  return root_ / std::string(name);
}

std::filesystem::path RunStore::RecordDir(std::string_view run_id) const {
  if (!IsSafeRunName(run_id)) {
    throw Error(ErrorCode::kNotFound, "invalid run id", {{"run_id", std::string(run_id)}});
  }
  return root_ / "records" / std::string(run_id);
}

void RunStore::WriteRecord(std::string_view run_id, const nlohmann::json& run) const {
  WriteFile(RecordDir(run_id) / "run.json", run.dump(2) + "\n");
}

bool RunStore::HasRecord(std::string_view run_id) const {
  return IsSafeRunName(run_id) &&
         std::filesystem::exists(RecordDir(run_id) / "run.json");
}

nlohmann::json RunStore::ReadRecord(std::string_view run_id) const {
  if (!HasRecord(run_id)) {
    throw Error(ErrorCode::kNotFound, "unknown run id '" + std::string(run_id) + "'",
                {{"run_id", std::string(run_id)}});
  }
  try {
    return nlohmann::json::parse(ReadFile(RecordDir(run_id) / "run.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("corrupt run record: ") + e.what(),
                {{"run_id", std::string(run_id)}});
  }
}

std::vector<std::string> RunStore::ListRecords() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(root_ / "records", ec)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "run.json")) {
      out.push_back(e.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace qx
