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

#ifndef QX_RUN_STORE_H_
#define QX_RUN_STORE_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qx {

// Small CSV table: RFC 4180 quoting, '\n' line ends.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void AddRow(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  // Column position; throws NotFound.
  size_t Column(std::string_view name) const;
  std::string ToCsv() const;
  static Table FromCsv(std::string_view text);
};

// Layout under `root`:
//   <type>_<explainer>_<UTCts>[-<n>]/  one explainer invocation
//   records/<run_id>/                  run record and explanation
// Directory creation is exclusive, so concurrent runs (threads or
// processes) never share a directory.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Returns the new directory's name (relative to root).
  std::string CreateExplainerDir(std::string_view type, std::string_view explainer);
  // "<type>_<UTCts>[-<n>]", with records/<id>/ created.
  std::string CreateRunId(std::string_view type);

  std::filesystem::path ExplainerDir(std::string_view name) const;
  std::filesystem::path RecordDir(std::string_view run_id) const;

  void WriteRecord(std::string_view run_id, const nlohmann::json& run) const;
  // Throws NotFound for unknown ids.
  nlohmann::json ReadRecord(std::string_view run_id) const;
  bool HasRecord(std::string_view run_id) const;
  std::vector<std::string> ListRecords() const;

 private:
  std::string CreateUnique(const std::filesystem::path& parent, const std::string& prefix);

  std::filesystem::path root_;
};

// Run ids and directory names: letters, digits, '_', '-'; no traversal.
bool IsSafeRunName(std::string_view name);

}  // namespace qx

#endif  // QX_RUN_STORE_H_
