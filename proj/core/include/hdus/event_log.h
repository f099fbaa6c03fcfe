// Copyright 2026 The HDUS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HDUS_EVENT_LOG_H_
#define HDUS_EVENT_LOG_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hdus {

struct EventRecord {
  int round = 0;
  int client_id = -1;  // -1 for network-wide or server metrics
  std::string framework;
  std::string metric;
  double value = 0.0;

  bool operator==(const EventRecord&) const = default;
};

// Append-only metric log; the CSV export is the data behind accuracy
// timelines. Columns: round,client_id,framework,metric,value.
class EventLog {
 public:
  void append(int round, int client_id, std::string_view framework,
              std::string_view metric, double value);
  void append_all(const EventLog& other);

  const std::vector<EventRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  // A non-empty config_hash is written as a leading "# config_hash=" line.
  void write_csv(std::ostream& out, std::string_view config_hash = {}) const;
  std::string to_csv(std::string_view config_hash = {}) const;

  // Inverse of write_csv; '#' lines are skipped.
  static EventLog parse_csv(std::string_view text);

  bool operator==(const EventLog&) const = default;

 private:
  std::vector<EventRecord> records_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace hdus

#endif  // HDUS_EVENT_LOG_H_
