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

#include "hdus/event_log.h"

#include <charconv>
#include <ostream>
#include <sstream>

#include "hdus/error.h"

namespace hdus {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail(ErrorCode::kIo, "cannot format double");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    fail(ErrorCode::kParse, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

void EventLog::append(int round, int client_id, std::string_view framework,
                      std::string_view metric, double value) {
  records_.push_back({round, client_id, std::string(framework),
                      std::string(metric), value});
}

void EventLog::append_all(const EventLog& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

void EventLog::write_csv(std::ostream& out, std::string_view config_hash) const {
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "round,client_id,framework,metric,value\n";
  for (const auto& r : records_) {
    out << r.round << ',' << r.client_id << ',' << r.framework << ',' << r.metric
        << ',' << format_double(r.value) << '\n';
  }
}

std::string EventLog::to_csv(std::string_view config_hash) const {
  std::ostringstream out;
  write_csv(out, config_hash);
  return out.str();
}

EventLog EventLog::parse_csv(std::string_view text) {
  EventLog log;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "round,client_id,framework,metric,value") {
        fail(ErrorCode::kParse, "unexpected event log header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 5) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " cells");
    }
    auto to_int = [&](std::string_view s) {
      int v = 0;
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size()) {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                    ": bad integer '" + std::string(s) + "'");
      }
      return v;
    };
    log.append(to_int(cells[0]), to_int(cells[1]), cells[2], cells[3],
               parse_double(cells[4]));
  }
  return log;
}

}  // namespace hdus
