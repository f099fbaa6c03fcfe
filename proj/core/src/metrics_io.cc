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

#include <fstream>
#include <system_error>

#include "hdus/error.h"
#include "hdus/experiment.h"

namespace hdus {

namespace {

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

std::filesystem::path ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) fail(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string summary_csv(const RunReport& report) {
  std::string out = hash_line(report.config_hash) + "framework,statistic,value\n";
  for (const auto& s : report.summaries) {
    for (std::size_t r = 0; r < s.per_repeat.size(); ++r) {
      out += s.framework + ",repeat_" + std::to_string(r) + "," +
             format_double(s.per_repeat[r]) + "\n";
    }
    out += s.framework + ",mean," + format_double(s.mean) + "\n";
    out += s.framework + ",std," + format_double(s.std) + "\n";
  }
  return out;
}

void emit_metrics(const RunReport& report, const std::filesystem::path& dir) {
  if (report.repeats.empty()) fail(ErrorCode::kState, "report has no repeats");
  ensure_dir(dir);
  write_file_atomic(dir / "summary.csv", summary_csv(report));
  for (const auto& rep : report.repeats) {
    const std::string name =
        rep.repeat == 0 ? "timeline.csv" : "timeline_r" + std::to_string(rep.repeat) + ".csv";
    write_file_atomic(dir / name, rep.log.to_csv(report.config_hash));
  }
  write_file_atomic(dir / "config.snapshot",
                    hash_line(report.config_hash) + config_snapshot(report.config));
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out = hash_line(config_hash(result.base)) + "param,value,framework,mean,std,error\n";
  const std::string param(sweep_param_name(result.param));
  for (const auto& cell : result.cells) {
    const std::string value = format_double(cell.value);
    if (!cell.report) {
      std::string msg = cell.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      out += param + "," + value + ",,,," + msg + "\n";
      continue;
    }
    for (const auto& s : cell.report->summaries) {
      out += param + "," + value + "," + s.framework + "," + format_double(s.mean) + "," +
             format_double(s.std) + ",\n";
    }
  }
  return out;
}

void emit_sweep(const SweepResult& result, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file_atomic(dir / "sweep_summary.csv", sweep_summary_csv(result));
  const std::string param(sweep_param_name(result.param));
  for (const auto& cell : result.cells) {
    if (cell.report) emit_metrics(*cell.report, dir / (param + "_" + format_double(cell.value)));
  }
}

}  // namespace hdus
