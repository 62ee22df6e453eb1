// Copyright 2026 The PANDA Authors
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

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "panda/errors.hpp"
#include "panda/grid.hpp"

namespace panda {

using UserId = std::int64_t;
using Tick = std::int64_t;

struct Visit {
  Tick tick = 0;
  Cell cell = 0;
  friend bool operator==(const Visit&, const Visit&) = default;
};

// One user's timestamped cell sequence; ticks strictly increase.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(UserId user, std::vector<Visit> visits)
      : user_(user), visits_(std::move(visits)) {
    for (std::size_t i = 1; i < visits_.size(); ++i) {
      if (visits_[i].tick <= visits_[i - 1].tick) {
        throw InvalidArgument("trajectory ticks must strictly increase (tick " +
                                  std::to_string(visits_[i].tick) + ")",
                              "tick");
      }
    }
  }

  UserId user() const noexcept { return user_; }
  const std::vector<Visit>& visits() const noexcept { return visits_; }
  std::size_t size() const noexcept { return visits_.size(); }
  bool empty() const noexcept { return visits_.empty(); }

  void append(Visit v) {
    if (!visits_.empty() && v.tick <= visits_.back().tick) {
      throw InvalidArgument("appended tick " + std::to_string(v.tick) +
                                " does not follow " +
                                std::to_string(visits_.back().tick),
                            "tick");
    }
    visits_.push_back(v);
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  UserId user_ = 0;
  std::vector<Visit> visits_;
};

// A single (user, tick, cell) row of a location stream.
struct Record {
  UserId user = 0;
  Tick tick = 0;
  Cell cell = 0;
  friend auto operator<=>(const Record&, const Record&) = default;
};

inline std::vector<Record> to_records(const std::vector<Trajectory>& trajs) {
  std::vector<Record> out;
  for (const auto& t : trajs) {
    for (const auto& v : t.visits()) out.push_back({t.user(), v.tick, v.cell});
  }
  return out;
}

// Groups records by user (ascending) into trajectories.
inline std::vector<Trajectory> to_trajectories(std::vector<Record> records) {
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.user, a.tick) < std::tie(b.user, b.tick);
  });
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < records.size();) {
    std::vector<Visit> visits;
    const UserId user = records[i].user;
    for (; i < records.size() && records[i].user == user; ++i) {
      visits.push_back({records[i].tick, records[i].cell});
    }
    out.emplace_back(user, std::move(visits));
  }
  return out;
}

inline void write_stream_csv(std::ostream& os,
                             const std::vector<Record>& records) {
  os << "user_id,tick,cell\n";
  for (const auto& r : records) {
    os << r.user << ',' << r.tick << ',' << r.cell << '\n';
  }
}

inline std::vector<Record> read_stream_csv(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("user_id", 0) == 0) continue;
    std::istringstream fields(line);
    Record r;
    char c1 = 0, c2 = 0;
    if (!(fields >> r.user >> c1 >> r.tick >> c2 >> r.cell) || c1 != ',' ||
        c2 != ',' || (fields >> std::ws, !fields.eof())) {
      throw ParseError("expected user_id,tick,cell", line_no);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace panda
