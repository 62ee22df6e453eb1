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

// Dataset readers (Geolife PLT, Gowalla check-ins), grid binning and a
// synthetic mobility generator.

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/random.hpp"
#include "panda/trajectory.hpp"

namespace panda {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t unix_seconds = 0;  // UTC
};

struct CheckIn {
  UserId user = 0;
  GeoPoint point;
};

namespace ingest_detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool to_double(std::string_view s, double& out) {
  // from_chars for floating point is available in libstdc++ >= 11.
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

template <typename Int>
bool to_int(std::string_view s, Int& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Fixed-width digits at s[pos, pos+len).
inline bool digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return to_int(s.substr(pos, len), out);
}

// Seconds since the Unix epoch for a validated civil UTC time.
inline bool civil_to_unix(int y, int mo, int d, int h, int mi, int s,
                          std::int64_t& out) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return false;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  out = std::int64_t(days) * 86400 + h * 3600 + mi * 60 + s;
  return true;
}

// "YYYY-MM-DD" and "HH:MM:SS".
inline bool parse_date_time(std::string_view date, std::string_view time,
                            std::int64_t& out) {
  int y, mo, d, h, mi, s;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
  if (time.size() != 8 || time[2] != ':' || time[5] != ':') return false;
  if (!digits(date, 0, 4, y) || !digits(date, 5, 2, mo) || !digits(date, 8, 2, d) ||
      !digits(time, 0, 2, h) || !digits(time, 3, 2, mi) || !digits(time, 6, 2, s)) {
    return false;
  }
  return civil_to_unix(y, mo, d, h, mi, s, out);
}

// "YYYY-MM-DDTHH:MM:SSZ".
inline bool parse_iso8601_utc(std::string_view ts, std::int64_t& out) {
  if (ts.size() != 20 || ts[10] != 'T' || ts[19] != 'Z') return false;
  return parse_date_time(ts.substr(0, 10), ts.substr(11, 8), out);
}

inline void check_lat_lon(double lat, double lon, std::size_t line) {
  if (std::abs(lat) > 90.0) throw ParseError("latitude out of range", line);
  if (std::abs(lon) > 180.0) throw ParseError("longitude out of range", line);
}

inline void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace ingest_detail

// Geolife PLT: six header lines, then
// lat,lon,flag,altitude,days-since-1899,date,time per line.
inline std::vector<GeoPoint> parse_geolife(std::istream& in) {
  using namespace ingest_detail;
  constexpr std::size_t kHeaderLines = 6;
  std::vector<GeoPoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (line_no < kHeaderLines) {
    if (!std::getline(in, line)) {
      throw ParseError("PLT file has " + std::to_string(line_no) +
                           " header lines, expected 6",
                       0);
    }
    ++line_no;
  }
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) {
      throw ParseError("expected 7 comma-separated fields, got " +
                           std::to_string(f.size()),
                       line_no);
    }
    GeoPoint p;
    double scratch;
    if (!to_double(f[0], p.lat) || !to_double(f[1], p.lon)) {
      throw ParseError("bad latitude/longitude", line_no);
    }
    if (!to_double(f[2], scratch) || !to_double(f[3], scratch) ||
        !to_double(f[4], scratch)) {
      throw ParseError("bad numeric field", line_no);
    }
    if (!parse_date_time(f[5], f[6], p.unix_seconds)) {
      throw ParseError("bad date/time '" + std::string(f[5]) + " " +
                           std::string(f[6]) + "'",
                       line_no);
    }
    check_lat_lon(p.lat, p.lon, line_no);
    out.push_back(p);
  }
  return out;
}

// Gowalla check-ins: user<TAB>YYYY-MM-DDTHH:MM:SSZ<TAB>lat<TAB>lon<TAB>location.
inline std::vector<CheckIn> parse_gowalla(std::istream& in) {
  using namespace ingest_detail;
  std::vector<CheckIn> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 5) {
      throw ParseError("expected 5 tab-separated fields, got " +
                           std::to_string(f.size()),
                       line_no);
    }
    CheckIn c;
    std::int64_t location;
    if (!to_int(f[0], c.user)) throw ParseError("bad user id", line_no);
    if (!parse_iso8601_utc(f[1], c.point.unix_seconds)) {
      throw ParseError("bad ISO-8601 timestamp '" + std::string(f[1]) + "'",
                       line_no);
    }
    if (!to_double(f[2], c.point.lat) || !to_double(f[3], c.point.lon)) {
      throw ParseError("bad latitude/longitude", line_no);
    }
    if (!to_int(f[4], location)) throw ParseError("bad location id", line_no);
    check_lat_lon(c.point.lat, c.point.lon, line_no);
    out.push_back(c);
  }
  return out;
}

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  void validate() const {
    if (!(max_lat > min_lat) || !(max_lon > min_lon)) {
      throw InvalidArgument("bounding box is degenerate", "bbox");
    }
  }
  bool contains(double lat, double lon) const {
    return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
  }
};

struct TickClock {
  std::int64_t origin_seconds = 0;  // start of tick 0
  std::int64_t tick_seconds = 3600;

  Tick tick_of(std::int64_t unix_seconds) const {
    const std::int64_t rel = unix_seconds - origin_seconds;
    // floor division for points before the origin
    return rel >= 0 ? rel / tick_seconds : -((-rel + tick_seconds - 1) / tick_seconds);
  }
};

// Equirectangular binning of `bbox` onto the grid; rows grow with
// latitude, columns with longitude. The max edges belong to the last
// row/column.
inline Cell locate(const GridWorld& grid, const BoundingBox& bbox, double lat,
                   double lon) {
  if (!bbox.contains(lat, lon)) {
    throw OutOfBounds("point (" + std::to_string(lat) + ", " +
                      std::to_string(lon) + ") lies outside the bounding box");
  }
  const double fy = (lat - bbox.min_lat) / (bbox.max_lat - bbox.min_lat);
  const double fx = (lon - bbox.min_lon) / (bbox.max_lon - bbox.min_lon);
  const auto row = std::min<std::int32_t>(
      static_cast<std::int32_t>(fy * grid.height()), grid.height() - 1);
  const auto col = std::min<std::int32_t>(
      static_cast<std::int32_t>(fx * grid.width()), grid.width() - 1);
  return grid.cell_at({row, col});
}

// Geographic center of a cell; inverse of locate() on cell centers.
inline GeoPoint cell_center(const GridWorld& grid, const BoundingBox& bbox,
                            Cell c) {
  const RowCol rc = grid.row_col(c);
  GeoPoint p;
  p.lat = bbox.min_lat + (rc.row + 0.5) * (bbox.max_lat - bbox.min_lat) / grid.height();
  p.lon = bbox.min_lon + (rc.col + 0.5) * (bbox.max_lon - bbox.min_lon) / grid.width();
  return p;
}

// Points are ordered by time (stable), binned, and quantized to ticks. Only
// the first point of each tick is kept, which removes consecutive duplicate
// (tick, cell) pairs and keeps one release per tick.
inline Trajectory discretize(std::vector<GeoPoint> points, const GridWorld& grid,
                             const BoundingBox& bbox, const TickClock& clock,
                             UserId user = 0) {
  bbox.validate();
  if (clock.tick_seconds <= 0) {
    throw InvalidArgument("tick length must be positive", "tick_seconds");
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const GeoPoint& a, const GeoPoint& b) {
                     return a.unix_seconds < b.unix_seconds;
                   });
  std::vector<Visit> visits;
  for (const GeoPoint& p : points) {
    const Cell cell = locate(grid, bbox, p.lat, p.lon);
    const Tick tick = clock.tick_of(p.unix_seconds);
    if (!visits.empty() && visits.back().tick == tick) continue;
    visits.push_back({tick, cell});
  }
  return Trajectory(user, std::move(visits));
}

// Lazy random walks: each tick a user stays with probability 0.5 and
// otherwise moves to a uniformly chosen king-move neighbor. Start cells
// are uniform. User u draws from derive_seed(seed, {u}).
inline std::vector<Trajectory> synth_walk(const GridWorld& grid, std::int64_t users,
                                          std::int64_t ticks, Seed seed,
                                          double stay_prob = 0.5) {
  if (users < 1) throw InvalidArgument("users must be >= 1", "users");
  if (ticks < 1) throw InvalidArgument("ticks must be >= 1", "ticks");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(users));
  std::vector<Cell> moves;
  for (UserId u = 0; u < users; ++u) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(u)}));
    Cell cell = static_cast<Cell>(rng.below(grid.cell_count()));
    std::vector<Visit> visits;
    visits.reserve(static_cast<std::size_t>(ticks));
    visits.push_back({0, cell});
    for (Tick t = 1; t < ticks; ++t) {
      if (!rng.bernoulli(stay_prob)) {
        const RowCol rc = grid.row_col(cell);
        moves.clear();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const RowCol n{rc.row + dr, rc.col + dc};
            if ((dr || dc) && n.row >= 0 && n.row < grid.height() && n.col >= 0 &&
                n.col < grid.width()) {
              moves.push_back(grid.cell_at(n));
            }
          }
        }
        if (!moves.empty()) cell = moves[rng.below(moves.size())];
      }
      visits.push_back({t, cell});
    }
    out.emplace_back(u, std::move(visits));
  }
  return out;
}

}  // namespace panda
