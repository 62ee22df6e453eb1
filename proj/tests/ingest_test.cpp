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


#include "panda/ingest.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

namespace panda {
namespace {

const std::string kPltHeader =
    "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n"
    "0,2,255,My Track,0,0,2,8421376\n0\n";

// Reference epoch seconds computed independently (calendar.timegm).
constexpr std::int64_t kGeolifeSeconds = 1236659527;  // 2009-03-10 04:32:07 UTC
constexpr std::int64_t kGowallaSeconds = 1287532527;  // 2010-10-19 23:55:27 UTC

TEST(ParseGeolifeTest, ReferenceRecord) {
  std::istringstream in(kPltHeader +
                        "39.906631,116.385564,0,492,39882.189,2009-03-10,04:32:07\r\n");
  const auto points = parse_geolife(in);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_DOUBLE_EQ(points[0].lat, 39.906631);
  EXPECT_DOUBLE_EQ(points[0].lon, 116.385564);
  EXPECT_EQ(points[0].unix_seconds, kGeolifeSeconds);
}

TEST(ParseGeolifeTest, Errors) {
  std::istringstream arity(kPltHeader +
                           "39.9,116.3,0,492,39882.1,2009-03-10,04:32:07\n"
                           "39.9,116.3,0,492,39882.1\n");
  try {
    parse_geolife(arity);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 8u);
  }
  std::istringstream short_header("a\nb\nc\n");
  EXPECT_THROW(parse_geolife(short_header), ParseError);
  std::istringstream bad_lat(kPltHeader + "99.0,116.3,0,492,39882.1,2009-03-10,04:32:07\n");
  EXPECT_THROW(parse_geolife(bad_lat), ParseError);
  std::istringstream bad_date(kPltHeader + "39.9,116.3,0,492,39882.1,2009-02-30,04:32:07\n");
  EXPECT_THROW(parse_geolife(bad_date), ParseError);
}

TEST(ParseGeolifeTest, HeaderOnly) {
  std::istringstream in(kPltHeader);
  EXPECT_TRUE(parse_geolife(in).empty());
}

TEST(ParseGowallaTest, ReferenceRecord) {
  std::istringstream in("0\t2010-10-19T23:55:27Z\t30.2359091167\t-97.7951395833\t22847\n");
  const auto checkins = parse_gowalla(in);
  ASSERT_EQ(checkins.size(), 1u);
  EXPECT_EQ(checkins[0].user, 0);
  EXPECT_DOUBLE_EQ(checkins[0].point.lat, 30.2359091167);
  EXPECT_DOUBLE_EQ(checkins[0].point.lon, -97.7951395833);
  EXPECT_EQ(checkins[0].point.unix_seconds, kGowallaSeconds);
}

TEST(ParseGowallaTest, Errors) {
  std::istringstream bad_time("0\t2010-10-19 23:55:27\t30.2\t-97.7\t22847\n");
  EXPECT_THROW(parse_gowalla(bad_time), ParseError);
  std::istringstream arity("0\t2010-10-19T23:55:27Z\t30.2\t-97.7\n");
  EXPECT_THROW(parse_gowalla(arity), ParseError);
  std::istringstream second("1\t2010-10-19T23:55:27Z\t30.2\t-97.7\t1\nx\t2010-10-19T23:55:27Z\t1\t1\t1\n");
  try {
    parse_gowalla(second);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseGowallaTest, EmptyFile) {
  std::istringstream in("");
  EXPECT_TRUE(parse_gowalla(in).empty());
}

const BoundingBox kBox{39.0, 116.0, 40.0, 117.0};

TEST(LocateTest, CornersAndBounds) {
  const GridWorld grid(10, 10);
  EXPECT_EQ(locate(grid, kBox, 39.0, 116.0), 0);
  EXPECT_EQ(locate(grid, kBox, 40.0, 117.0), 99);
  EXPECT_EQ(locate(grid, kBox, 39.05, 116.95), 9);
  EXPECT_THROW(locate(grid, kBox, 40.01, 116.5), OutOfBounds);
  EXPECT_THROW(locate(grid, kBox, 39.5, 115.99), OutOfBounds);
}

TEST(DiscretizeTest, CollapsesWithinTick) {
  const GridWorld grid(10, 10);
  const TickClock clock{1000, 60};
  const std::vector<GeoPoint> points{
      {39.51, 116.51, 1000}, {39.52, 116.52, 1030}, {39.91, 116.91, 1065}};
  const auto traj = discretize(points, grid, kBox, clock, 7);
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_EQ(traj.user(), 7);
  EXPECT_EQ(traj.visits()[0], (Visit{0, 55}));
  EXPECT_EQ(traj.visits()[1], (Visit{1, 99}));
}

TEST(DiscretizeTest, SortsByTimeAndRejectsOutside) {
  const GridWorld grid(4, 4);
  const TickClock clock{0, 10};
  const std::vector<GeoPoint> points{{39.9, 116.9, 35}, {39.1, 116.1, 5}};
  const auto traj = discretize(points, grid, kBox, clock);
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_EQ(traj.visits()[0], (Visit{0, 0}));
  EXPECT_EQ(traj.visits()[1], (Visit{3, 15}));
  EXPECT_THROW(discretize({{41.0, 116.5, 0}}, grid, kBox, clock), OutOfBounds);
  EXPECT_THROW(discretize({}, grid, BoundingBox{1, 1, 1, 2}, clock), InvalidArgument);
}

TEST(DiscretizeProperty, CellCenterRoundTrip) {
  const GridWorld grid(7, 5);
  const TickClock clock{0, 100};
  for (const auto& traj : synth_walk(grid, 5, 50, 3)) {
    std::vector<GeoPoint> points;
    for (const Visit& v : traj.visits()) {
      GeoPoint p = cell_center(grid, kBox, v.cell);
      p.unix_seconds = v.tick * clock.tick_seconds + 17;
      points.push_back(p);
    }
    EXPECT_EQ(discretize(points, grid, kBox, clock, traj.user()), traj);
  }
}

TEST(TickClockTest, FloorsBeforeOrigin) {
  const TickClock clock{100, 10};
  EXPECT_EQ(clock.tick_of(100), 0);
  EXPECT_EQ(clock.tick_of(109), 0);
  EXPECT_EQ(clock.tick_of(99), -1);
  EXPECT_EQ(clock.tick_of(90), -1);
  EXPECT_EQ(clock.tick_of(89), -2);
}

TEST(SynthWalkTest, ShapeAndDeterminism) {
  const GridWorld grid(5, 5);
  const auto one = synth_walk(grid, 4, 1, 9);
  ASSERT_EQ(one.size(), 4u);
  for (const auto& t : one) EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(synth_walk(grid, 6, 80, 42), synth_walk(grid, 6, 80, 42));
  EXPECT_NE(synth_walk(grid, 6, 80, 42), synth_walk(grid, 6, 80, 43));
  EXPECT_THROW(synth_walk(grid, 0, 5, 1), InvalidArgument);
  EXPECT_THROW(synth_walk(grid, 1, 0, 1), InvalidArgument);
}

TEST(SynthWalkTest, StayFrequencyAndKingMoves) {
  const GridWorld grid(5, 5);
  const auto walks = synth_walk(grid, 1, 10001, 2024);
  const auto& v = walks[0].visits();
  int stays = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const RowCol a = grid.row_col(v[i - 1].cell);
    const RowCol b = grid.row_col(v[i].cell);
    ASSERT_LE(std::abs(a.row - b.row), 1);
    ASSERT_LE(std::abs(a.col - b.col), 1);
    stays += v[i].cell == v[i - 1].cell;
  }
  EXPECT_NEAR(stays / 10000.0, 0.5, 0.02);
}

TEST(StreamCsvTest, RoundTripAndErrors) {
  const auto records = to_records(synth_walk(GridWorld(3, 3), 3, 5, 1));
  std::stringstream ss;
  write_stream_csv(ss, records);
  EXPECT_EQ(ss.str().substr(0, 17), "user_id,tick,cell");
  EXPECT_EQ(read_stream_csv(ss), records);
  std::istringstream bad("user_id,tick,cell\n1,2\n");
  EXPECT_THROW(read_stream_csv(bad), ParseError);
}

}  // namespace
}  // namespace panda
