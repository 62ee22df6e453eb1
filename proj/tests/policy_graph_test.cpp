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

#include "panda/policy_graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include "oracles.hpp"

namespace panda {
namespace {

TEST(GridWorldTest, RejectsDegenerateGrids) {
  EXPECT_THROW(GridWorld(0, 3), InvalidArgument);
  EXPECT_THROW(GridWorld(3, 0), InvalidArgument);
  EXPECT_THROW(GridWorld(3, 3, 0.0), InvalidArgument);
  EXPECT_THROW(GridWorld(3, 3, -1.0), InvalidArgument);
}

TEST(GridWorldTest, IndexMapsToRowColBijectively) {
  const GridWorld grid(4, 3, 10.0);
  std::set<std::pair<int, int>> seen;
  for (Cell c = 0; c < grid.cell_count(); ++c) {
    const RowCol rc = grid.row_col(c);
    EXPECT_EQ(rc.row, c / 4);
    EXPECT_EQ(rc.col, c % 4);
    EXPECT_EQ(grid.cell_at(rc), c);
    seen.insert({rc.row, rc.col});
  }
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_DOUBLE_EQ(grid.euclid(0, 5), 10.0 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(grid.euclid(0, 3), 30.0);
}

TEST(PolicyGraphTest, EdgesAreUnorderedAndSelfLoopsRejected) {
  EXPECT_THROW(Edge(3, 3), InvalidArgument);
  EXPECT_EQ(Edge(5, 2), Edge(2, 5));
  const PolicyGraph g({1, 2, 3}, {Edge(3, 1), Edge(1, 3), Edge(2, 1)});
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_TRUE(g.has_edge(3, 1));
  EXPECT_TRUE(g.has_edge(1, 3));
  EXPECT_THROW(PolicyGraph({1, 2}, {Edge(1, 7)}), InvalidArgument);
  EXPECT_THROW(PolicyGraph({1, 1}, {}), InvalidArgument);
}

TEST(BuildGridPolicyTest, SingleCellHasNoEdges) {
  const auto g = build_grid_policy(GridWorld(1, 1));
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.edges().empty());
}

TEST(BuildGridPolicyTest, TwoByTwoIsComplete) {
  // King moves on 2x2 reach every other cell: K4.
  const auto g = build_grid_policy(GridWorld(2, 2));
  EXPECT_EQ(g.edges().size(), 6u);
  EXPECT_EQ(g, build_complete_policy({0, 1, 2, 3}));
}

TEST(BuildGridPolicyTest, CenterOfThreeByThreeHasEightNeighbors) {
  const auto g = build_grid_policy(GridWorld(3, 3));
  EXPECT_EQ(g.degree(4), 8u);
  EXPECT_EQ(g.degree(0), 3u);  // corner
  EXPECT_EQ(g.degree(1), 5u);  // border
}

TEST(BuildCompletePolicyTest, Basics) {
  EXPECT_THROW(build_complete_policy({}), InvalidArgument);
  EXPECT_TRUE(build_complete_policy({7}).edges().empty());
  EXPECT_EQ(build_complete_policy({0, 4, 9, 11}).edges().size(), 6u);
  const auto k3 = build_complete_policy({2, 5, 8});
  for (Cell a : k3.nodes()) {
    for (Cell b : k3.nodes()) {
      EXPECT_EQ(graph_distance(k3, a, b), a == b ? 0 : 1);
    }
  }
}

TEST(BuildPartitionPolicyTest, DegenerateAndMixedPartitions) {
  const GridWorld grid(5, 1);
  const auto one = build_partition_policy(grid, Partition(grid, {0, 0, 0, 0, 0}));
  EXPECT_EQ(one, build_complete_policy(grid.all_cells()));
  const auto each = build_partition_policy(grid, Partition(grid, {0, 1, 2, 3, 4}));
  EXPECT_TRUE(each.edges().empty());

  // Areas {0,1,2} and {3,4}: 3 + 1 edges, infinite distance across.
  const auto two = build_partition_policy(grid, Partition(grid, {7, 7, 7, 9, 9}));
  EXPECT_EQ(two.edges().size(), 4u);
  EXPECT_EQ(graph_distance(two, 0, 3), kUnreachable);
  EXPECT_EQ(graph_distance(two, 3, 4), 1);
}

TEST(BuildPartitionPolicyTest, PartialPartitionRejected) {
  const GridWorld grid(3, 2);
  EXPECT_THROW(Partition(grid, {0, 0, 1}), InvalidArgument);
}

TEST(BuildPartitionPolicyTest, BlocksPartition) {
  const GridWorld grid(4, 4);
  const auto p = Partition::blocks(grid, 2, 2);
  EXPECT_EQ(p.area_ids().size(), 4u);
  EXPECT_EQ(p.area(0), p.area(5));
  EXPECT_NE(p.area(0), p.area(2));
}

TEST(BuildContactPolicyTest, EmptyInfectedIsIdentity) {
  const auto base = build_grid_policy(GridWorld(3, 3));
  EXPECT_EQ(build_contact_policy(base, {}), base);
}

TEST(BuildContactPolicyTest, InfectedNodeIsolated) {
  const auto base = build_complete_policy({10, 11, 12});
  const std::vector<Cell> infected{12};
  const auto g = build_contact_policy(base, infected);
  EXPECT_EQ(g.edges(), std::vector<Edge>{Edge(10, 11)});
  EXPECT_EQ(g.degree(12), 0u);
}

TEST(BuildContactPolicyTest, AllInfectedIsEdgeless) {
  const auto base = build_grid_policy(GridWorld(3, 3));
  EXPECT_TRUE(build_contact_policy(base, base.nodes()).edges().empty());
}

TEST(BuildContactPolicyTest, UnknownInfectedCellRejected) {
  const auto base = build_complete_policy({1, 2});
  const std::vector<Cell> infected{3};
  EXPECT_THROW(build_contact_policy(base, infected), InvalidArgument);
}

TEST(BuildContactPolicyTest, RestrictionToHealthyNodesUnchanged) {
  for (Seed seed = 0; seed < 20; ++seed) {
    const auto base = random_policy({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 0.4, seed);
    Rng rng(seed + 100);
    std::vector<Cell> infected;
    for (Cell c : base.nodes()) {
      if (rng.bernoulli(0.3)) infected.push_back(c);
    }
    const auto g = build_contact_policy(base, infected);
    const std::set<Cell> cut(infected.begin(), infected.end());
    for (Cell a : base.nodes()) {
      if (cut.count(a)) {
        EXPECT_EQ(g.degree(a), 0u);
        continue;
      }
      for (Cell b : base.nodes()) {
        if (!cut.count(b)) {
          EXPECT_EQ(g.has_edge(a, b), base.has_edge(a, b));
        }
      }
    }
  }
}

TEST(RandomPolicyTest, ExtremesAndReproducibility) {
  const std::vector<Cell> nodes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_TRUE(random_policy(nodes, 0.0, 42).edges().empty());
  EXPECT_EQ(random_policy(nodes, 1.0, 42), build_complete_policy(nodes));
  EXPECT_EQ(random_policy(nodes, 0.5, 42), random_policy(nodes, 0.5, 42));
  EXPECT_THROW(random_policy(nodes, 1.5, 1), InvalidArgument);
  EXPECT_THROW(random_policy(nodes, -0.1, 1), InvalidArgument);
}

TEST(GraphDistanceTest, Examples) {
  const auto g = build_grid_policy(GridWorld(3, 3));
  EXPECT_EQ(graph_distance(g, 4, 4), 0);
  EXPECT_EQ(graph_distance(g, 0, 8), 2);
  const PolicyGraph isolated({1, 2}, {});
  EXPECT_EQ(graph_distance(isolated, 1, 2), kUnreachable);
  EXPECT_THROW(graph_distance(g, 0, 99), InvalidArgument);
}

TEST(KNeighborsTest, Examples) {
  const auto g = build_grid_policy(GridWorld(3, 3));
  EXPECT_EQ(k_neighbors(g, 4, 0), std::vector<Cell>{4});
  EXPECT_EQ(k_neighbors(g, 4, 1), g.nodes());
  const PolicyGraph isolated({1, 2, 3}, {Edge(2, 3)});
  EXPECT_EQ(infinity_neighbors(isolated, 1), std::vector<Cell>{1});
  EXPECT_EQ(infinity_neighbors(isolated, 2), (std::vector<Cell>{2, 3}));
  EXPECT_THROW(k_neighbors(g, 42, 1), InvalidArgument);
}

// Distances agree with Floyd-Warshall, are symmetric, obey the triangle
// inequality, and neighborhoods nest.
TEST(GraphDistanceProperty, MetricAxiomsOnRandomGraphs) {
  for (Seed seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto n = static_cast<Cell>(2 + rng.below(24));  // <= 25 nodes
    std::vector<Cell> nodes(n);
    for (Cell i = 0; i < n; ++i) nodes[i] = i * 3 + 1;
    const auto g = random_policy(nodes, 0.05 + 0.3 * rng.uniform(), seed);
    const auto ref = oracle::all_pairs_hops(g);
    for (Cell i = 0; i < n; ++i) {
      const auto row = g.distances_from(nodes[i]);
      for (Cell j = 0; j < n; ++j) {
        ASSERT_EQ(row[j] == kUnreachable ? oracle::kInf : row[j], ref[i][j]);
        ASSERT_EQ(graph_distance(g, nodes[i], nodes[j]),
                  graph_distance(g, nodes[j], nodes[i]));
        for (Cell k = 0; k < n; ++k) {
          if (ref[i][j] != oracle::kInf && ref[j][k] != oracle::kInf) {
            ASSERT_LE(ref[i][k], ref[i][j] + ref[j][k]);
          }
        }
      }
      const auto inf = infinity_neighbors(g, nodes[i]);
      std::vector<Cell> prev;
      for (HopCount k = 0; k <= n; ++k) {
        const auto nk = k_neighbors(g, nodes[i], k);
        ASSERT_TRUE(std::includes(nk.begin(), nk.end(), prev.begin(), prev.end()));
        prev = nk;
      }
      EXPECT_EQ(prev, inf);  // N^n is already the whole component
    }
  }
}

TEST(GridPolicyProperty, DistanceIsChebyshevAndBelowEuclid) {
  for (int w = 1; w <= 6; ++w) {
    for (int h = 1; h <= 6; ++h) {
      const GridWorld grid(w, h, 25.0);
      const auto g = build_grid_policy(grid);
      for (Cell a = 0; a < grid.cell_count(); ++a) {
        const auto row = g.distances_from(a);
        for (Cell b = 0; b < grid.cell_count(); ++b) {
          const auto ra = grid.row_col(a);
          const auto rb = grid.row_col(b);
          const int cheb = std::max(std::abs(ra.row - rb.row), std::abs(ra.col - rb.col));
          ASSERT_EQ(row[b], cheb);
          ASSERT_LE(double(row[b]), grid.euclid(a, b) / grid.cell_size() + 1e-12);
        }
      }
    }
  }
}

TEST(PolicyJsonTest, SerializesNormalizedAndSorted) {
  const PolicyGraph g({5, 1, 3}, {Edge(5, 1), Edge(3, 1)});
  EXPECT_EQ(serialize_policy(g), R"({"nodes":[1,3,5],"edges":[[1,3],[1,5]]})");
  EXPECT_EQ(parse_policy(R"({"nodes":[3,1,5],"edges":[[5,1],[1,3]]})"), g);
  EXPECT_THROW(parse_policy("{"), InvalidArgument);
  EXPECT_THROW(parse_policy(R"({"nodes":[1],"edges":[[1,1]]})"), InvalidArgument);
  EXPECT_THROW(parse_policy(R"({"edges":[]})"), InvalidArgument);
}

TEST(PolicyJsonProperty, RoundTripIsBitExact) {
  for (Seed seed = 0; seed < 25; ++seed) {
    std::vector<Cell> nodes;
    for (Cell c = 0; c < 15; ++c) nodes.push_back(c * 7 % 31);
    const auto g = random_policy(nodes, 0.3, seed);
    const auto text = serialize_policy(g);
    EXPECT_EQ(serialize_policy(parse_policy(text)), text);
    EXPECT_EQ(parse_policy(text), g);
  }
}

}  // namespace
}  // namespace panda
