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

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "panda/errors.hpp"

namespace panda {

using Cell = std::int32_t;

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

struct RowCol {
  std::int32_t row = 0;
  std::int32_t col = 0;
  friend bool operator==(const RowCol&, const RowCol&) = default;
};

// Discrete rectangular location universe. Cell i sits at
// (row, col) = (i / width, i % width); centers are cell_size meters apart.
class GridWorld {
 public:
  GridWorld(std::int32_t width, std::int32_t height, double cell_size = 1.0,
            PlanarPoint origin = {})
      : width_(width), height_(height), cell_size_(cell_size), origin_(origin) {
    if (width < 1) throw InvalidArgument("grid width must be >= 1", "width");
    if (height < 1) throw InvalidArgument("grid height must be >= 1", "height");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
      throw InvalidArgument("cell_size must be positive", "cell_size");
    }
  }

  std::int32_t width() const noexcept { return width_; }
  std::int32_t height() const noexcept { return height_; }
  double cell_size() const noexcept { return cell_size_; }
  PlanarPoint origin() const noexcept { return origin_; }
  std::int32_t cell_count() const noexcept { return width_ * height_; }

  bool contains(Cell c) const noexcept { return c >= 0 && c < cell_count(); }

  RowCol row_col(Cell c) const {
    check(c);
    return {c / width_, c % width_};
  }

  Cell cell_at(RowCol rc) const {
    if (rc.row < 0 || rc.row >= height_ || rc.col < 0 || rc.col >= width_) {
      throw InvalidArgument("row/col outside grid", "cell");
    }
    return rc.row * width_ + rc.col;
  }

  PlanarPoint center(Cell c) const {
    const RowCol rc = row_col(c);
    return {origin_.x + rc.col * cell_size_, origin_.y + rc.row * cell_size_};
  }

  // Distance between cell centers in grid units (cell_size = 1).
  double unit_distance(Cell a, Cell b) const {
    const RowCol ra = row_col(a);
    const RowCol rb = row_col(b);
    return std::hypot(double(ra.row - rb.row), double(ra.col - rb.col));
  }

  // Distance between cell centers in meters.
  double euclid(Cell a, Cell b) const { return cell_size_ * unit_distance(a, b); }

  std::vector<Cell> all_cells() const {
    std::vector<Cell> cells(static_cast<std::size_t>(cell_count()));
    for (Cell c = 0; c < cell_count(); ++c) cells[c] = c;
    return cells;
  }

  void check(Cell c, const char* field = "cell") const {
    if (!contains(c)) {
      throw InvalidArgument("cell " + std::to_string(c) + " outside " +
                                std::to_string(width_) + "x" +
                                std::to_string(height_) + " grid",
                            field);
    }
  }

  friend bool operator==(const GridWorld& a, const GridWorld& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.cell_size_ == b.cell_size_ && a.origin_.x == b.origin_.x &&
           a.origin_.y == b.origin_.y;
  }

 private:
  std::int32_t width_;
  std::int32_t height_;
  double cell_size_;
  PlanarPoint origin_;
};

// Total assignment of grid cells to coarse-grained areas.
class Partition {
 public:
  // areas[c] is the area id of cell c; must cover every grid cell.
  Partition(const GridWorld& grid, std::vector<std::int32_t> areas)
      : areas_(std::move(areas)) {
    if (static_cast<std::int64_t>(areas_.size()) != grid.cell_count()) {
      throw InvalidArgument("partition must assign an area to every one of " +
                                std::to_string(grid.cell_count()) + " cells",
                            "areas");
    }
    std::set<std::int32_t> ids(areas_.begin(), areas_.end());
    ids_.assign(ids.begin(), ids.end());
  }

  // Rectangular blocks of block_w x block_h cells, numbered row-major.
  static Partition blocks(const GridWorld& grid, std::int32_t block_w,
                          std::int32_t block_h) {
    if (block_w < 1 || block_h < 1) {
      throw InvalidArgument("block size must be >= 1", "block");
    }
    const std::int32_t blocks_per_row = (grid.width() + block_w - 1) / block_w;
    std::vector<std::int32_t> areas(grid.cell_count());
    for (Cell c = 0; c < grid.cell_count(); ++c) {
      const RowCol rc = grid.row_col(c);
      areas[c] = (rc.row / block_h) * blocks_per_row + rc.col / block_w;
    }
    return Partition(grid, std::move(areas));
  }

  std::int32_t area(Cell c) const {
    if (c < 0 || c >= static_cast<Cell>(areas_.size())) {
      throw InvalidArgument("cell " + std::to_string(c) + " not partitioned",
                            "cell");
    }
    return areas_[c];
  }

  const std::vector<std::int32_t>& areas() const noexcept { return areas_; }
  // Distinct area ids in ascending order; every one is nonempty.
  const std::vector<std::int32_t>& area_ids() const noexcept { return ids_; }
  std::size_t cell_count() const noexcept { return areas_.size(); }

 private:
  std::vector<std::int32_t> areas_;
  std::vector<std::int32_t> ids_;
};

}  // namespace panda
