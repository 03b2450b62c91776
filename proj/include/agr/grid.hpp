#pragma once

// Small occupancy-grid helpers for the map domain: 4-connected BFS over free
// cells and center-to-center ray casting for visibility.

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "agr/errors.hpp"

namespace agr {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

class Grid {
 public:
  Grid() = default;
  Grid(int width, int height)
      : width_(width), height_(height),
        wall_(static_cast<std::size_t>(width * height), 0) {
    if (width < 1 || height < 1) throw InvalidParams("empty grid");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_id(Cell c) const { return c.y * width_ + c.x; }
  Cell cell_at(int id) const { return {id % width_, id / width_}; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  bool wall(Cell c) const { return wall_[cell_id(c)] != 0; }
  bool free(Cell c) const { return in_bounds(c) && !wall(c); }
  void set_wall(Cell c, bool value) { wall_[cell_id(c)] = value ? 1 : 0; }

  std::vector<Cell> free_cells() const {
    std::vector<Cell> cells;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (!wall_[y * width_ + x]) cells.push_back({x, y});
    return cells;
  }

  // BFS distance from `from` to every cell over 4-neighbors; -1 unreachable.
  std::vector<int> bfs_distances(Cell from) const {
    std::vector<int> dist(static_cast<std::size_t>(width_ * height_), -1);
    if (!free(from)) return dist;
    std::deque<Cell> queue{from};
    dist[cell_id(from)] = 0;
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      int d = dist[cell_id(c)];
      for (Cell next : {Cell{c.x - 1, c.y}, Cell{c.x + 1, c.y},
                        Cell{c.x, c.y - 1}, Cell{c.x, c.y + 1}}) {
        if (!free(next) || dist[cell_id(next)] >= 0) continue;
        dist[cell_id(next)] = d + 1;
        queue.push_back(next);
      }
    }
    return dist;
  }

  // True when the open segment between the two cell centers misses every
  // wall cell's interior; touching a wall corner or edge does not block.
  // Symmetric by construction; co-located cells are always visible.
  bool line_of_sight(Cell a, Cell b) const {
    if (a == b) return true;
    const double ax = a.x + 0.5, ay = a.y + 0.5;
    const double dx = (b.x + 0.5) - ax, dy = (b.y + 0.5) - ay;
    constexpr double kEps = 1e-9;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (!wall_[y * width_ + x]) continue;
        double t0 = 0.0, t1 = 1.0;
        bool miss = false;
        for (auto [origin, delta, lo, hi] :
             {std::tuple{ax, dx, double(x), double(x + 1)},
              std::tuple{ay, dy, double(y), double(y + 1)}}) {
          if (delta == 0.0) {
            if (origin <= lo || origin >= hi) miss = true;
            continue;
          }
          double ta = (lo - origin) / delta;
          double tb = (hi - origin) / delta;
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
        }
        if (!miss && t1 - t0 > kEps) return false;
      }
    }
    return true;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> wall_;
};

}  // namespace agr
