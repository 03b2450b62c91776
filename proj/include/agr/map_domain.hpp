#pragma once

// Map benchmark: an observer and a target share a walled room. The target
// walks to its remaining task stations (nearest first, goal station last)
// and waits at the goal station for help; the observer navigates, works at
// work stations, and may execute a help action that succeeds when both stand
// at the goal station after every task station has been visited. Implicit
// target observations are granted on line of sight.
//
// Layouts are ASCII art: '#' wall, '.' free, 'T' task station, 'W' work
// station, 'O' observer start, 'G' target start.

#include <algorithm>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/errors.hpp"
#include "agr/grid.hpp"

namespace agr {

struct MapRewards {
  double idle = 0.0;
  double work = 5.0;
  double work_miss = -10.0;  // working away from a work station
  double move = -1.0;
  double help_correct = 100.0;
  double help_wrong = -100.0;
};

enum class VisibilityKind { kRaycast, kAxisAligned, kRadiusLimited };

struct VisibilityRule {
  VisibilityKind kind = VisibilityKind::kRaycast;
  double radius = 3.0;  // used by kRadiusLimited
};

struct MapLayout {
  Grid grid;
  std::vector<Cell> task_stations;  // order defines goal ids
  std::vector<Cell> work_stations;
  Cell observer_start;
  Cell target_start;
  MapRewards rewards;
  VisibilityRule visibility;
  bool terminate_on_decision = false;
};

inline MapLayout parse_map_layout(std::istream& in) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() && rows.empty()) continue;
    if (line.empty()) break;
    rows.push_back(line);
  }
  if (rows.empty()) throw InvalidLayout("layout is empty");
  std::size_t width = rows[0].size();
  for (std::size_t y = 0; y < rows.size(); ++y)
    if (rows[y].size() != width)
      throw InvalidLayout("row " + std::to_string(y + 1) + " has width " +
                          std::to_string(rows[y].size()) + ", expected " +
                          std::to_string(width));

  MapLayout layout;
  layout.grid = Grid(static_cast<int>(width), static_cast<int>(rows.size()));
  bool seen_observer = false, seen_target = false;
  for (int y = 0; y < layout.grid.height(); ++y) {
    for (int x = 0; x < layout.grid.width(); ++x) {
      char c = rows[y][x];
      Cell cell{x, y};
      switch (c) {
        case '#':
          layout.grid.set_wall(cell, true);
          break;
        case '.':
          break;
        case 'T':
          layout.task_stations.push_back(cell);
          break;
        case 'W':
          layout.work_stations.push_back(cell);
          break;
        case 'O':
          if (seen_observer) throw InvalidLayout("multiple observer starts");
          layout.observer_start = cell;
          seen_observer = true;
          break;
        case 'G':
          if (seen_target) throw InvalidLayout("multiple target starts");
          layout.target_start = cell;
          seen_target = true;
          break;
        default:
          throw InvalidLayout("unknown cell '" + std::string(1, c) +
                              "' at row " + std::to_string(y + 1) +
                              " column " + std::to_string(x + 1));
      }
    }
  }
  if (!seen_observer) throw InvalidLayout("missing observer start 'O'");
  if (!seen_target) throw InvalidLayout("missing target start 'G'");
  return layout;
}

inline MapLayout parse_map_layout(const std::string& text) {
  std::istringstream in(text);
  return parse_map_layout(in);
}

inline void validate_layout(const MapLayout& layout) {
  if (layout.task_stations.size() < 2)
    throw InvalidLayout("need at least two task stations");
  if (layout.work_stations.empty())
    throw InvalidLayout("need at least one work station");
  auto check_free = [&](Cell c, const char* what) {
    if (!layout.grid.free(c))
      throw InvalidLayout(std::string(what) + " at (" + std::to_string(c.x) +
                          "," + std::to_string(c.y) + ") is not a free cell");
  };
  for (Cell c : layout.task_stations) check_free(c, "task station");
  for (Cell c : layout.work_stations) check_free(c, "work station");
  check_free(layout.observer_start, "observer start");
  check_free(layout.target_start, "target start");
  for (std::size_t i = 0; i < layout.task_stations.size(); ++i)
    for (std::size_t j = i + 1; j < layout.task_stations.size(); ++j)
      if (layout.task_stations[i] == layout.task_stations[j])
        throw InvalidLayout("duplicate task station");

  auto from_target = layout.grid.bfs_distances(layout.target_start);
  for (std::size_t i = 0; i < layout.task_stations.size(); ++i)
    if (from_target[layout.grid.cell_id(layout.task_stations[i])] < 0)
      throw InvalidLayout("task station " + std::to_string(i) +
                          " unreachable from target start");
  auto from_observer = layout.grid.bfs_distances(layout.observer_start);
  bool work_reachable = false;
  for (Cell c : layout.work_stations)
    work_reachable |= from_observer[layout.grid.cell_id(c)] >= 0;
  if (!work_reachable)
    throw InvalidLayout("no work station reachable from observer start");
  for (std::size_t i = 0; i < layout.task_stations.size(); ++i)
    if (from_observer[layout.grid.cell_id(layout.task_stations[i])] < 0)
      throw InvalidLayout("task station " + std::to_string(i) +
                          " unreachable from observer start");
}

inline const char* default_map_text() {
  return "T..T\n"
         ".##.\n"
         "W.#.\n"
         "OTGT\n";
}

inline MapLayout default_map_layout() {
  MapLayout layout = parse_map_layout(std::string(default_map_text()));
  validate_layout(layout);
  return layout;
}

inline bool visible_cells(const MapLayout& layout, Cell a, Cell b) {
  switch (layout.visibility.kind) {
    case VisibilityKind::kAxisAligned:
      if (a.x != b.x && a.y != b.y) return false;
      return layout.grid.line_of_sight(a, b);
    case VisibilityKind::kRadiusLimited: {
      double dx = a.x - b.x, dy = a.y - b.y;
      if (dx * dx + dy * dy > layout.visibility.radius * layout.visibility.radius)
        return false;
      return layout.grid.line_of_sight(a, b);
    }
    case VisibilityKind::kRaycast:
    default:
      return layout.grid.line_of_sight(a, b);
  }
}

inline AgrSpec build_map(const MapLayout& layout) {
  validate_layout(layout);
  const Grid& grid = layout.grid;
  std::vector<Cell> cells = grid.free_cells();  // row-major order
  const std::size_t F = cells.size();
  std::vector<int> ordinal_of(static_cast<std::size_t>(grid.width() *
                                                       grid.height()),
                              -1);
  for (std::size_t i = 0; i < F; ++i)
    ordinal_of[grid.cell_id(cells[i])] = static_cast<int>(i);

  const std::size_t K = layout.task_stations.size();
  std::vector<std::size_t> station_ordinal(K);
  for (std::size_t k = 0; k < K; ++k)
    station_ordinal[k] = ordinal_of[grid.cell_id(layout.task_stations[k])];
  std::vector<bool> is_work(F, false);
  for (Cell c : layout.work_stations) is_work[ordinal_of[grid.cell_id(c)]] = true;

  // all-pairs BFS distances between free cells
  std::vector<std::vector<int>> dist(F);
  for (std::size_t i = 0; i < F; ++i) {
    auto d = grid.bfs_distances(cells[i]);
    dist[i].resize(F);
    for (std::size_t j = 0; j < F; ++j)
      dist[i][j] = d[grid.cell_id(cells[j])];
  }

  // one step along a shortest path from cell i toward cell j; ties prefer
  // the lowest cell id (row-major)
  auto step_toward = [grid, cells, ordinal_of,
                      dist](std::size_t i, std::size_t j) -> std::size_t {
    if (i == j || dist[i][j] < 0) return i;
    std::size_t best = i;
    int best_d = dist[i][j];
    Cell c = cells[i];
    for (Cell n : {Cell{c.x, c.y - 1}, Cell{c.x - 1, c.y}, Cell{c.x + 1, c.y},
                   Cell{c.x, c.y + 1}}) {
      if (!grid.free(n)) continue;
      std::size_t ni = ordinal_of[grid.cell_id(n)];
      if (dist[ni][j] >= 0 && dist[ni][j] < best_d) {
        best_d = dist[ni][j];
        best = ni;
      }
    }
    return best;
  };

  auto cell_label = [](Cell c) {
    return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
  };

  AgrSpec spec;
  for (std::size_t i = 0; i < F; ++i)
    spec.observer.state_labels.push_back(cell_label(cells[i]));
  spec.observer.initial_state = ordinal_of[grid.cell_id(layout.observer_start)];
  spec.observer.planning_actions = {"A_idle",  "A_work", "A_left",
                                    "A_right", "A_up",   "A_down"};
  spec.observer.observe_actions = {};
  spec.observer.decide_actions = {"A_help"};

  spec.observer.transition = [grid, cells, ordinal_of](std::size_t s,
                                                       std::size_t a) {
    if (a < 2) return s;  // idle, work
    Cell c = cells[s];
    Cell moved = c;
    switch (a) {
      case 2: moved = {c.x - 1, c.y}; break;
      case 3: moved = {c.x + 1, c.y}; break;
      case 4: moved = {c.x, c.y - 1}; break;
      case 5: moved = {c.x, c.y + 1}; break;
      default: break;
    }
    if (!grid.free(moved)) return s;  // blocked moves stay put
    return static_cast<std::size_t>(ordinal_of[grid.cell_id(moved)]);
  };

  MapRewards r = layout.rewards;
  spec.observer.planning_cost = [r, is_work](std::size_t s, std::size_t a) {
    if (a == 0) return -r.idle;
    if (a == 1) return is_work[s] ? -r.work : -r.work_miss;
    return -r.move;
  };
  spec.observer.observe_cost = [](std::size_t, std::size_t, std::size_t,
                                  std::size_t) { return 0.0; };

  // hidden component: bitmask of *unvisited* task stations
  const std::size_t masks = std::size_t{1} << K;
  spec.decision_success = [station_ordinal](std::size_t p, std::size_t to,
                                            std::size_t th, std::size_t g,
                                            std::size_t) {
    return th == 0 && to == station_ordinal[g] && p == station_ordinal[g];
  };
  spec.observer.decide_cost = [r, success = spec.decision_success](
                                  std::size_t p, std::size_t to,
                                  std::size_t th, std::size_t g,
                                  std::size_t a) {
    return success(p, to, th, g, a) ? -r.help_correct : -r.help_wrong;
  };

  for (std::size_t i = 0; i < F; ++i)
    spec.target.observable_labels.push_back(cell_label(cells[i]));
  spec.target.observable_labels.push_back("done");
  for (std::size_t m = 0; m < masks; ++m) {
    std::string name = "{";
    for (std::size_t k = 0; k < K; ++k)
      if (m & (std::size_t{1} << k)) name += std::to_string(k) + ",";
    if (name.back() == ',') name.pop_back();
    spec.target.hidden_labels.push_back(name + "}");
  }
  spec.target.terminal_observable = F;
  spec.target.initial_observable = ordinal_of[grid.cell_id(layout.target_start)];
  std::size_t initial_mask = masks - 1;
  for (std::size_t k = 0; k < K; ++k)
    if (station_ordinal[k] == spec.target.initial_observable)
      initial_mask &= ~(std::size_t{1} << k);
  spec.target.initial_hidden = initial_mask;
  for (std::size_t k = 0; k < K; ++k)
    spec.target.goal_labels.push_back("st" + std::to_string(k) + cell_label(layout.task_stations[k]));

  const std::size_t terminal = F;
  spec.target.step = [terminal, K, station_ordinal, step_toward, dist](
                         std::size_t to, std::size_t th, std::size_t g,
                         bool outcome) {
    if (to == terminal || outcome) return std::make_pair(terminal, th);
    std::size_t goal_bit = std::size_t{1} << g;
    std::size_t others = th & ~goal_bit;
    std::size_t dest;
    if (others != 0) {
      // nearest remaining non-goal station; ties prefer lowest station index
      std::size_t best_k = K;
      int best_d = -1;
      for (std::size_t k = 0; k < K; ++k) {
        if (!(others & (std::size_t{1} << k))) continue;
        int d = dist[to][station_ordinal[k]];
        if (d < 0) continue;
        if (best_k == K || d < best_d) {
          best_k = k;
          best_d = d;
        }
      }
      if (best_k == K) return std::make_pair(to, th);  // nothing reachable
      dest = station_ordinal[best_k];
    } else {
      dest = station_ordinal[g];
    }
    if (to == dest && others == 0 && (th & goal_bit) == 0)
      return std::make_pair(to, th);  // waiting for help
    std::size_t to2 = step_toward(to, dest);
    std::size_t th2 = th;
    for (std::size_t k = 0; k < K; ++k) {
      if (station_ordinal[k] != to2) continue;
      // the goal station only counts once every other station is done
      if (k == g && (th & ~goal_bit) != 0) continue;
      th2 &= ~(std::size_t{1} << k);
    }
    return std::make_pair(to2, th2);
  };

  // precomputed line-of-sight over free-cell pairs
  std::vector<std::uint8_t> los(F * F, 0);
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t j = 0; j < F; ++j)
      los[i * F + j] = visible_cells(layout, cells[i], cells[j]) ? 1 : 0;
  spec.relation.visible = [los, F, terminal](std::size_t p, std::size_t to,
                                             std::size_t) {
    if (to == terminal) return false;
    return los[p * F + to] != 0;
  };

  spec.own_task_actions = {1};  // A_work
  spec.terminate_on_decision = layout.terminate_on_decision;
  return spec;
}

}  // namespace agr
