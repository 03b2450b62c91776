#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/corridor.hpp"
#include "agr/errors.hpp"
#include "agr/grid.hpp"
#include "agr/map_domain.hpp"

#include "test_support.hpp"

using agr::AgrSpec;
using agr::Cell;
using agr::CorridorParams;
using agr::Grid;
using agr::MapLayout;
using Catch::Approx;

namespace {

std::string cell_label(int x, int y) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

// label -> ordinal map over a spec's target observable vocabulary
std::map<std::string, std::size_t> label_index(
    const std::vector<std::string>& labels) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
  return index;
}

}  // namespace

TEST_CASE("corridor model sizes follow the closed forms") {
  for (std::size_t n = 1; n <= 10; ++n) {
    CorridorParams params;
    params.n = n;
    auto compiled = agr::compile(agr::build_corridor(params));
    const std::size_t positions = 2 * n + 1;
    CHECK(compiled.pomdp.num_states() == (positions + 1) * positions);
    CHECK(compiled.pomdp.num_actions() == positions + 3);
    CHECK(compiled.pomdp.num_observations() == positions + 2);
  }
}

TEST_CASE("corridor target walks straight to its goal and waits") {
  for (std::size_t n : {1, 2, 3, 4}) {
    AgrSpec spec = agr::build_corridor(CorridorParams{n, {}, {}, false});
    const std::size_t positions = 2 * n + 1;
    const std::size_t terminal = positions;
    for (std::size_t g = 0; g < positions; ++g) {
      std::size_t to = n;  // position 0
      int start = static_cast<int>(n), goal = static_cast<int>(g);
      for (int t = 1; t <= static_cast<int>(positions) + 2; ++t) {
        auto [to2, th2] = spec.target.step(to, 0, g, false);
        int expected = start + (goal > start ? std::min(t, goal - start)
                                             : -std::min(t, start - goal));
        REQUIRE(to2 == static_cast<std::size_t>(expected));
        REQUIRE(th2 == 0);
        to = to2;
      }
      REQUIRE(to == g);  // waiting at the goal door
      CHECK(spec.target.step(to, 0, g, true).first == terminal);
      CHECK(spec.target.step(terminal, 0, g, false).first == terminal);
      CHECK(spec.decision_success(0, g, 0, g, g));
      if (g + 1 < positions) CHECK_FALSE(spec.decision_success(0, g, 0, g, g + 1));
      CHECK(spec.decision_success(0, n, 0, g, g) == (n == g));
    }
  }
}

TEST_CASE("corridor rewards and observations by action class") {
  CorridorParams params;
  params.n = 2;
  params.rewards = {0.0, 10.0, 2.0, 100.0, -100.0};
  auto compiled = agr::compile(agr::build_corridor(params));
  const auto& m = compiled.pomdp;
  const auto& meta = compiled.meta;

  std::size_t s = meta.state_index(0, 2, 0, 4);  // target at 0, goal +2
  CHECK(m.reward(s, 0) == 0.0);    // A_idle
  CHECK(m.reward(s, 1) == 10.0);   // A_work
  CHECK(m.reward(s, 2) == -2.0);   // A_obs
  std::size_t waiting = meta.state_index(0, 4, 0, 4);
  CHECK(m.reward(waiting, 3 + 4) == 100.0);
  CHECK(m.reward(waiting, 3 + 3) == -100.0);
  CHECK(m.reward(s, 3 + 4) == -100.0);  // target not there yet

  // planning actions never reveal the target, the observe action always does
  auto null_obs = meta.obs_index(0, meta.null_observation_symbol());
  for (std::size_t a : {std::size_t{0}, std::size_t{1}}) {
    auto row = m.observation_row(a, s);
    REQUIRE(row.size() == 1);
    CHECK(row[0].index == null_obs);
  }
  auto row = m.observation_row(2, s);
  REQUIRE(row.size() == 1);
  CHECK(row[0].index == meta.obs_index(0, 2));

  // terminal target state absorbs under every action
  std::size_t done = meta.state_index(0, 5, 0, 4);
  for (std::size_t a = 0; a < m.num_actions(); ++a)
    CHECK(m.transition(done, a, done) == 1.0);
}

TEST_CASE("corridor rejects bad parameters") {
  CHECK_THROWS_AS(agr::build_corridor(CorridorParams{0, {}, {}, false}),
                  agr::InvalidParams);
  CorridorParams params;
  params.n = 2;
  params.goal_weights = {0.5, 0.5};  // needs 5 entries
  CHECK_THROWS_AS(agr::build_corridor(params), agr::InvalidParams);
}

TEST_CASE("grid BFS distances match a reference implementation") {
  testsupport::TestRng rng(2024);
  std::uniform_int_distribution<int> dim(2, 7);
  std::uniform_real_distribution<double> wall_p(0.0, 0.35);
  for (int trial = 0; trial < 25; ++trial) {
    int w = dim(rng), h = dim(rng);
    double p = wall_p(rng);
    std::vector<std::string> rows(h, std::string(w, '.'));
    Grid grid(w, h);
    std::bernoulli_distribution wall(p);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (wall(rng)) {
          rows[y][x] = '#';
          grid.set_wall({x, y}, true);
        }
    for (int sy = 0; sy < h; ++sy)
      for (int sx = 0; sx < w; ++sx) {
        auto actual = grid.bfs_distances({sx, sy});
        auto expected = testsupport::bfs_reference(rows, sx, sy);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            REQUIRE(actual[y * w + x] == expected[y * w + x]);
      }
  }
}

TEST_CASE("line of sight is symmetric and respects walls") {
  Grid grid(3, 3);
  grid.set_wall({1, 1}, true);
  CHECK(grid.line_of_sight({0, 0}, {2, 0}));   // along the top row
  CHECK_FALSE(grid.line_of_sight({0, 1}, {2, 1}));  // straight through the wall
  CHECK_FALSE(grid.line_of_sight({0, 0}, {2, 2}));  // diagonal through the wall
  CHECK(grid.line_of_sight({0, 0}, {0, 0}));

  Grid corner(2, 2);
  corner.set_wall({1, 0}, true);
  corner.set_wall({0, 1}, true);
  CHECK(corner.line_of_sight({0, 0}, {1, 1}));  // corner contact does not block

  testsupport::TestRng rng(88);
  std::bernoulli_distribution wall(0.3);
  for (int trial = 0; trial < 10; ++trial) {
    Grid g(5, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x)
        if (wall(rng)) g.set_wall({x, y}, true);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        Cell a = g.cell_at(i), b = g.cell_at(j);
        CHECK(g.line_of_sight(a, b) == g.line_of_sight(b, a));
      }
  }
}

TEST_CASE("visibility rules restrict raycast sight") {
  MapLayout layout = agr::parse_map_layout("O.G.\n....\n....\n");

  layout.visibility.kind = agr::VisibilityKind::kAxisAligned;
  CHECK(agr::visible_cells(layout, {0, 0}, {3, 0}));
  CHECK(agr::visible_cells(layout, {0, 0}, {0, 2}));
  CHECK_FALSE(agr::visible_cells(layout, {0, 0}, {1, 1}));

  layout.visibility.kind = agr::VisibilityKind::kRadiusLimited;
  layout.visibility.radius = 2.0;
  CHECK(agr::visible_cells(layout, {0, 0}, {2, 0}));
  CHECK_FALSE(agr::visible_cells(layout, {0, 0}, {3, 0}));
  CHECK(agr::visible_cells(layout, {0, 0}, {1, 1}));
}

TEST_CASE("map layout parsing reports precise errors") {
  CHECK_THROWS_MATCHES(agr::parse_map_layout("...\n..\n"), agr::InvalidLayout,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 2")));
  CHECK_THROWS_MATCHES(agr::parse_map_layout("O.\n.X\n"), agr::InvalidLayout,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 2 column 2")));
  CHECK_THROWS_AS(agr::parse_map_layout("O.O\nG..\n"), agr::InvalidLayout);
  CHECK_THROWS_AS(agr::parse_map_layout("O..\n...\n"), agr::InvalidLayout);
  CHECK_THROWS_AS(agr::parse_map_layout(""), agr::InvalidLayout);

  SECTION("validation requires stations and reachability") {
    MapLayout one_station = agr::parse_map_layout("OTG\nW..\n");
    CHECK_THROWS_AS(agr::validate_layout(one_station), agr::InvalidLayout);
    MapLayout no_work = agr::parse_map_layout("OTG\nT..\n");
    CHECK_THROWS_AS(agr::validate_layout(no_work), agr::InvalidLayout);
    MapLayout walled = agr::parse_map_layout("OT#T\nW.#G\n");
    CHECK_THROWS_AS(agr::validate_layout(walled), agr::InvalidLayout);
  }
}

TEST_CASE("default map compiles to the published sizes") {
  auto compiled = agr::compile(agr::build_map(agr::default_map_layout()));
  CHECK(compiled.pomdp.num_states() == 11648);
  CHECK(compiled.pomdp.num_actions() == 7);
  CHECK(compiled.pomdp.num_observations() == 195);
  CHECK(compiled.meta.num_goals == 4);
  CHECK(compiled.meta.num_target_hidden == 16);
}

TEST_CASE("map observer movement and rewards") {
  MapLayout layout = agr::default_map_layout();
  AgrSpec spec = agr::build_map(layout);
  auto names = label_index(spec.observer.state_labels);

  std::size_t at_work = names.at(cell_label(0, 2));   // the W cell
  std::size_t start = names.at(cell_label(0, 3));     // the O cell
  CHECK(spec.observer.transition(start, 4) == at_work);  // up
  CHECK(spec.observer.transition(start, 2) == start);    // left leaves the grid
  CHECK(spec.observer.transition(start, 3) == names.at(cell_label(1, 3)));
  CHECK(spec.observer.transition(start, 5) == start);  // down leaves the grid
  CHECK(spec.observer.transition(names.at(cell_label(1, 0)), 5) ==
        names.at(cell_label(1, 0)));                   // (1,1) is a wall
  CHECK(spec.observer.planning_cost(at_work, 1) == Approx(-5.0));
  CHECK(spec.observer.planning_cost(start, 1) == Approx(10.0));  // work miss
  CHECK(spec.observer.planning_cost(start, 0) == 0.0);
  CHECK(spec.observer.planning_cost(start, 3) == Approx(1.0));   // move cost
}

TEST_CASE("map target tours stations nearest-first with the goal last") {
  testsupport::TestRng rng(5150);
  std::vector<std::vector<std::string>> layouts = {
      {"T..T", ".##.", "W.#.", "OTGT"},
      {"T.T", "...", "OWG"},
      {"T..", ".#T", "OWG"},
  };
  std::bernoulli_distribution wall(0.2);
  while (layouts.size() < 10) {
    std::vector<std::string> rows(4, std::string(5, '.'));
    for (auto& row : rows)
      for (auto& c : row)
        if (wall(rng)) c = '#';
    std::vector<std::pair<int, int>> frees;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x)
        if (rows[y][x] == '.') frees.push_back({x, y});
    if (frees.size() < 6) continue;
    std::shuffle(frees.begin(), frees.end(), rng);
    auto put = [&](std::size_t i, char c) {
      rows[frees[i].second][frees[i].first] = c;
    };
    put(0, 'O');
    put(1, 'G');
    put(2, 'W');
    put(3, 'T');
    put(4, 'T');
    put(5, 'T');
    std::string text;
    for (const auto& row : rows) text += row + "\n";
    try {
      agr::validate_layout(agr::parse_map_layout(text));
    } catch (const agr::InvalidLayout&) {
      continue;
    }
    layouts.push_back(rows);
  }

  for (const auto& rows : layouts) {
    std::string text;
    for (const auto& row : rows) text += row + "\n";
    MapLayout layout = agr::parse_map_layout(text);
    AgrSpec spec = agr::build_map(layout);
    auto names = label_index(spec.target.observable_labels);
    const std::size_t K = layout.task_stations.size();

    std::vector<std::size_t> station(K);
    for (std::size_t k = 0; k < K; ++k)
      station[k] = names.at(
          cell_label(layout.task_stations[k].x, layout.task_stations[k].y));

    // reference distances between observables via the test-side BFS
    std::vector<std::string> walls = rows;
    for (auto& row : walls)
      for (auto& c : row)
        if (c != '#') c = '.';
    std::vector<Cell> pos(names.size());
    for (const auto& [label, ord] : names) {
      if (label == "done") continue;
      int x = 0, y = 0;
      REQUIRE(std::sscanf(label.c_str(), "(%d,%d)", &x, &y) == 2);
      pos[ord] = {x, y};
    }
    auto dist_between = [&](std::size_t i, std::size_t j) {
      auto d = testsupport::bfs_reference(walls, pos[i].x, pos[i].y);
      return d[static_cast<std::size_t>(pos[j].y) * walls[0].size() + pos[j].x];
    };

    for (std::size_t g = 0; g < K; ++g) {
      std::size_t to = spec.target.initial_observable;
      std::size_t th = spec.target.initial_hidden;
      std::size_t goal_bit = std::size_t{1} << g;
      for (int guard = 0; guard < 200; ++guard) {
        std::size_t others = th & ~goal_bit;
        if (others == 0 && (th & goal_bit) == 0 && to == station[g]) break;
        auto [to2, th2] = spec.target.step(to, th, g, false);

        // destination: nearest unvisited non-goal station, then the goal
        std::size_t dest = station[g];
        if (others != 0) {
          int best = -1;
          for (std::size_t k = 0; k < K; ++k) {
            if (!(others & (std::size_t{1} << k))) continue;
            int d = dist_between(to, station[k]);
            if (d >= 0 && (best < 0 || d < best)) {
              best = d;
              dest = station[k];
            }
          }
          REQUIRE(best >= 0);
        }
        if (to != dest) {
          // every step walks one BFS step closer to the destination
          REQUIRE(dist_between(to2, dest) == dist_between(to, dest) - 1);
        }
        // the goal station bit survives until every other bit is cleared
        if (others != 0) REQUIRE((th2 & goal_bit) == (th & goal_bit));
        REQUIRE((th2 & ~th) == 0);  // bits only ever clear
        to = to2;
        th = th2;
      }
      REQUIRE(to == station[g]);
      REQUIRE(th == 0);
      auto wait = spec.target.step(to, th, g, false);
      CHECK(wait.first == to);
      CHECK(wait.second == th);
      CHECK(spec.target.step(to, th, g, true).first ==
            spec.target.terminal_observable);
      CHECK(spec.decision_success(station[g], to, th, g, 0));
      if (spec.observer.initial_state != station[g])
        CHECK_FALSE(
            spec.decision_success(spec.observer.initial_state, to, th, g, 0));
    }
  }
}

TEST_CASE("map hidden mask starts with co-located stations visited") {
  MapLayout layout = agr::parse_map_layout("T.T\n...\nOWG");
  layout.task_stations.push_back(layout.target_start);  // station under G
  agr::validate_layout(layout);
  AgrSpec spec = agr::build_map(layout);
  CHECK(spec.target.initial_hidden == 0b011);  // third station pre-visited
}

TEST_CASE("map never grants sight of a finished target") {
  AgrSpec spec = agr::build_map(agr::default_map_layout());
  std::size_t done = spec.target.terminal_observable;
  for (std::size_t p = 0; p < spec.observer.state_labels.size(); ++p)
    CHECK_FALSE(spec.relation.visible(p, done, 0));
  // co-located observer and target always see each other under raycast
  for (std::size_t p = 0; p < spec.observer.state_labels.size(); ++p)
    CHECK(spec.relation.visible(p, p, 0));
}
