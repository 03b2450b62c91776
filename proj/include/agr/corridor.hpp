#pragma once

// Corridor benchmark: positions {-n..n}, a static observer at the center,
// a target that walks from 0 to a hidden goal door and waits there. The
// observer can work (its own task), pay for an explicit target observation,
// or open one of the 2n+1 doors; opening the door the waiting target stands
// behind succeeds. No joint state grants implicit observations.

#include <cstdlib>
#include <string>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/errors.hpp"

namespace agr {

struct CorridorRewards {
  double idle = 0.0;
  double work = 10.0;
  double observe_cost = 2.0;
  double decide_correct = 100.0;
  double decide_wrong = -100.0;
};

struct CorridorParams {
  std::size_t n = 10;  // positions -n..n
  CorridorRewards rewards;
  std::vector<double> goal_weights;  // optional, size 2n+1
  bool terminate_on_decision = false;
};

inline AgrSpec build_corridor(const CorridorParams& params) {
  if (params.n < 1) throw InvalidParams("corridor needs n >= 1");
  const std::size_t positions = 2 * params.n + 1;
  const int n = static_cast<int>(params.n);

  auto position_label = [n](std::size_t i) {
    int pos = static_cast<int>(i) - n;
    return pos > 0 ? "+" + std::to_string(pos) : std::to_string(pos);
  };

  AgrSpec spec;
  spec.observer.state_labels = {"0"};
  spec.observer.initial_state = 0;
  spec.observer.planning_actions = {"A_idle", "A_work"};
  spec.observer.observe_actions = {"A_obs"};
  for (std::size_t i = 0; i < positions; ++i)
    spec.observer.decide_actions.push_back("A_open(" + position_label(i) +
                                           ")");
  spec.observer.transition = [](std::size_t s, std::size_t) { return s; };

  CorridorRewards r = params.rewards;
  spec.observer.planning_cost = [r](std::size_t, std::size_t a) {
    return a == 0 ? -r.idle : -r.work;
  };
  spec.observer.observe_cost = [r](std::size_t, std::size_t, std::size_t,
                                   std::size_t) { return r.observe_cost; };
  spec.decision_success = [](std::size_t, std::size_t to, std::size_t,
                             std::size_t g, std::size_t door) {
    return door == g && to == g;
  };
  spec.observer.decide_cost = [r, success = spec.decision_success](
                                  std::size_t p, std::size_t to,
                                  std::size_t th, std::size_t g,
                                  std::size_t door) {
    return success(p, to, th, g, door) ? -r.decide_correct : -r.decide_wrong;
  };

  for (std::size_t i = 0; i < positions; ++i)
    spec.target.observable_labels.push_back(position_label(i));
  spec.target.observable_labels.push_back("done");
  spec.target.hidden_labels = {"-"};
  spec.target.terminal_observable = positions;
  spec.target.initial_observable = params.n;  // position 0
  spec.target.initial_hidden = 0;
  for (std::size_t i = 0; i < positions; ++i)
    spec.target.goal_labels.push_back(position_label(i));

  const std::size_t terminal = positions;
  spec.target.step = [terminal](std::size_t to, std::size_t th, std::size_t g,
                                bool outcome) {
    if (to == terminal || outcome) return std::make_pair(terminal, th);
    if (to == g) return std::make_pair(to, th);  // waiting at the goal door
    return std::make_pair(to < g ? to + 1 : to - 1, th);
  };

  spec.relation.visible = [](std::size_t, std::size_t, std::size_t) {
    return false;
  };

  if (!params.goal_weights.empty()) {
    if (params.goal_weights.size() != positions)
      throw InvalidParams("corridor goal weights need one entry per position");
    spec.goal_weights = params.goal_weights;
  }
  spec.own_task_actions = {1};  // A_work
  spec.terminate_on_decision = params.terminate_on_decision;
  return spec;
}

}  // namespace agr
