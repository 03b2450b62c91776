#pragma once

// Factored active-goal-recognition problem spec and its compilation into a
// flat TabularPOMDP.
//
// Joint states are (s_P, s_T, g_T) with s_T = (observable, hidden) and the
// goal fixed per episode. Actions split into planning / observe / decide
// classes. The target follows a deterministic goal-directed behavior tau;
// executing the correct decision action while the target waits at its goal
// retires the target to the terminal state. Observations are (own state,
// target observable component) when granted (explicit observe action or a
// visible joint state), otherwise (own state, null symbol).

#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "agr/errors.hpp"
#include "agr/pomdp.hpp"

namespace agr {

struct ObserverDomain {
  std::vector<std::string> state_labels;
  std::size_t initial_state = 0;
  std::vector<std::string> planning_actions;
  std::vector<std::string> observe_actions;
  std::vector<std::string> decide_actions;
  // successor state for (s_P, planning ordinal); total and deterministic
  std::function<std::size_t(std::size_t, std::size_t)> transition;
  // c_P(s_P, planning ordinal)
  std::function<double(std::size_t, std::size_t)> planning_cost;
  // c_O(s_P, s_T^o, s_T^h, observe ordinal)
  std::function<double(std::size_t, std::size_t, std::size_t, std::size_t)>
      observe_cost;
  // c_D(s_P, s_T^o, s_T^h, g_T, decide ordinal); decision prices depend on
  // whether the decision is the correct one for the hidden goal
  std::function<double(std::size_t, std::size_t, std::size_t, std::size_t,
                       std::size_t)>
      decide_cost;
};

struct TargetDomain {
  std::vector<std::string> observable_labels;  // S_T^o, includes terminal
  std::vector<std::string> hidden_labels;      // S_T^h ("-" when trivial)
  std::size_t terminal_observable = 0;
  std::size_t initial_observable = 0;
  std::size_t initial_hidden = 0;
  std::vector<std::string> goal_labels;  // G_T
  // tau: one deterministic step of (observable, hidden) toward the goal.
  // decision_outcome is true exactly when the observer executes the correct
  // decision action for the waiting target; tau must then retire the
  // observable component to the terminal state.
  std::function<std::pair<std::size_t, std::size_t>(
      std::size_t, std::size_t, std::size_t, bool)>
      step;
};

struct ObservationRelation {
  // true when the joint state (s_P, s_T) grants an implicit observation
  std::function<bool(std::size_t, std::size_t, std::size_t)> visible;
};

struct AgrSpec {
  ObserverDomain observer;
  TargetDomain target;
  ObservationRelation relation;
  // true when decide ordinal a_D is the correct decision in the given state;
  // drives both the decision reward sign and the target's retirement
  std::function<bool(std::size_t, std::size_t, std::size_t, std::size_t,
                     std::size_t)>
      decision_success;
  std::vector<double> goal_weights;  // empty = uniform over goals
  // planning ordinals that constitute the observer's own task (penalized by
  // the task-dropping lower-bound variant)
  std::vector<std::size_t> own_task_actions;
  // when set, wrong decisions also retire the target
  bool terminate_on_decision = false;
};

// Index layout of a compiled model. States enumerate
// (s_P, s_T^o, s_T^h, g_T) with the goal fastest; observations enumerate
// (o_P, o_T) where o_T ranges over S_T^o plus the trailing null symbol.
struct AgrMeta {
  std::size_t num_observer_states = 0;
  std::size_t num_target_observable = 0;
  std::size_t num_target_hidden = 0;
  std::size_t num_goals = 0;
  std::size_t terminal_observable = 0;
  std::vector<std::size_t> planning_actions;  // global action indices
  std::vector<std::size_t> observe_actions;
  std::vector<std::size_t> decide_actions;
  std::vector<std::size_t> own_task_actions;
  std::vector<std::string> goal_labels;

  std::size_t num_states() const {
    return num_observer_states * num_target_observable * num_target_hidden *
           num_goals;
  }
  std::size_t num_actions() const {
    return planning_actions.size() + observe_actions.size() +
           decide_actions.size();
  }
  std::size_t null_observation_symbol() const { return num_target_observable; }
  std::size_t num_observations() const {
    return num_observer_states * (num_target_observable + 1);
  }

  std::size_t state_index(std::size_t p, std::size_t to, std::size_t th,
                          std::size_t g) const {
    return ((p * num_target_observable + to) * num_target_hidden + th) *
               num_goals +
           g;
  }

  struct StateParts {
    std::size_t observer, target_observable, target_hidden, goal;
  };
  StateParts state_parts(std::size_t s) const {
    StateParts parts{};
    parts.goal = s % num_goals;
    s /= num_goals;
    parts.target_hidden = s % num_target_hidden;
    s /= num_target_hidden;
    parts.target_observable = s % num_target_observable;
    parts.observer = s / num_target_observable;
    return parts;
  }

  std::size_t goal_of(std::size_t s) const { return s % num_goals; }

  std::size_t obs_index(std::size_t p, std::size_t target_obs) const {
    return p * (num_target_observable + 1) + target_obs;
  }
  std::size_t obs_observer_component(std::size_t o) const {
    return o / (num_target_observable + 1);
  }
  std::size_t obs_target_component(std::size_t o) const {
    return o % (num_target_observable + 1);
  }

  bool is_planning(std::size_t a) const { return a < planning_actions.size(); }
  bool is_observe(std::size_t a) const {
    return a >= planning_actions.size() &&
           a < planning_actions.size() + observe_actions.size();
  }
  bool is_decide(std::size_t a) const {
    return a >= planning_actions.size() + observe_actions.size() &&
           a < num_actions();
  }
  std::size_t planning_ordinal(std::size_t a) const { return a; }
  std::size_t observe_ordinal(std::size_t a) const {
    return a - planning_actions.size();
  }
  std::size_t decide_ordinal(std::size_t a) const {
    return a - planning_actions.size() - observe_actions.size();
  }

  static AgrMeta for_spec(const AgrSpec& spec) {
    AgrMeta meta;
    meta.num_observer_states = spec.observer.state_labels.size();
    meta.num_target_observable = spec.target.observable_labels.size();
    meta.num_target_hidden = spec.target.hidden_labels.size();
    meta.num_goals = spec.target.goal_labels.size();
    meta.terminal_observable = spec.target.terminal_observable;
    std::size_t next = 0;
    for (std::size_t i = 0; i < spec.observer.planning_actions.size(); ++i)
      meta.planning_actions.push_back(next++);
    for (std::size_t i = 0; i < spec.observer.observe_actions.size(); ++i)
      meta.observe_actions.push_back(next++);
    for (std::size_t i = 0; i < spec.observer.decide_actions.size(); ++i)
      meta.decide_actions.push_back(next++);
    meta.own_task_actions = spec.own_task_actions;
    meta.goal_labels = spec.target.goal_labels;
    return meta;
  }
};

namespace detail {

// The target retires when the correct decision is executed for the waiting
// target, or (under terminate_on_decision) on any decision action.
inline bool decision_outcome(const AgrSpec& spec, const AgrMeta& meta,
                             const AgrMeta::StateParts& parts, std::size_t a) {
  if (!meta.is_decide(a)) return false;
  if (spec.terminate_on_decision) return true;
  return spec.decision_success(parts.observer, parts.target_observable,
                               parts.target_hidden, parts.goal,
                               meta.decide_ordinal(a));
}

}  // namespace detail

// Pure per-entry forms of the compiled tables; compile() agrees with these
// pointwise.
inline double transition_entry(const AgrSpec& spec, const AgrMeta& meta,
                               std::size_t s, std::size_t a, std::size_t s2) {
  auto parts = meta.state_parts(s);
  auto parts2 = meta.state_parts(s2);
  if (parts2.goal != parts.goal) return 0.0;
  bool outcome = detail::decision_outcome(spec, meta, parts, a);
  auto [to2, th2] = spec.target.step(parts.target_observable,
                                     parts.target_hidden, parts.goal, outcome);
  if (parts2.target_observable != to2 || parts2.target_hidden != th2)
    return 0.0;
  std::size_t p2 = meta.is_planning(a)
                       ? spec.observer.transition(parts.observer,
                                                  meta.planning_ordinal(a))
                       : parts.observer;
  return parts2.observer == p2 ? 1.0 : 0.0;
}

inline double reward_entry(const AgrSpec& spec, const AgrMeta& meta,
                           std::size_t s, std::size_t a) {
  auto parts = meta.state_parts(s);
  if (meta.is_planning(a))
    return -spec.observer.planning_cost(parts.observer,
                                        meta.planning_ordinal(a));
  if (meta.is_observe(a))
    return -spec.observer.observe_cost(parts.observer,
                                       parts.target_observable,
                                       parts.target_hidden,
                                       meta.observe_ordinal(a));
  return -spec.observer.decide_cost(parts.observer, parts.target_observable,
                                    parts.target_hidden, parts.goal,
                                    meta.decide_ordinal(a));
}

inline double observation_entry(const AgrSpec& spec, const AgrMeta& meta,
                                std::size_t o, std::size_t a, std::size_t s2) {
  auto parts2 = meta.state_parts(s2);
  if (meta.obs_observer_component(o) != parts2.observer) return 0.0;
  std::size_t ot = meta.obs_target_component(o);
  bool revealed =
      meta.is_observe(a) ||
      spec.relation.visible(parts2.observer, parts2.target_observable,
                            parts2.target_hidden);
  if (revealed) return ot == parts2.target_observable ? 1.0 : 0.0;
  return ot == meta.null_observation_symbol() ? 1.0 : 0.0;
}

inline void validate_spec(const AgrSpec& spec) {
  const auto& obs = spec.observer;
  const auto& tgt = spec.target;
  if (obs.state_labels.empty())
    throw SpecInconsistent("observer has no states");
  if (tgt.observable_labels.empty())
    throw SpecInconsistent("target has no observable states");
  if (tgt.hidden_labels.empty())
    throw SpecInconsistent("target has no hidden states");
  if (tgt.goal_labels.empty()) throw SpecInconsistent("goal set is empty");
  std::size_t total_actions = obs.planning_actions.size() +
                              obs.observe_actions.size() +
                              obs.decide_actions.size();
  if (total_actions == 0) throw SpecInconsistent("no actions");
  if (obs.initial_state >= obs.state_labels.size())
    throw SpecInconsistent("observer initial state out of range");
  if (tgt.terminal_observable >= tgt.observable_labels.size())
    throw SpecInconsistent("target terminal state out of range");
  if (tgt.initial_observable >= tgt.observable_labels.size() ||
      tgt.initial_hidden >= tgt.hidden_labels.size())
    throw SpecInconsistent("target initial state out of range");

  std::vector<std::string> all_labels;
  for (const auto* list :
       {&obs.planning_actions, &obs.observe_actions, &obs.decide_actions})
    all_labels.insert(all_labels.end(), list->begin(), list->end());
  for (std::size_t i = 0; i < all_labels.size(); ++i)
    for (std::size_t j = i + 1; j < all_labels.size(); ++j)
      if (all_labels[i] == all_labels[j])
        throw SpecInconsistent("duplicate action label '" + all_labels[i] +
                               "'");

  if (!obs.planning_actions.empty() &&
      (!obs.transition || !obs.planning_cost))
    throw SpecInconsistent("planning actions need transition and cost");
  if (!obs.observe_actions.empty() && !obs.observe_cost)
    throw SpecInconsistent("observe actions need a cost function");
  if (!obs.decide_actions.empty() &&
      (!obs.decide_cost || !spec.decision_success))
    throw SpecInconsistent("decide actions need cost and success predicate");
  if (!tgt.step) throw SpecInconsistent("target behavior is undefined");
  if (!spec.relation.visible)
    throw SpecInconsistent("observation relation is undefined");

  for (std::size_t p = 0; p < obs.state_labels.size(); ++p)
    for (std::size_t a = 0; a < obs.planning_actions.size(); ++a)
      if (obs.transition(p, a) >= obs.state_labels.size())
        throw SpecInconsistent("observer transition out of range at (s_P=" +
                               std::to_string(p) + ", a=" + std::to_string(a) +
                               ")");

  std::size_t n_to = tgt.observable_labels.size();
  std::size_t n_th = tgt.hidden_labels.size();
  for (std::size_t g = 0; g < tgt.goal_labels.size(); ++g) {
    for (std::size_t to = 0; to < n_to; ++to)
      for (std::size_t th = 0; th < n_th; ++th)
        for (bool outcome : {false, true}) {
          auto [to2, th2] = tgt.step(to, th, g, outcome);
          if (to2 >= n_to || th2 >= n_th)
            throw SpecInconsistent("target step out of range at (s_T^o=" +
                                   std::to_string(to) + ", g=" +
                                   std::to_string(g) + ")");
          if (to == tgt.terminal_observable && to2 != tgt.terminal_observable)
            throw SpecInconsistent("terminal target state is not absorbing");
          if (outcome && to2 != tgt.terminal_observable)
            throw SpecInconsistent(
                "correct decision does not retire the target (goal " +
                std::to_string(g) + ")");
        }
    // iterating tau must settle within |S_T| steps
    std::size_t to = tgt.initial_observable;
    std::size_t th = tgt.initial_hidden;
    bool settled = false;
    for (std::size_t step = 0; step <= n_to * n_th; ++step) {
      auto [to2, th2] = tgt.step(to, th, g, false);
      if (to2 == tgt.terminal_observable || (to2 == to && th2 == th)) {
        settled = true;
        break;
      }
      to = to2;
      th = th2;
    }
    if (!settled)
      throw SpecInconsistent("target behavior does not settle for goal " +
                             std::to_string(g));
  }

  if (!spec.goal_weights.empty()) {
    if (spec.goal_weights.size() != tgt.goal_labels.size())
      throw SpecInconsistent("goal weight count mismatch");
    double total = 0.0;
    for (double w : spec.goal_weights) {
      if (w < 0.0) throw SpecInconsistent("negative goal weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw SpecInconsistent("goal weights sum to " + std::to_string(total));
  }
  for (std::size_t a : spec.own_task_actions)
    if (a >= obs.planning_actions.size())
      throw SpecInconsistent("own-task action ordinal out of range");
}

struct CompileOptions {
  std::size_t horizon = 30;
  double discount = 0.95;
};

struct CompiledAgr {
  TabularPOMDP pomdp;
  AgrMeta meta;
};

inline CompiledAgr compile(const AgrSpec& spec,
                           const CompileOptions& options = {}) {
  validate_spec(spec);
  AgrMeta meta = AgrMeta::for_spec(spec);
  const std::size_t S = meta.num_states();
  const std::size_t A = meta.num_actions();
  const std::size_t Z = meta.num_observations();

  std::vector<SparseRows> transition, observation;
  std::vector<double> reward(S * A, 0.0);
  transition.reserve(A);
  observation.reserve(A);
  for (std::size_t a = 0; a < A; ++a) {
    SparseRows::Builder tb(S, S);
    SparseRows::Builder ob(S, Z);
    for (std::size_t s = 0; s < S; ++s) {
      auto parts = meta.state_parts(s);
      bool outcome = detail::decision_outcome(spec, meta, parts, a);
      auto [to2, th2] =
          spec.target.step(parts.target_observable, parts.target_hidden,
                           parts.goal, outcome);
      std::size_t p2 =
          meta.is_planning(a)
              ? spec.observer.transition(parts.observer,
                                         meta.planning_ordinal(a))
              : parts.observer;
      tb.add(s, meta.state_index(p2, to2, th2, parts.goal), 1.0);
      reward[s * A + a] = reward_entry(spec, meta, s, a);

      // observation row for s as a *successor* state
      bool revealed =
          meta.is_observe(a) ||
          spec.relation.visible(parts.observer, parts.target_observable,
                                parts.target_hidden);
      std::size_t ot = revealed ? parts.target_observable
                                : meta.null_observation_symbol();
      ob.add(s, meta.obs_index(parts.observer, ot), 1.0);
    }
    transition.push_back(tb.finish());
    observation.push_back(ob.finish());
  }

  std::vector<double> b0(S, 0.0);
  for (std::size_t g = 0; g < meta.num_goals; ++g) {
    double w = spec.goal_weights.empty()
                   ? 1.0 / static_cast<double>(meta.num_goals)
                   : spec.goal_weights[g];
    b0[meta.state_index(spec.observer.initial_state,
                        spec.target.initial_observable,
                        spec.target.initial_hidden, g)] = w;
  }

  PomdpLabels labels;
  labels.states.reserve(S);
  bool trivial_hidden = meta.num_target_hidden == 1;
  for (std::size_t s = 0; s < S; ++s) {
    auto parts = meta.state_parts(s);
    std::string name = "P=" + spec.observer.state_labels[parts.observer] +
                       "|T=" +
                       spec.target.observable_labels[parts.target_observable];
    if (!trivial_hidden)
      name += "|h=" + spec.target.hidden_labels[parts.target_hidden];
    name += "|g=" + spec.target.goal_labels[parts.goal];
    labels.states.push_back(std::move(name));
  }
  for (const auto* list : {&spec.observer.planning_actions,
                           &spec.observer.observe_actions,
                           &spec.observer.decide_actions})
    labels.actions.insert(labels.actions.end(), list->begin(), list->end());
  labels.observations.reserve(Z);
  for (std::size_t o = 0; o < Z; ++o) {
    std::size_t op = meta.obs_observer_component(o);
    std::size_t ot = meta.obs_target_component(o);
    std::string name = "P=" + spec.observer.state_labels[op] + "|T=";
    name += (ot == meta.null_observation_symbol())
                ? "none"
                : spec.target.observable_labels[ot];
    labels.observations.push_back(std::move(name));
  }

  TabularPOMDP pomdp(std::move(transition), std::move(observation),
                     std::move(reward), Belief(std::move(b0)), options.horizon,
                     options.discount, std::move(labels));
  return CompiledAgr{std::move(pomdp), std::move(meta)};
}

}  // namespace agr
