#pragma once

// Reward and observation surgeries that bracket the value of active goal
// recognition. The lower bounds price selected action classes out of the
// policy with a large penalty; the upper bound grants the observer free,
// unconditional sight of the target's observable component. All transforms
// leave the transition tables untouched.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/errors.hpp"
#include "agr/pomdp.hpp"

namespace agr {

enum class VariantKind { kAgr, kLbA, kLbT, kUb };

inline const char* to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::kAgr: return "agr";
    case VariantKind::kLbA: return "lb-a";
    case VariantKind::kLbT: return "lb-t";
    case VariantKind::kUb: return "ub";
  }
  return "agr";
}

inline VariantKind parse_variant(const std::string& name) {
  if (name == "agr") return VariantKind::kAgr;
  if (name == "lb-a") return VariantKind::kLbA;
  if (name == "lb-t") return VariantKind::kLbT;
  if (name == "ub") return VariantKind::kUb;
  throw InvalidParams("unknown variant '" + name +
                      "' (expected agr, lb-a, lb-t, or ub)");
}

namespace detail {

inline void check_penalty(const TabularPOMDP& m, double penalty) {
  double worst = 0.0;
  for (double r : m.reward_table()) worst = std::max(worst, std::abs(r));
  double bound = worst * (1.0 - std::pow(m.discount(), m.horizon())) /
                 (1.0 - m.discount());
  if (!(penalty > bound))
    throw InvalidParams("penalty " + std::to_string(penalty) +
                        " does not dominate the attainable return bound " +
                        std::to_string(bound));
}

inline TabularPOMDP penalize_actions(const TabularPOMDP& m,
                                     const std::vector<std::size_t>& actions,
                                     double penalty) {
  if (actions.empty()) throw EmptyActionSet("no actions to penalize");
  for (std::size_t a : actions)
    if (a >= m.num_actions())
      throw InvalidParams("penalized action " + std::to_string(a) +
                          " out of range");
  check_penalty(m, penalty);
  std::vector<double> rewards = m.reward_table();
  for (std::size_t s = 0; s < m.num_states(); ++s)
    for (std::size_t a : actions) rewards[s * m.num_actions() + a] -= penalty;
  return m.with_reward(std::move(rewards));
}

}  // namespace detail

// Goal recognition is walled off: every deciding action carries the penalty,
// so an optimal policy never reports a goal and the value reduces to the
// observer's own task.
inline CompiledAgr make_lb_a(const CompiledAgr& c, double penalty = 1e6) {
  std::vector<std::size_t> decide;
  for (std::size_t a = 0; a < c.meta.num_actions(); ++a)
    if (c.meta.is_decide(a)) decide.push_back(a);
  if (decide.empty()) throw EmptyActionSet("model has no deciding actions");
  return {detail::penalize_actions(c.pomdp, decide, penalty), c.meta};
}

// The observer's own task is walled off instead, leaving recognition as the
// only source of reward.
inline CompiledAgr make_lb_t(const CompiledAgr& c, double penalty = 1e6) {
  if (c.meta.own_task_actions.empty())
    throw EmptyActionSet("model declares no own-task actions");
  return {detail::penalize_actions(c.pomdp, c.meta.own_task_actions, penalty),
          c.meta};
}

// Full observability of the target's observable component: every action's
// observation row reveals it, as if each step included a free sensing sweep.
inline CompiledAgr make_ub(const CompiledAgr& c) {
  const AgrMeta& meta = c.meta;
  const TabularPOMDP& m = c.pomdp;
  if (meta.num_states() != m.num_states() ||
      meta.num_actions() != m.num_actions() ||
      meta.num_observations() != m.num_observations())
    throw MissingFactorizationMetadata(
        "factorization metadata does not match the model tables");
  std::vector<SparseRows> obs;
  obs.reserve(m.num_actions());
  for (std::size_t a = 0; a < m.num_actions(); ++a) {
    SparseRows::Builder b(m.num_states(), m.num_observations());
    for (std::size_t s2 = 0; s2 < m.num_states(); ++s2) {
      auto parts = meta.state_parts(s2);
      b.add(s2, meta.obs_index(parts.observer, parts.target_observable), 1.0);
    }
    obs.push_back(std::move(b).finish());
  }
  return {m.with_observation(std::move(obs)), meta};
}

struct VariantParams {
  VariantKind kind = VariantKind::kAgr;
  double penalty = 1e6;
};

inline CompiledAgr apply_variant(const CompiledAgr& c,
                                 const VariantParams& params) {
  switch (params.kind) {
    case VariantKind::kAgr: return c;
    case VariantKind::kLbA: return make_lb_a(c, params.penalty);
    case VariantKind::kLbT: return make_lb_t(c, params.penalty);
    case VariantKind::kUb: return make_ub(c);
  }
  return c;
}

}  // namespace agr
