#pragma once

// Exact finite-horizon solve by expectimax over the reachable belief tree.
// Belief nodes are memoized on (depth, quantized belief) so repeated
// posteriors collapse into a DAG; zero-probability observation branches are
// never expanded. Intended as the oracle for small instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agr/errors.hpp"
#include "agr/pomdp.hpp"

namespace agr {

struct ExactSolveParams {
  std::size_t max_nodes = 2'000'000;
};

struct ExactPolicyNode {
  std::size_t action = 0;
  double value = 0.0;
  // successors keyed by observation, ordered; only reachable observations
  std::vector<std::pair<std::size_t, const ExactPolicyNode*>> children;
};

class ExactSolution {
 public:
  double value = 0.0;
  const ExactPolicyNode* root = nullptr;  // null iff horizon == 0
  std::size_t nodes = 0;

  // True if any node in the policy DAG uses one of the given actions.
  bool uses_action(std::span<const std::size_t> actions) const {
    std::vector<const ExactPolicyNode*> stack;
    std::unordered_map<const ExactPolicyNode*, bool> seen;
    if (root) stack.push_back(root);
    while (!stack.empty()) {
      const ExactPolicyNode* n = stack.back();
      stack.pop_back();
      if (seen[n]) continue;
      seen[n] = true;
      for (std::size_t a : actions)
        if (n->action == a) return true;
      for (const auto& [o, child] : n->children) stack.push_back(child);
    }
    return false;
  }

  std::vector<std::unique_ptr<ExactPolicyNode>> pool;
};

namespace detail {

class ExactSolver {
 public:
  ExactSolver(const TabularPOMDP& m, const ExactSolveParams& params)
      : m_(m), params_(params) {}

  ExactSolution run(std::size_t horizon) {
    ExactSolution sol;
    if (horizon == 0) return sol;
    const ExactPolicyNode* root = solve(m_.initial_belief(), horizon);
    sol.value = root->value;
    sol.root = root;
    sol.nodes = pool_.size();
    sol.pool = std::move(pool_);
    return sol;
  }

 private:
  static std::string belief_key(const Belief& b, std::size_t depth) {
    std::string key;
    key.resize(sizeof(std::uint64_t) * (b.size() + 1));
    std::uint64_t d = depth;
    std::memcpy(key.data(), &d, sizeof(d));
    for (std::size_t i = 0; i < b.size(); ++i) {
      std::uint64_t q =
          static_cast<std::uint64_t>(std::llround(b[i] * 1e12));
      std::memcpy(key.data() + sizeof(std::uint64_t) * (i + 1), &q, sizeof(q));
    }
    return key;
  }

  const ExactPolicyNode* solve(const Belief& b, std::size_t depth) {
    std::string key = belief_key(b, depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    if (pool_.size() >= params_.max_nodes)
      throw TreeTooLarge("exact solve exceeded node cap of " +
                         std::to_string(params_.max_nodes));
    auto owned = std::make_unique<ExactPolicyNode>();
    ExactPolicyNode* node = owned.get();
    pool_.push_back(std::move(owned));

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_action = 0;
    std::vector<std::pair<std::size_t, const ExactPolicyNode*>> best_children;

    std::size_t S = m_.num_states();
    std::vector<double> pushed(S);
    std::vector<double> joint;
    for (std::size_t a = 0; a < m_.num_actions(); ++a) {
      double imm = 0.0;
      for (std::uint32_t s : b.support()) imm += b[s] * m_.reward(s, a);

      std::fill(pushed.begin(), pushed.end(), 0.0);
      for (std::uint32_t s : b.support())
        for (const auto& e : m_.transition_row(s, a))
          pushed[e.index] += b[s] * e.prob;

      // per-observation unnormalized posteriors
      std::vector<std::size_t> touched;
      std::unordered_map<std::size_t, std::vector<double>> posterior;
      std::unordered_map<std::size_t, double> mass;
      for (std::size_t s2 = 0; s2 < S; ++s2) {
        if (pushed[s2] == 0.0) continue;
        for (const auto& e : m_.observation_row(a, s2)) {
          double w = pushed[s2] * e.prob;
          if (w == 0.0) continue;
          auto [it, inserted] = posterior.try_emplace(e.index);
          if (inserted) {
            it->second.assign(S, 0.0);
            touched.push_back(e.index);
          }
          it->second[s2] += w;
          mass[e.index] += w;
        }
      }
      std::sort(touched.begin(), touched.end());

      double value = imm;
      std::vector<std::pair<std::size_t, const ExactPolicyNode*>> children;
      if (depth > 1) {
        for (std::size_t o : touched) {
          double p = mass[o];
          std::vector<double>& post = posterior[o];
          for (double& x : post) x /= p;
          const ExactPolicyNode* child = solve(Belief(std::move(post)), depth - 1);
          value += m_.discount() * p * child->value;
          children.emplace_back(o, child);
        }
      }
      if (value > best) {
        best = value;
        best_action = a;
        best_children = std::move(children);
      }
    }

    node->action = best_action;
    node->value = best;
    node->children = std::move(best_children);
    memo_.emplace(std::move(key), node);
    return node;
  }

  const TabularPOMDP& m_;
  const ExactSolveParams& params_;
  std::vector<std::unique_ptr<ExactPolicyNode>> pool_;
  std::unordered_map<std::string, const ExactPolicyNode*> memo_;
};

}  // namespace detail

inline ExactSolution exact_solve(const TabularPOMDP& m, std::size_t horizon,
                                 const ExactSolveParams& params = {}) {
  detail::ExactSolver solver(m, params);
  return solver.run(horizon);
}

// Exact solve from an arbitrary starting belief (used for dominance checks).
inline double exact_value_at(const TabularPOMDP& m, const Belief& b,
                             std::size_t horizon,
                             const ExactSolveParams& params = {}) {
  TabularPOMDP shifted(m.transition_tables(), m.observation_tables(),
                       m.reward_table(), b, m.horizon(), m.discount(),
                       m.labels());
  return exact_solve(shifted, horizon, params).value;
}

// Acts out an exact policy DAG by following (action, observation) edges.
class ExactTreePolicy final : public PolicyBase {
 public:
  explicit ExactTreePolicy(const ExactSolution& sol)
      : node_(sol.root), root_(sol.root) {}
  explicit ExactTreePolicy(const ExactPolicyNode* node)
      : node_(node), root_(node) {}

  std::unique_ptr<PolicyBase> fresh() const override {
    return std::make_unique<ExactTreePolicy>(root_);
  }

  std::size_t action(const Belief&, std::size_t, std::size_t) override {
    if (node_ == nullptr)
      throw UndefinedPolicyAction("policy tree has no node for this history");
    return node_->action;
  }

  void observe(std::size_t, std::size_t obs) override {
    if (node_ == nullptr) return;
    const ExactPolicyNode* next = nullptr;
    for (const auto& [o, child] : node_->children) {
      if (o == obs) {
        next = child;
        break;
      }
    }
    node_ = next;
  }

 private:
  const ExactPolicyNode* node_ = nullptr;
  const ExactPolicyNode* root_ = nullptr;
};

}  // namespace agr
