#pragma once

// Point-based value iteration over a finite horizon. Alpha vector sets are
// indexed by steps remaining (level 0 holds the zero vector). Each epoch
// expands the belief set, then sweeps levels bottom-up; pools carry the
// previous epoch's vectors so values at the sampled points never regress.
// Pruning keeps exactly the vectors that win the argmax at some point.
//
// Backups touch only the support of each belief, so the per-point cost
// scales with the reachable branching rather than the state count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "agr/errors.hpp"
#include "agr/pomdp.hpp"

namespace agr {

struct SolverParams {
  std::size_t belief_points = 256;
  std::size_t epochs = 6;
  double residual = 1e-6;  // epoch-over-epoch value gain that counts as done
  std::uint64_t seed = 1;
  bool guided_expansion = true;  // epsilon-greedy traces under the policy so far
  std::size_t trace_count = 64;  // traces sampled per expansion round
};

struct AlphaVector {
  std::size_t action = 0;
  std::vector<double> values;
};

namespace detail {

inline double alpha_dot(const AlphaVector& alpha, const Belief& b) {
  double total = 0.0;
  for (std::size_t s : b.support()) total += alpha.values[s] * b[s];
  return total;
}

}  // namespace detail

class AlphaVectorPolicy {
 public:
  struct Metadata {
    std::size_t belief_count = 0;
    std::size_t epochs_run = 0;
    double final_residual = 0.0;
    bool converged = false;
    std::vector<double> epoch_values;  // value at b0 after each epoch
    std::uint64_t seed = 0;
  };

  AlphaVectorPolicy() = default;
  AlphaVectorPolicy(std::vector<std::vector<AlphaVector>> levels, Metadata meta)
      : levels_(std::move(levels)), meta_(std::move(meta)) {
    if (levels_.empty())
      throw InvalidParams("alpha policy needs at least level 0");
    for (const auto& level : levels_) {
      if (level.empty())
        throw InvalidParams("alpha policy has an empty level");
      for (const auto& alpha : level)
        if (alpha.values.size() != levels_[0][0].values.size())
          throw DimensionMismatch("alpha vector length mismatch");
    }
  }

  std::size_t horizon() const { return levels_.size() - 1; }
  std::size_t num_states() const { return levels_[0][0].values.size(); }
  const std::vector<AlphaVector>& level(std::size_t steps_remaining) const {
    if (steps_remaining >= levels_.size())
      throw InvalidParams("level beyond the solved horizon");
    return levels_[steps_remaining];
  }
  const Metadata& metadata() const { return meta_; }

  double value_at(const Belief& b, std::size_t steps_remaining) const {
    check(b, steps_remaining);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& alpha : levels_[steps_remaining])
      best = std::max(best, detail::alpha_dot(alpha, b));
    return best;
  }

  std::size_t action_at(const Belief& b, std::size_t steps_remaining) const {
    check(b, steps_remaining);
    if (steps_remaining == 0)
      throw UndefinedPolicyAction("no steps remaining");
    double best = -std::numeric_limits<double>::infinity();
    std::size_t action = 0;
    bool first = true;
    for (const auto& alpha : levels_[steps_remaining]) {
      double v = detail::alpha_dot(alpha, b);
      if (first || v > best) {
        best = v;
        action = alpha.action;
        first = false;
      } else if (v == best && alpha.action < action) {
        action = alpha.action;
      }
    }
    return action;
  }

 private:
  void check(const Belief& b, std::size_t steps_remaining) const {
    if (levels_.empty()) throw UndefinedPolicyAction("empty policy");
    if (steps_remaining >= levels_.size())
      throw InvalidParams("steps remaining beyond the solved horizon");
    if (b.size() != num_states())
      throw DimensionMismatch("belief length " + std::to_string(b.size()) +
                              " does not match policy state count " +
                              std::to_string(num_states()));
  }

  std::vector<std::vector<AlphaVector>> levels_;
  Metadata meta_;
};

inline std::size_t policy_action(const AlphaVectorPolicy& policy,
                                 const Belief& b) {
  return policy.action_at(b, policy.horizon());
}

struct BeliefSet {
  std::vector<Belief> beliefs;  // first entry is the initial belief
  std::size_t traces = 0;       // trajectories sampled to build the pool
};

namespace detail {

// sparse belief as sorted (state, mass) pairs; the expansion pool keeps
// thousands of candidates, far too many to hold densely
using SparseBelief = std::vector<std::pair<std::uint32_t, double>>;

inline SparseBelief to_sparse(const Belief& b) {
  SparseBelief out;
  out.reserve(b.support().size());
  for (std::size_t s : b.support())
    out.emplace_back(static_cast<std::uint32_t>(s), b[s]);
  return out;
}

inline Belief to_dense(const SparseBelief& sb, std::size_t n) {
  std::vector<double> v(n, 0.0);
  for (auto [s, p] : sb) v[s] = p;
  return Belief(std::move(v));
}

inline double sparse_l1(const SparseBelief& a, const SparseBelief& b) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first)
      total += a[i++].second;
    else if (a[i].first > b[j].first)
      total += b[j++].second;
    else {
      total += std::abs(a[i].second - b[j].second);
      ++i, ++j;
    }
  }
  for (; i < a.size(); ++i) total += a[i].second;
  for (; j < b.size(); ++j) total += b[j].second;
  return total;
}

// one unrolled trajectory of the exact belief filter; pick_action maps the
// current belief and step to an action
template <typename PickAction>
inline void collect_trace(const TabularPOMDP& m, Rng& rng,
                          PickAction&& pick_action,
                          std::vector<SparseBelief>& pool) {
  Belief b = m.initial_belief();
  std::size_t s = sample_belief(b, uniform01(rng));
  for (std::size_t step = 0; step < m.horizon(); ++step) {
    std::size_t a = pick_action(b, step);
    std::size_t s2 = sample_entries(m.transition_row(s, a), uniform01(rng));
    std::size_t o = sample_entries(m.observation_row(a, s2), uniform01(rng));
    b = belief_update(m, b, a, o);
    s = s2;
    pool.push_back(to_sparse(b));
  }
}

// grow `points` toward target_size: greedy farthest-point selection by L1
// distance against the pool of candidates
inline void select_points(std::vector<SparseBelief>& points,
                          std::vector<SparseBelief>& pool,
                          std::size_t target_size) {
  if (points.size() >= target_size || pool.empty()) return;
  std::vector<double> min_dist(pool.size(),
                               std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < pool.size(); ++c)
    for (const auto& p : points)
      min_dist[c] = std::min(min_dist[c], sparse_l1(pool[c], p));
  while (points.size() < target_size) {
    std::size_t best = pool.size();
    double best_d = 1e-9;  // exact duplicates are never added
    for (std::size_t c = 0; c < pool.size(); ++c)
      if (min_dist[c] > best_d) {
        best_d = min_dist[c];
        best = c;
      }
    if (best == pool.size()) break;
    points.push_back(pool[best]);
    const SparseBelief& added = points.back();
    min_dist[best] = 0.0;
    for (std::size_t c = 0; c < pool.size(); ++c)
      if (min_dist[c] > 1e-9)
        min_dist[c] = std::min(min_dist[c], sparse_l1(pool[c], added));
  }
}

}  // namespace detail

// Pure random-walk expansion: uniform actions, sampled observations, exact
// filter updates; farthest-point selection over the pooled trace beliefs.
inline BeliefSet expand_beliefs(const TabularPOMDP& m, std::size_t count,
                                std::uint64_t seed,
                                std::size_t trace_count = 64) {
  if (count == 0) throw InvalidParams("belief set size must be positive");
  std::vector<detail::SparseBelief> points{detail::to_sparse(m.initial_belief())};
  std::vector<detail::SparseBelief> pool;
  Rng rng = detail::make_stream(seed, 0xE0000000ULL);
  std::uniform_int_distribution<std::size_t> pick(0, m.num_actions() - 1);
  for (std::size_t i = 0; i < trace_count; ++i)
    detail::collect_trace(
        m, rng, [&](const Belief&, std::size_t) { return pick(rng); }, pool);
  detail::select_points(points, pool, count);
  BeliefSet out;
  out.traces = trace_count;
  out.beliefs.reserve(points.size());
  for (const auto& sb : points)
    out.beliefs.push_back(detail::to_dense(sb, m.num_states()));
  return out;
}

namespace detail {

// single point-based backup; winners for observations unreachable from this
// belief default to the best lower vector at the unconditioned pushforward,
// which keeps the assembled vector meaningful away from the sampled point
inline AlphaVector backup_point(const TabularPOMDP& m,
                                const std::vector<AlphaVector>& lower,
                                const Belief& b) {
  struct Group {
    std::size_t obs;
    std::vector<std::pair<std::size_t, double>> post;  // unnormalized
  };
  const double gamma = m.discount();
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t best_a = 0;
  std::vector<std::pair<std::size_t, std::size_t>> best_winners;
  std::vector<Group> groups;
  for (std::size_t a = 0; a < m.num_actions(); ++a) {
    groups.clear();
    double imm = 0.0;
    for (std::size_t s : b.support()) {
      double mass = b[s];
      imm += mass * m.reward(s, a);
      for (const auto& te : m.transition_row(s, a)) {
        for (const auto& oe : m.observation_row(a, te.index)) {
          Group* g = nullptr;
          for (auto& existing : groups)
            if (existing.obs == oe.index) {
              g = &existing;
              break;
            }
          if (!g) {
            groups.push_back(Group{oe.index, {}});
            g = &groups.back();
          }
          g->post.emplace_back(te.index, mass * te.prob * oe.prob);
        }
      }
    }
    double future = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> winners;
    winners.reserve(groups.size());
    for (const auto& g : groups) {
      double best_dot = -std::numeric_limits<double>::infinity();
      std::size_t w = 0;
      for (std::size_t i = 0; i < lower.size(); ++i) {
        double d = 0.0;
        for (auto [s2, mass] : g.post) d += mass * lower[i].values[s2];
        if (d > best_dot) {
          best_dot = d;
          w = i;
        }
      }
      future += best_dot;
      winners.emplace_back(g.obs, w);
    }
    double val = imm + gamma * future;
    if (val > best_val) {
      best_val = val;
      best_a = a;
      best_winners = std::move(winners);
    }
  }

  std::vector<std::pair<std::size_t, double>> push;
  for (std::size_t s : b.support())
    for (const auto& te : m.transition_row(s, best_a))
      push.emplace_back(te.index, b[s] * te.prob);
  double best_push = -std::numeric_limits<double>::infinity();
  std::size_t default_w = 0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    double d = 0.0;
    for (auto [s2, mass] : push) d += mass * lower[i].values[s2];
    if (d > best_push) {
      best_push = d;
      default_w = i;
    }
  }

  std::vector<std::size_t> winner_of(m.num_observations(), default_w);
  for (auto [o, w] : best_winners) winner_of[o] = w;
  AlphaVector alpha;
  alpha.action = best_a;
  alpha.values.resize(m.num_states());
  for (std::size_t s = 0; s < m.num_states(); ++s) {
    double future = 0.0;
    for (const auto& te : m.transition_row(s, best_a))
      for (const auto& oe : m.observation_row(best_a, te.index))
        future +=
            te.prob * oe.prob * lower[winner_of[oe.index]].values[te.index];
    alpha.values[s] = m.reward(s, best_a) + gamma * future;
  }
  return alpha;
}

// keep exactly the vectors that win the argmax at some sampled point; ties
// go to the lowest pool index, so exact duplicates collapse to one copy
inline std::vector<AlphaVector> prune_level(std::vector<AlphaVector> pool,
                                            const std::vector<Belief>& points) {
  std::vector<char> keep(pool.size(), 0);
  for (const Belief& b : points) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t wi = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double d = alpha_dot(pool[i], b);
      if (d > best) {
        best = d;
        wi = i;
      }
    }
    keep[wi] = 1;
  }
  std::vector<AlphaVector> kept;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (keep[i]) kept.push_back(std::move(pool[i]));
  return kept;
}

}  // namespace detail

inline AlphaVectorPolicy pbvi_solve(const TabularPOMDP& m,
                                    const SolverParams& params = {}) {
  if (params.belief_points == 0 || params.epochs == 0)
    throw InvalidParams("solver needs at least one belief point and epoch");
  const std::size_t S = m.num_states();
  const std::size_t H = m.horizon();

  std::vector<detail::SparseBelief> sparse_points{
      detail::to_sparse(m.initial_belief())};
  std::vector<std::vector<AlphaVector>> levels(H + 1);
  levels[0].push_back(AlphaVector{0, std::vector<double>(S, 0.0)});

  AlphaVectorPolicy::Metadata meta;
  meta.seed = params.seed;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    // candidate pool: random traces, one-step successors of current points,
    // and (after the first sweep) epsilon-greedy traces under the policy
    std::vector<detail::SparseBelief> pool;
    Rng rng = detail::make_stream(params.seed, 0xE0000000ULL + epoch);
    std::uniform_int_distribution<std::size_t> pick(0, m.num_actions() - 1);
    for (std::size_t i = 0; i < params.trace_count; ++i)
      detail::collect_trace(
          m, rng, [&](const Belief&, std::size_t) { return pick(rng); }, pool);
    for (std::size_t i = 0; i < std::min<std::size_t>(sparse_points.size(), 32);
         ++i) {
      Belief b = detail::to_dense(sparse_points[i], S);
      for (std::size_t a = 0; a < m.num_actions(); ++a)
        for (auto [o, p] : observation_probabilities(m, b, a))
          pool.push_back(detail::to_sparse(belief_update(m, b, a, o)));
    }
    if (params.guided_expansion && epoch > 0) {
      Rng grng = detail::make_stream(params.seed, 0xF0000000ULL + epoch);
      auto greedy = [&](const Belief& b, std::size_t step) -> std::size_t {
        if (detail::uniform01(grng) < 0.25) return pick(grng);
        const auto& level = levels[H - step];
        double best = -std::numeric_limits<double>::infinity();
        std::size_t action = 0;
        for (const auto& alpha : level) {
          double v = detail::alpha_dot(alpha, b);
          if (v > best) {
            best = v;
            action = alpha.action;
          }
        }
        return action;
      };
      for (std::size_t i = 0; i < params.trace_count; ++i)
        detail::collect_trace(m, grng, greedy, pool);
    }
    std::size_t target = std::max<std::size_t>(
        std::min<std::size_t>(params.belief_points, 32),
        params.belief_points * (epoch + 1) / params.epochs);
    detail::select_points(sparse_points, pool, target);

    std::vector<Belief> points;
    points.reserve(sparse_points.size());
    for (const auto& sb : sparse_points)
      points.push_back(detail::to_dense(sb, S));

    for (std::size_t t = 1; t <= H; ++t) {
      std::vector<AlphaVector> fresh(points.size());
      const auto& lower = levels[t - 1];
      detail::parallel_for(points.size(), [&](std::size_t i) {
        fresh[i] = detail::backup_point(m, lower, points[i]);
      });
      std::vector<AlphaVector> pool_t = std::move(levels[t]);
      pool_t.reserve(pool_t.size() + fresh.size());
      for (auto& alpha : fresh) pool_t.push_back(std::move(alpha));
      levels[t] = detail::prune_level(std::move(pool_t), points);
    }

    double value = -std::numeric_limits<double>::infinity();
    for (const auto& alpha : levels[H])
      value = std::max(value, detail::alpha_dot(alpha, m.initial_belief()));
    meta.epoch_values.push_back(value);
    meta.belief_count = points.size();
    meta.epochs_run = epoch + 1;
    if (meta.epoch_values.size() >= 2) {
      std::size_t n = meta.epoch_values.size();
      meta.final_residual =
          std::abs(meta.epoch_values[n - 1] - meta.epoch_values[n - 2]);
      meta.converged = meta.final_residual <= params.residual;
      if (meta.converged && points.size() >= params.belief_points) break;
    }
  }
  return AlphaVectorPolicy(std::move(levels), std::move(meta));
}

// Binary alpha-policy serialization.
namespace detail {

constexpr char kPolicyMagic[8] = {'A', 'G', 'R', 'P', 'O', 'L', '0', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("policy file truncated");
  return value;
}

}  // namespace detail

inline void save_policy(const AlphaVectorPolicy& policy, std::ostream& out) {
  out.write(detail::kPolicyMagic, sizeof(detail::kPolicyMagic));
  detail::write_raw<std::uint64_t>(out, policy.num_states());
  detail::write_raw<std::uint64_t>(out, policy.horizon());
  const auto& meta = policy.metadata();
  detail::write_raw<std::uint64_t>(out, meta.belief_count);
  detail::write_raw<std::uint64_t>(out, meta.epochs_run);
  detail::write_raw<std::uint8_t>(out, meta.converged ? 1 : 0);
  detail::write_raw<double>(out, meta.final_residual);
  detail::write_raw<std::uint64_t>(out, meta.seed);
  detail::write_raw<std::uint64_t>(out, meta.epoch_values.size());
  for (double v : meta.epoch_values) detail::write_raw<double>(out, v);
  for (std::size_t t = 0; t <= policy.horizon(); ++t) {
    const auto& level = policy.level(t);
    detail::write_raw<std::uint64_t>(out, level.size());
    for (const auto& alpha : level) {
      detail::write_raw<std::uint64_t>(out, alpha.action);
      out.write(reinterpret_cast<const char*>(alpha.values.data()),
                static_cast<std::streamsize>(alpha.values.size() *
                                             sizeof(double)));
    }
  }
  if (!out) throw FormatError("policy write failed");
}

inline void save_policy(const AlphaVectorPolicy& policy,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  save_policy(policy, out);
}

inline AlphaVectorPolicy load_policy(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kPolicyMagic, sizeof(magic)) != 0)
    throw FormatError("not an alpha policy file");
  auto num_states = detail::read_raw<std::uint64_t>(in);
  auto horizon = detail::read_raw<std::uint64_t>(in);
  if (num_states == 0 || num_states > (1ULL << 32) || horizon > (1ULL << 20))
    throw FormatError("policy header out of range");
  AlphaVectorPolicy::Metadata meta;
  meta.belief_count = detail::read_raw<std::uint64_t>(in);
  meta.epochs_run = detail::read_raw<std::uint64_t>(in);
  meta.converged = detail::read_raw<std::uint8_t>(in) != 0;
  meta.final_residual = detail::read_raw<double>(in);
  meta.seed = detail::read_raw<std::uint64_t>(in);
  auto n_values = detail::read_raw<std::uint64_t>(in);
  if (n_values > (1ULL << 20)) throw FormatError("policy header out of range");
  for (std::uint64_t i = 0; i < n_values; ++i)
    meta.epoch_values.push_back(detail::read_raw<double>(in));
  std::vector<std::vector<AlphaVector>> levels(horizon + 1);
  for (std::uint64_t t = 0; t <= horizon; ++t) {
    auto count = detail::read_raw<std::uint64_t>(in);
    if (count == 0 || count > (1ULL << 24))
      throw FormatError("alpha level count out of range");
    levels[t].resize(count);
    for (auto& alpha : levels[t]) {
      alpha.action = detail::read_raw<std::uint64_t>(in);
      alpha.values.resize(num_states);
      in.read(reinterpret_cast<char*>(alpha.values.data()),
              static_cast<std::streamsize>(num_states * sizeof(double)));
      if (!in) throw FormatError("policy file truncated");
    }
  }
  return AlphaVectorPolicy(std::move(levels), std::move(meta));
}

inline AlphaVectorPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return load_policy(in);
}

// PolicyBase adapter: at step k of an H-step episode the policy acts from
// the level with H - k steps remaining.
class AlphaPolicyAdapter : public PolicyBase {
 public:
  explicit AlphaPolicyAdapter(const AlphaVectorPolicy* policy)
      : policy_(policy) {
    if (!policy_) throw InvalidParams("null policy");
  }

  std::unique_ptr<PolicyBase> fresh() const override {
    return std::make_unique<AlphaPolicyAdapter>(policy_);
  }

  std::size_t action(const Belief& b, std::size_t step,
                     std::size_t horizon) override {
    std::size_t remaining = horizon > step ? horizon - step : 0;
    remaining = std::min(remaining, policy_->horizon());
    return policy_->action_at(b, remaining);
  }

 private:
  const AlphaVectorPolicy* policy_;
};

}  // namespace agr
