#pragma once

// Tabular POMDP model (S, A, Z, T, R, O, b0, gamma, H) with sparse
// probability tables, plus belief arithmetic, environment simulation and
// policy evaluation. Transition rows T(s,a,.) and observation rows O(.,a,s')
// are distributions and are validated on construction.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "agr/errors.hpp"

namespace agr {

using Rng = std::mt19937_64;

namespace detail {

// Uniform double in [0,1) from the top 53 bits; identical across platforms.
inline double uniform01(Rng& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

// Independent per-episode stream derived from (seed, index).
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// Index-parallel loop writing into preassigned slots; the result does not
// depend on scheduling. The first exception thrown by any worker propagates.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (n < 2 || workers < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct SparseEntry {
  std::uint32_t index = 0;
  double prob = 0.0;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Row-compressed nonnegative matrix; rows are sparse, sorted by column.
class SparseRows {
 public:
  SparseRows() = default;
  SparseRows(std::size_t num_rows, std::size_t num_cols)
      : offsets_(num_rows + 1, 0), cols_(num_cols) {}

  std::size_t num_rows() const {
    return offsets_.empty() ? 0 : offsets_.size() - 1;
  }
  std::size_t num_cols() const { return cols_; }
  std::size_t num_entries() const { return entries_.size(); }

  std::span<const SparseEntry> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], entries_.data() + offsets_[r + 1]};
  }

  double at(std::size_t r, std::uint32_t col) const {
    auto entries = row(r);
    auto it = std::lower_bound(
        entries.begin(), entries.end(), col,
        [](const SparseEntry& e, std::uint32_t c) { return e.index < c; });
    return (it != entries.end() && it->index == col) ? it->prob : 0.0;
  }

  double row_sum(std::size_t r) const {
    double total = 0.0;
    for (const auto& e : row(r)) total += e.prob;
    return total;
  }

  friend bool operator==(const SparseRows&, const SparseRows&) = default;

  class Builder {
   public:
    Builder(std::size_t num_rows, std::size_t num_cols)
        : rows_(num_rows), cols_(num_cols) {}

    void add(std::size_t row, std::size_t col, double p) {
      if (row >= rows_.size() || col >= cols_)
        throw DimensionMismatch("sparse builder index out of range");
      if (p != 0.0) rows_[row].push_back({static_cast<std::uint32_t>(col), p});
    }

    SparseRows finish() {
      SparseRows out(rows_.size(), cols_);
      std::size_t total = 0;
      for (auto& r : rows_) total += r.size();
      out.entries_.reserve(total);
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        auto& row = rows_[r];
        std::sort(row.begin(), row.end(),
                  [](const SparseEntry& a, const SparseEntry& b) {
                    return a.index < b.index;
                  });
        // merge duplicate columns by summing
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (!out.entries_.empty() && out.offsets_[r] < out.entries_.size() &&
              out.entries_.back().index == row[i].index) {
            out.entries_.back().prob += row[i].prob;
          } else {
            out.entries_.push_back(row[i]);
          }
        }
        out.offsets_[r + 1] = out.entries_.size();
      }
      return out;
    }

   private:
    std::vector<std::vector<SparseEntry>> rows_;
    std::size_t cols_;
  };

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<SparseEntry> entries_;
  std::size_t cols_ = 0;
};

// Probability distribution over states. Entries must be nonnegative and sum
// to 1 within kTolerance; the support (indices with positive mass) is
// precomputed for sparse iteration.
class Belief {
 public:
  static constexpr double kTolerance = 1e-9;

  Belief() = default;

  explicit Belief(std::vector<double> probs) : p_(std::move(probs)) {
    double total = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (p_[i] < 0.0) {
        if (p_[i] < -1e-12)
          throw ModelInvariantViolation("belief entry " + std::to_string(i) +
                                        " is negative");
        p_[i] = 0.0;
      }
      total += p_[i];
      if (p_[i] > 0.0) support_.push_back(static_cast<std::uint32_t>(i));
    }
    if (std::abs(total - 1.0) > kTolerance)
      throw ModelInvariantViolation("belief mass " + std::to_string(total) +
                                    " is not 1");
  }

  static Belief point_mass(std::size_t num_states, std::size_t state) {
    std::vector<double> p(num_states, 0.0);
    p.at(state) = 1.0;
    return Belief(std::move(p));
  }

  static Belief uniform(std::size_t num_states) {
    std::vector<double> p(num_states, 1.0 / static_cast<double>(num_states));
    return Belief(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probs() const { return p_; }
  std::span<const std::uint32_t> support() const { return support_; }

  friend bool operator==(const Belief& a, const Belief& b) {
    return a.p_ == b.p_;
  }

 private:
  std::vector<double> p_;
  std::vector<std::uint32_t> support_;
};

inline double l1_distance(const Belief& a, const Belief& b) {
  if (a.size() != b.size())
    throw DimensionMismatch("beliefs of different dimension");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

struct PomdpLabels {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::vector<std::string> observations;
};

class TabularPOMDP {
 public:
  static constexpr double kProbTolerance = 1e-9;

  // transition[a] has rows s -> entries (s', p); observation[a] has rows
  // s' -> entries (o, p); reward is row-major over (s, a).
  TabularPOMDP(std::vector<SparseRows> transition,
               std::vector<SparseRows> observation, std::vector<double> reward,
               Belief initial_belief, std::size_t horizon, double discount,
               PomdpLabels labels = {})
      : transition_(std::move(transition)),
        observation_(std::move(observation)),
        reward_(std::move(reward)),
        initial_belief_(std::move(initial_belief)),
        horizon_(horizon),
        discount_(discount),
        labels_(std::move(labels)) {
    validate();
  }

  std::size_t num_states() const { return transition_[0].num_rows(); }
  std::size_t num_actions() const { return transition_.size(); }
  std::size_t num_observations() const { return observation_[0].num_cols(); }
  std::size_t horizon() const { return horizon_; }
  double discount() const { return discount_; }
  const Belief& initial_belief() const { return initial_belief_; }
  const PomdpLabels& labels() const { return labels_; }

  double transition(std::size_t s, std::size_t a, std::size_t s2) const {
    return transition_[a].at(s, static_cast<std::uint32_t>(s2));
  }
  std::span<const SparseEntry> transition_row(std::size_t s,
                                              std::size_t a) const {
    return transition_[a].row(s);
  }
  double observation(std::size_t o, std::size_t a, std::size_t s2) const {
    return observation_[a].at(s2, static_cast<std::uint32_t>(o));
  }
  std::span<const SparseEntry> observation_row(std::size_t a,
                                               std::size_t s2) const {
    return observation_[a].row(s2);
  }
  double reward(std::size_t s, std::size_t a) const {
    return reward_[s * num_actions() + a];
  }
  const std::vector<double>& reward_table() const { return reward_; }
  const std::vector<SparseRows>& transition_tables() const {
    return transition_;
  }
  const std::vector<SparseRows>& observation_tables() const {
    return observation_;
  }

  // Copies with one table replaced; the result is revalidated.
  TabularPOMDP with_reward(std::vector<double> reward) const {
    return TabularPOMDP(transition_, observation_, std::move(reward),
                        initial_belief_, horizon_, discount_, labels_);
  }
  TabularPOMDP with_observation(std::vector<SparseRows> observation) const {
    return TabularPOMDP(transition_, observation, reward_, initial_belief_,
                        horizon_, discount_, labels_);
  }

 private:
  void validate() const {
    if (transition_.empty()) throw ModelInvariantViolation("no actions");
    std::size_t S = transition_[0].num_rows();
    std::size_t A = transition_.size();
    if (S == 0) throw ModelInvariantViolation("no states");
    if (observation_.size() != A)
      throw ModelInvariantViolation("observation table action count mismatch");
    std::size_t Z = observation_[0].num_cols();
    if (Z == 0) throw ModelInvariantViolation("no observations");
    for (std::size_t a = 0; a < A; ++a) {
      if (transition_[a].num_rows() != S || transition_[a].num_cols() != S)
        throw ModelInvariantViolation("transition slice shape mismatch");
      if (observation_[a].num_rows() != S || observation_[a].num_cols() != Z)
        throw ModelInvariantViolation("observation slice shape mismatch");
      for (std::size_t s = 0; s < S; ++s) {
        check_row(transition_[a].row(s), transition_[a].row_sum(s),
                  "transition", s, a);
        check_row(observation_[a].row(s), observation_[a].row_sum(s),
                  "observation", s, a);
      }
    }
    if (reward_.size() != S * A)
      throw ModelInvariantViolation("reward table shape mismatch");
    if (initial_belief_.size() != S)
      throw ModelInvariantViolation("initial belief dimension mismatch");
    if (horizon_ == 0) throw ModelInvariantViolation("horizon must be >= 1");
    if (!(discount_ > 0.0) || discount_ > 1.0)
      throw ModelInvariantViolation("discount must lie in (0, 1]");
    if (!labels_.states.empty() && labels_.states.size() != S)
      throw ModelInvariantViolation("state label count mismatch");
    if (!labels_.actions.empty() && labels_.actions.size() != A)
      throw ModelInvariantViolation("action label count mismatch");
    if (!labels_.observations.empty() && labels_.observations.size() != Z)
      throw ModelInvariantViolation("observation label count mismatch");
  }

  static void check_row(std::span<const SparseEntry> row, double sum,
                        const char* table, std::size_t s, std::size_t a) {
    for (const auto& e : row) {
      if (e.prob < 0.0 || e.prob > 1.0 + kProbTolerance) {
        std::ostringstream msg;
        msg << table << " entry out of [0,1] at row " << s << " action " << a;
        throw ModelInvariantViolation(msg.str());
      }
    }
    if (std::abs(sum - 1.0) > kProbTolerance) {
      std::ostringstream msg;
      msg << table << " row (s=" << s << ", a=" << a << ") sums to " << sum;
      throw ModelInvariantViolation(msg.str());
    }
  }

  std::vector<SparseRows> transition_;
  std::vector<SparseRows> observation_;
  std::vector<double> reward_;
  Belief initial_belief_;
  std::size_t horizon_;
  double discount_;
  PomdpLabels labels_;
};

// Exact Bayes filter: b'(s') proportional to O(o,a,s') sum_s T(s,a,s') b(s).
inline Belief belief_update(const TabularPOMDP& m, const Belief& b,
                            std::size_t action, std::size_t obs) {
  if (b.size() != m.num_states())
    throw DimensionMismatch("belief dimension does not match model");
  if (action >= m.num_actions() || obs >= m.num_observations())
    throw DimensionMismatch("action or observation index out of range");
  std::vector<double> next(m.num_states(), 0.0);
  for (std::uint32_t s : b.support())
    for (const auto& e : m.transition_row(s, action))
      next[e.index] += b[s] * e.prob;
  double total = 0.0;
  for (std::size_t s2 = 0; s2 < next.size(); ++s2) {
    if (next[s2] == 0.0) continue;
    next[s2] *= m.observation(obs, action, s2);
    total += next[s2];
  }
  if (total <= 0.0)
    throw ZeroProbabilityObservation(
        "observation " + std::to_string(obs) + " has zero probability after action " +
        std::to_string(action));
  for (double& p : next) p /= total;
  return Belief(std::move(next));
}

// Probability of each observation under (b, a); entries with zero mass are
// omitted. Ordered by observation index.
inline std::vector<std::pair<std::size_t, double>> observation_probabilities(
    const TabularPOMDP& m, const Belief& b, std::size_t action) {
  std::vector<double> pushed(m.num_states(), 0.0);
  for (std::uint32_t s : b.support())
    for (const auto& e : m.transition_row(s, action))
      pushed[e.index] += b[s] * e.prob;
  std::vector<double> mass(m.num_observations(), 0.0);
  for (std::size_t s2 = 0; s2 < pushed.size(); ++s2) {
    if (pushed[s2] == 0.0) continue;
    for (const auto& e : m.observation_row(action, s2))
      mass[e.index] += pushed[s2] * e.prob;
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t o = 0; o < mass.size(); ++o)
    if (mass[o] > 0.0) out.emplace_back(o, mass[o]);
  return out;
}

struct SimState {
  std::size_t true_state = 0;
  std::size_t step = 0;
  std::uint64_t rng_seed = 0;
};

struct StepOutcome {
  double reward = 0.0;
  std::size_t observation = 0;
  SimState next;
};

inline std::size_t sample_entries(std::span<const SparseEntry> entries,
                                  double u) {
  double acc = 0.0;
  for (const auto& e : entries) {
    acc += e.prob;
    if (u < acc) return e.index;
  }
  return entries.back().index;
}

inline std::size_t sample_belief(const Belief& b, double u) {
  double acc = 0.0;
  auto support = b.support();
  for (std::uint32_t s : support) {
    acc += b[s];
    if (u < acc) return s;
  }
  return support.back();
}

// One environment step: reward R(s,a), successor s' ~ T(s,a,.), observation
// o ~ O(.,a,s'). Throws EpisodeFinished past the horizon.
inline StepOutcome sample_step(const TabularPOMDP& m, const SimState& sim,
                               std::size_t action, Rng& rng) {
  if (sim.step >= m.horizon())
    throw EpisodeFinished("step " + std::to_string(sim.step) +
                          " is past horizon " + std::to_string(m.horizon()));
  if (sim.true_state >= m.num_states() || action >= m.num_actions())
    throw DimensionMismatch("simulation state or action out of range");
  double reward = m.reward(sim.true_state, action);
  std::size_t s2 =
      sample_entries(m.transition_row(sim.true_state, action),
                     detail::uniform01(rng));
  std::size_t obs =
      sample_entries(m.observation_row(action, s2), detail::uniform01(rng));
  return {reward, obs, SimState{s2, sim.step + 1, sim.rng_seed}};
}

// Per-episode acting policy. fresh() returns a fresh instance for a new
// episode; history-tracking policies advance through observe().
class PolicyBase {
 public:
  virtual ~PolicyBase() = default;
  virtual std::unique_ptr<PolicyBase> fresh() const = 0;
  virtual std::size_t action(const Belief& b, std::size_t step,
                             std::size_t horizon) = 0;
  virtual void observe(std::size_t action, std::size_t obs) {
    (void)action;
    (void)obs;
  }
};

class ConstantPolicy final : public PolicyBase {
 public:
  explicit ConstantPolicy(std::size_t action) : action_(action) {}
  std::unique_ptr<PolicyBase> fresh() const override {
    return std::make_unique<ConstantPolicy>(action_);
  }
  std::size_t action(const Belief&, std::size_t, std::size_t) override {
    return action_;
  }

 private:
  std::size_t action_;
};

class FunctionPolicy final : public PolicyBase {
 public:
  using Fn = std::function<std::size_t(const Belief&, std::size_t step,
                                       std::size_t horizon)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  std::unique_ptr<PolicyBase> fresh() const override {
    return std::make_unique<FunctionPolicy>(fn_);
  }
  std::size_t action(const Belief& b, std::size_t step,
                     std::size_t horizon) override {
    return fn_(b, step, horizon);
  }

 private:
  Fn fn_;
};

// Discounted return of `policy` over n seeded episodes. Episode i draws its
// start state and all samples from the stream derived from (seed, i), so the
// result is deterministic for a fixed seed and independent of scheduling.
inline std::vector<double> evaluate_policy(const TabularPOMDP& m,
                                           const PolicyBase& policy,
                                           std::size_t n_episodes,
                                           std::uint64_t seed) {
  std::vector<double> returns(n_episodes, 0.0);
  detail::parallel_for(n_episodes, [&](std::size_t i) {
    Rng rng = detail::make_stream(seed, i);
    auto acting = policy.fresh();
    Belief b = m.initial_belief();
    SimState sim{sample_belief(b, detail::uniform01(rng)), 0, seed};
    double ret = 0.0;
    double disc = 1.0;
    for (std::size_t t = 0; t < m.horizon(); ++t) {
      std::size_t a = acting->action(b, t, m.horizon());
      if (a >= m.num_actions())
        throw UndefinedPolicyAction("policy returned action " +
                                    std::to_string(a));
      StepOutcome out = sample_step(m, sim, a, rng);
      ret += disc * out.reward;
      disc *= m.discount();
      b = belief_update(m, b, a, out.observation);
      acting->observe(a, out.observation);
      sim = out.next;
    }
    returns[i] = ret;
  });
  return returns;
}

}  // namespace agr
