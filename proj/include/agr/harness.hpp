#pragma once

// Episode harness over compiled models: goal-belief marginals and normalized
// entropy, seeded batch simulation with per-step entropy traces, bound-variant
// comparison with standard-error checks, and CSV/JSON result emission. All
// outputs are deterministic for a fixed seed; no timestamps or host details
// are written.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/errors.hpp"
#include "agr/pbvi.hpp"
#include "agr/pomdp.hpp"
#include "agr/variants.hpp"

#include "json.hpp"

namespace agr {

// Marginal of the joint belief over the goal component.
inline std::vector<double> goal_belief(const AgrMeta& meta, const Belief& b) {
  if (b.size() != meta.num_states())
    throw MissingFactorizationMetadata(
        "belief dimension " + std::to_string(b.size()) +
        " does not match factored state count " +
        std::to_string(meta.num_states()));
  std::vector<double> marginal(meta.num_goals, 0.0);
  for (std::size_t s : b.support()) marginal[meta.goal_of(s)] += b[s];
  return marginal;
}

// Shannon entropy of the goal marginal divided by log of the goal count, so
// uniform = 1 and point mass = 0. Zero-mass entries contribute zero.
inline double normalized_entropy(const std::vector<double>& marginal) {
  if (marginal.size() < 2)
    throw DegenerateGoalSet("entropy needs at least two goals");
  double h = 0.0;
  for (double p : marginal)
    if (p > 0.0) h -= p * std::log(p);
  return h / std::log(static_cast<double>(marginal.size()));
}

struct StepRecord {
  std::size_t action = 0;
  std::size_t observation = 0;
  double reward = 0.0;
  double goal_entropy = 0.0;  // entropy of the belief after this step's update
};

struct EpisodeRecord {
  std::size_t true_goal = 0;
  double discounted_return = 0.0;
  std::vector<StepRecord> steps;
};

struct StepAggregate {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct BatchStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double se = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t episodes = 0;
};

namespace detail {

inline BatchStats summarize(const std::vector<double>& values) {
  BatchStats stats;
  stats.episodes = values.size();
  if (values.empty()) return stats;
  double total = 0.0;
  stats.min = values[0];
  stats.max = values[0];
  for (double v : values) {
    total += v;
    stats.min = std::min(stats.min, v);
    stats.max = std::max(stats.max, v);
  }
  stats.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    stats.se = stats.stddev / std::sqrt(static_cast<double>(values.size()));
  }
  return stats;
}

}  // namespace detail

struct BatchResult {
  std::vector<EpisodeRecord> episodes;
  BatchStats returns;
  std::vector<StepAggregate> entropy_by_step;  // indexed by step
};

struct BatchOptions {
  std::size_t episodes = 1000;
  std::uint64_t seed = 9001;
};

// Seeded batch of full episodes. Episode i draws every sample from the
// stream derived from (seed, i); entropy is recorded after each belief
// update, so index t reflects the information state entering step t+1.
inline BatchResult run_batch(const TabularPOMDP& m, const AgrMeta& meta,
                             const PolicyBase& policy,
                             const BatchOptions& options = {}) {
  if (options.episodes == 0) throw InvalidParams("batch needs episodes");
  if (meta.num_states() != m.num_states())
    throw MissingFactorizationMetadata(
        "factorization metadata does not match the model tables");
  BatchResult result;
  result.episodes.resize(options.episodes);
  detail::parallel_for(options.episodes, [&](std::size_t i) {
    Rng rng = detail::make_stream(options.seed, i);
    auto acting = policy.fresh();
    Belief b = m.initial_belief();
    SimState sim{sample_belief(b, detail::uniform01(rng)), 0, options.seed};
    EpisodeRecord episode;
    episode.true_goal = meta.goal_of(sim.true_state);
    episode.steps.reserve(m.horizon());
    double disc = 1.0;
    for (std::size_t t = 0; t < m.horizon(); ++t) {
      std::size_t a = acting->action(b, t, m.horizon());
      if (a >= m.num_actions())
        throw UndefinedPolicyAction("policy returned action " +
                                    std::to_string(a));
      StepOutcome out = sample_step(m, sim, a, rng);
      episode.discounted_return += disc * out.reward;
      disc *= m.discount();
      b = belief_update(m, b, a, out.observation);
      acting->observe(a, out.observation);
      sim = out.next;
      StepRecord record;
      record.action = a;
      record.observation = out.observation;
      record.reward = out.reward;
      record.goal_entropy = normalized_entropy(goal_belief(meta, b));
      episode.steps.push_back(record);
    }
    result.episodes[i] = std::move(episode);
  });

  std::vector<double> returns(options.episodes);
  for (std::size_t i = 0; i < options.episodes; ++i)
    returns[i] = result.episodes[i].discounted_return;
  result.returns = detail::summarize(returns);

  result.entropy_by_step.resize(m.horizon());
  std::vector<double> column(options.episodes);
  for (std::size_t t = 0; t < m.horizon(); ++t) {
    for (std::size_t i = 0; i < options.episodes; ++i)
      column[i] = result.episodes[i].steps[t].goal_entropy;
    BatchStats s = detail::summarize(column);
    result.entropy_by_step[t] =
        StepAggregate{s.mean, s.min, s.max, s.stddev, s.episodes};
  }
  return result;
}

struct CompareOptions {
  SolverParams solver;
  BatchOptions batch;
  double se_slack = 1.0;  // scales the standard-error allowances
  double penalty = 1e6;
};

struct CompareResult {
  struct Entry {
    VariantKind kind = VariantKind::kAgr;
    AlphaVectorPolicy policy;
    BatchResult batch;
  };
  struct Check {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
  };
  std::vector<Entry> entries;  // order: ub, agr, lb-a, lb-t
  std::vector<Check> checks;
  bool all_ok = false;
  std::vector<std::string> action_labels;
  std::size_t horizon = 0;
  double discount = 0.0;
};

// Solves and simulates all four variants, then checks the sample-return
// ordering: the lower bounds must sit below the full model by twice the
// pooled standard error, and the full model may exceed the upper bound by
// at most one pooled standard error.
inline CompareResult compare_variants(const CompiledAgr& compiled,
                                      const CompareOptions& options = {}) {
  CompareResult result;
  result.action_labels = compiled.pomdp.labels().actions;
  result.horizon = compiled.pomdp.horizon();
  result.discount = compiled.pomdp.discount();
  for (VariantKind kind : {VariantKind::kUb, VariantKind::kAgr,
                           VariantKind::kLbA, VariantKind::kLbT}) {
    CompiledAgr variant =
        apply_variant(compiled, VariantParams{kind, options.penalty});
    CompareResult::Entry entry;
    entry.kind = kind;
    entry.policy = pbvi_solve(variant.pomdp, options.solver);
    AlphaPolicyAdapter adapter(&entry.policy);
    entry.batch =
        run_batch(variant.pomdp, variant.meta, adapter, options.batch);
    result.entries.push_back(std::move(entry));
  }

  auto stats_of = [&](VariantKind kind) -> const BatchStats& {
    for (const auto& entry : result.entries)
      if (entry.kind == kind) return entry.batch.returns;
    throw InvalidParams("variant missing from comparison");
  };
  auto pooled_se = [](const BatchStats& a, const BatchStats& b) {
    return std::sqrt(a.se * a.se + b.se * b.se);
  };
  const BatchStats& ub = stats_of(VariantKind::kUb);
  const BatchStats& agr = stats_of(VariantKind::kAgr);
  const BatchStats& lba = stats_of(VariantKind::kLbA);
  const BatchStats& lbt = stats_of(VariantKind::kLbT);
  double slack = options.se_slack;

  result.checks.push_back({"lb-t below lb-a by 2 se",
                           lbt.mean + 2.0 * slack * pooled_se(lbt, lba),
                           lba.mean, false});
  result.checks.push_back({"lb-a below agr by 2 se",
                           lba.mean + 2.0 * slack * pooled_se(lba, agr),
                           agr.mean, false});
  result.checks.push_back({"agr within 1 se of ub", agr.mean,
                           ub.mean + slack * pooled_se(agr, ub), false});
  for (auto& check : result.checks) check.ok = check.lhs <= check.rhs;
  result.all_ok = true;
  for (const auto& check : result.checks) result.all_ok &= check.ok;
  return result;
}

namespace detail {

inline std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "'");
  out << contents;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

}  // namespace detail

// Per-variant step traces (traces_<variant>.csv), episode returns
// (returns_<variant>.csv) and a summary.json with stats and checks. Output
// bytes depend only on the comparison result.
inline void emit_results(const CompareResult& result,
                         const std::string& directory) {
  namespace fs = std::filesystem;
  fs::path dir(directory);
  fs::create_directories(dir);

  for (const auto& entry : result.entries) {
    std::string name = to_string(entry.kind);
    std::string traces = "episode,step,entropy,action,reward\n";
    std::string returns = "episode,true_goal,return\n";
    for (std::size_t i = 0; i < entry.batch.episodes.size(); ++i) {
      const EpisodeRecord& episode = entry.batch.episodes[i];
      for (std::size_t t = 0; t < episode.steps.size(); ++t) {
        const StepRecord& step = episode.steps[t];
        traces += std::to_string(i);
        traces += ',';
        traces += std::to_string(t);
        traces += ',';
        traces += detail::format_double(step.goal_entropy);
        traces += ',';
        traces += result.action_labels.empty()
                      ? std::to_string(step.action)
                      : result.action_labels[step.action];
        traces += ',';
        traces += detail::format_double(step.reward);
        traces += '\n';
      }
      returns += std::to_string(i);
      returns += ',';
      returns += std::to_string(episode.true_goal);
      returns += ',';
      returns += detail::format_double(episode.discounted_return);
      returns += '\n';
    }
    detail::write_file(dir / ("traces_" + name + ".csv"), traces);
    detail::write_file(dir / ("returns_" + name + ".csv"), returns);
  }

  nlohmann::ordered_json summary;
  summary["horizon"] = result.horizon;
  summary["discount"] = result.discount;
  nlohmann::ordered_json variants;
  for (const auto& entry : result.entries) {
    const BatchStats& stats = entry.batch.returns;
    nlohmann::ordered_json v;
    v["mean_return"] = stats.mean;
    v["stddev_return"] = stats.stddev;
    v["se_return"] = stats.se;
    v["min_return"] = stats.min;
    v["max_return"] = stats.max;
    v["episodes"] = stats.episodes;
    std::vector<double> entropy_means;
    for (const auto& agg : entry.batch.entropy_by_step)
      entropy_means.push_back(agg.mean);
    v["entropy_mean_by_step"] = entropy_means;
    const auto& meta = entry.policy.metadata();
    nlohmann::ordered_json solver;
    solver["belief_points"] = meta.belief_count;
    solver["epochs_run"] = meta.epochs_run;
    solver["converged"] = meta.converged;
    solver["final_residual"] = meta.final_residual;
    solver["epoch_values"] = meta.epoch_values;
    solver["seed"] = meta.seed;
    v["solver"] = solver;
    variants[to_string(entry.kind)] = v;
  }
  summary["variants"] = variants;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& check : result.checks) {
    nlohmann::ordered_json c;
    c["name"] = check.name;
    c["lhs"] = check.lhs;
    c["rhs"] = check.rhs;
    c["ok"] = check.ok;
    checks.push_back(c);
  }
  summary["checks"] = checks;
  summary["all_ok"] = result.all_ok;
  detail::write_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace agr
