// Command-line front end: build/export models, solve them, simulate policies
// and compare bound variants, all driven by an INI config.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "agr/config.hpp"
#include "agr/exact.hpp"
#include "agr/harness.hpp"
#include "agr/pbvi.hpp"
#include "agr/pomdp_io.hpp"
#include "agr/variants.hpp"

namespace {

agr::CompiledAgr build_variant(const agr::RunConfig& config) {
  agr::CompiledAgr compiled = agr::build_from_config(config);
  return agr::apply_variant(compiled, config.variant);
}

void print_stats(const agr::BatchStats& stats) {
  std::cout << "episodes " << stats.episodes << "\n"
            << "mean_return " << stats.mean << "\n"
            << "stddev_return " << stats.stddev << "\n"
            << "se_return " << stats.se << "\n"
            << "min_return " << stats.min << "\n"
            << "max_return " << stats.max << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Active goal recognition POMDP toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "run configuration file")
      ->required();

  auto* build = app.add_subcommand("build", "compile the model and print sizes");
  std::string export_path;
  build->add_option("--export-pomdp", export_path,
                    "write the model in interchange format");

  auto* solve = app.add_subcommand("solve", "solve the configured variant");
  std::string policy_out;
  solve->add_option("--out", policy_out, "write the alpha-vector policy");

  auto* simulate =
      app.add_subcommand("simulate", "run a seeded episode batch");
  std::string policy_in;
  std::string sim_out_dir;
  simulate->add_option("--policy", policy_in,
                       "load a solved policy instead of solving");
  simulate->add_option("--out-dir", sim_out_dir, "write traces and returns");

  auto* compare =
      app.add_subcommand("compare", "solve and simulate all four variants");
  std::string cmp_out_dir;
  bool strict = false;
  compare->add_option("--out-dir", cmp_out_dir, "write CSVs and summary.json");
  compare->add_flag("--strict", strict,
                    "exit nonzero when an ordering check fails");

  auto* oracle =
      app.add_subcommand("oracle", "exact expectimax value of the variant");
  std::size_t oracle_horizon = 0;
  std::size_t max_nodes = 2'000'000;
  oracle->add_option("--horizon", oracle_horizon,
                     "override the config horizon");
  oracle->add_option("--max-nodes", max_nodes, "belief tree node cap");

  CLI11_PARSE(app, argc, argv);

  agr::RunConfig config = agr::RunConfig::load(config_path);

  if (build->parsed()) {
    agr::CompiledAgr compiled = build_variant(config);
    const agr::TabularPOMDP& m = compiled.pomdp;
    std::cout << "variant " << agr::to_string(config.variant.kind) << "\n"
              << "states " << m.num_states() << "\n"
              << "actions " << m.num_actions() << "\n"
              << "observations " << m.num_observations() << "\n"
              << "horizon " << m.horizon() << "\n"
              << "discount " << m.discount() << "\n"
              << "goals " << compiled.meta.num_goals << "\n";
    if (!export_path.empty()) {
      std::ofstream out(export_path);
      if (!out) {
        std::cerr << "error: cannot open '" << export_path << "'\n";
        return 1;
      }
      agr::write_pomdp(m, out);
      std::cout << "exported " << export_path << "\n";
    }
    return 0;
  }

  if (solve->parsed()) {
    agr::CompiledAgr compiled = build_variant(config);
    agr::AlphaVectorPolicy policy =
        agr::pbvi_solve(compiled.pomdp, config.solver);
    const auto& meta = policy.metadata();
    std::cout << "variant " << agr::to_string(config.variant.kind) << "\n"
              << "value_at_b0 " << meta.epoch_values.back() << "\n"
              << "belief_points " << meta.belief_count << "\n"
              << "epochs_run " << meta.epochs_run << "\n"
              << "converged " << (meta.converged ? "true" : "false") << "\n";
    if (!policy_out.empty()) {
      agr::save_policy(policy, policy_out);
      std::cout << "saved " << policy_out << "\n";
    }
    return 0;
  }

  if (simulate->parsed()) {
    agr::CompiledAgr compiled = build_variant(config);
    agr::AlphaVectorPolicy policy =
        policy_in.empty() ? agr::pbvi_solve(compiled.pomdp, config.solver)
                          : agr::load_policy(policy_in);
    agr::AlphaPolicyAdapter adapter(&policy);
    agr::BatchResult batch =
        agr::run_batch(compiled.pomdp, compiled.meta, adapter, config.batch);
    print_stats(batch.returns);
    if (!sim_out_dir.empty()) {
      agr::CompareResult single;
      single.action_labels = compiled.pomdp.labels().actions;
      single.horizon = compiled.pomdp.horizon();
      single.discount = compiled.pomdp.discount();
      single.all_ok = true;
      single.entries.push_back({config.variant.kind, std::move(policy),
                                std::move(batch)});
      agr::emit_results(single, sim_out_dir);
      std::cout << "wrote " << sim_out_dir << "\n";
    }
    return 0;
  }

  if (compare->parsed()) {
    agr::CompiledAgr compiled = agr::build_from_config(config);
    agr::CompareOptions options;
    options.solver = config.solver;
    options.batch = config.batch;
    options.se_slack = config.se_slack;
    options.penalty = config.variant.penalty;
    agr::CompareResult result = agr::compare_variants(compiled, options);
    for (const auto& entry : result.entries) {
      const agr::BatchStats& stats = entry.batch.returns;
      std::cout << agr::to_string(entry.kind) << " mean " << stats.mean
                << " stddev " << stats.stddev << " se " << stats.se << "\n";
    }
    for (const auto& check : result.checks)
      std::cout << "check \"" << check.name << "\" "
                << (check.ok ? "ok" : "FAILED") << " (" << check.lhs
                << " <= " << check.rhs << ")\n";
    if (!cmp_out_dir.empty()) {
      agr::emit_results(result, cmp_out_dir);
      std::cout << "wrote " << cmp_out_dir << "\n";
    }
    if (strict && !result.all_ok) return 2;
    return 0;
  }

  agr::RunConfig oracle_config = config;
  if (oracle_horizon > 0) oracle_config.pomdp.horizon = oracle_horizon;
  agr::CompiledAgr compiled = build_variant(oracle_config);
  agr::ExactSolveParams params;
  params.max_nodes = max_nodes;
  agr::ExactSolution solution =
      agr::exact_solve(compiled.pomdp, compiled.pomdp.horizon(), params);
  std::cout << "variant " << agr::to_string(oracle_config.variant.kind) << "\n"
            << "horizon " << compiled.pomdp.horizon() << "\n"
            << "value " << solution.value << "\n"
            << "nodes " << solution.nodes << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const agr::AgrError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
