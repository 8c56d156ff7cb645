// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfl/csv.hpp"
#include "hfl/d3qn.hpp"
#include "hfl/error.hpp"
#include "hfl/harness.hpp"
#include "hfl/topology.hpp"

using namespace hfl;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

ExperimentConfig config_or_default(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path.string(), text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical federated learning simulator"};
  app.require_subcommand(1);

  // topo gen
  auto* topo = app.add_subcommand("topo", "Deployment utilities");
  auto* gen = topo->add_subcommand("gen", "Generate a deployment as JSON");
  topo->require_subcommand(1);
  std::size_t gen_devices = 40, gen_edges = 3;
  double gen_side = 1000.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--devices", gen_devices, "Number of devices")->check(CLI::PositiveNumber);
  gen->add_option("--edges", gen_edges, "Number of edge servers")->check(CLI::PositiveNumber);
  gen->add_option("--side", gen_side, "Square side in meters")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("-o,--out", gen_out, "Output file (stdout when omitted)");

  // train-agent
  auto* train = app.add_subcommand("train-agent", "Train the assignment policy by imitating HFEL");
  TrainConfig tc;
  std::size_t base_devices = 40;
  double base_side = 1000.0;
  std::uint64_t base_seed = 7;
  std::string train_out = "agent.bin", curve_out;
  std::string optimizer = "adam";
  tc.agent.learning_rate = 3e-4;
  train->add_option("--edges", tc.agent.edges, "Edge servers M")->check(CLI::PositiveNumber);
  train->add_option("--horizon", tc.agent.horizon, "Devices per episode H")->check(CLI::PositiveNumber);
  train->add_option("--episodes", tc.episodes, "Training episodes");
  train->add_option("--hidden", tc.agent.hidden, "Recurrent width per direction");
  train->add_option("--shared", tc.agent.shared, "Shared layer width");
  train->add_option("--lr", tc.agent.learning_rate, "Learning rate");
  train->add_option("--gamma", tc.agent.gamma, "Discount factor");
  train->add_option("--batch", tc.agent.batch, "Minibatch size");
  train->add_option("--target-interval", tc.agent.target_interval, "Train steps between target syncs");
  train->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
  train->add_option("--base-devices", base_devices, "Devices in the base deployment (positions only)");
  train->add_option("--base-seed", base_seed, "Seed of the base deployment");
  train->add_option("--side", base_side, "Square side in meters");
  train->add_option("--seed", tc.seed, "Training seed");
  train->add_option("-o,--out", train_out, "Checkpoint path");
  train->add_option("--curve", curve_out, "Learning-curve CSV path");

  // run
  auto* run = app.add_subcommand("run", "Run one training experiment");
  std::string run_config, run_out, run_policy, run_assign, run_agent;
  std::int64_t run_seed = -1;
  run->add_option("-c,--config", run_config, "Experiment JSON");
  run->add_option("--policy", run_policy, "Override: random, vkc or ikc");
  run->add_option("--assignment", run_assign, "Override: geographic, hfel, exhaustive or drl");
  run->add_option("--agent", run_agent, "Agent checkpoint for drl");
  run->add_option("--seed", run_seed, "Override the seed");
  run->add_option("-o,--out", run_out, "Output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Repeat experiments over seeds and policies");
  std::string sw_config, sw_out, sw_policies = "ikc,vkc,random", sw_agent;
  std::string sw_scheduled;
  std::size_t sw_reps = 5;
  sw->add_option("--scheduled", sw_scheduled, "Comma separated H values (cluster policies use h = H/K)");
  sw->add_option("-c,--config", sw_config, "Experiment JSON");
  sw->add_option("--policies", sw_policies, "Comma separated scheduling policies");
  sw->add_option("--reps", sw_reps, "Repetitions per policy (seed, seed+1, ...)")->check(CLI::PositiveNumber);
  sw->add_option("--agent", sw_agent, "Agent checkpoint for drl");
  sw->add_option("-o,--out", sw_out, "Output CSV")->required();

  // compare-assign
  auto* cmp = app.add_subcommand("compare-assign", "Compare assignment strategies on fresh instances");
  std::size_t cmp_h = 20, cmp_m = 3, cmp_n = 100, cmp_base_devices = 40;
  std::uint64_t cmp_seed = 999, cmp_base_seed = 7;
  double cmp_side = 1000.0;
  std::string cmp_strategies = "geographic,hfel-100,hfel-300,drl", cmp_agent, cmp_out, cmp_detail;
  cmp->add_option("--horizon", cmp_h, "Devices per instance H")->check(CLI::PositiveNumber);
  cmp->add_option("--edges", cmp_m, "Edge servers M")->check(CLI::PositiveNumber);
  cmp->add_option("--instances", cmp_n, "Instances")->check(CLI::PositiveNumber);
  cmp->add_option("--strategies", cmp_strategies, "Comma separated strategies");
  cmp->add_option("--agent", cmp_agent, "Agent checkpoint for drl");
  cmp->add_option("--seed", cmp_seed, "Instance seed");
  cmp->add_option("--base-devices", cmp_base_devices, "Devices in the base deployment");
  cmp->add_option("--base-seed", cmp_base_seed, "Seed of the base deployment");
  cmp->add_option("--side", cmp_side, "Square side in meters");
  cmp->add_option("-o,--out", cmp_out, "Summary CSV (stdout when omitted)");
  cmp->add_option("--detail", cmp_detail, "Per-instance CSV");

  // cluster-eval
  auto* ce = app.add_subcommand("cluster-eval", "Clustering quality and cost of the mini and full models");
  std::string ce_config, ce_out;
  ce->add_option("-c,--config", ce_config, "Experiment JSON");
  ce->add_option("-o,--out", ce_out, "Output JSON (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const Topology t = generate_topology(gen_devices, gen_edges, gen_side, gen_seed);
      const std::string text = nlohmann::json(t).dump(2) + "\n";
      if (gen_out.empty())
        std::cout << text;
      else
        write_text(gen_out, text);
    } else if (train->parsed()) {
      tc.agent.optimizer = optimizer == "adam" ? Optimizer::kAdam : Optimizer::kSgd;
      tc.agent.seed = tc.seed;
      const Topology base = generate_topology(base_devices, tc.agent.edges, base_side, base_seed);
      std::string curve = curve_csv_header();
      const auto result = train_agent(tc, base, [&](const EpisodeStats& s) {
        curve += curve_csv_row(s);
        if ((s.episode + 1) % 50 == 0)
          std::cerr << "episode " << s.episode + 1 << " agreement " << s.agreement << " epsilon " << s.epsilon
                    << "\n";
      });
      if (fs::path(train_out).has_parent_path()) fs::create_directories(fs::path(train_out).parent_path());
      result.agent.save(train_out);
      if (!curve_out.empty()) write_text(curve_out, curve);
    } else if (run->parsed()) {
      ExperimentConfig cfg = config_or_default(run_config);
      if (!run_policy.empty()) cfg.policy = parse_schedule_policy(run_policy);
      if (!run_assign.empty()) cfg.assignment.kind = parse_assignment_kind(run_assign);
      if (!run_agent.empty()) cfg.agent_path = run_agent;
      if (run_seed >= 0) cfg.seed = static_cast<std::uint64_t>(run_seed);
      const RunRecord rec = run_experiment(cfg);
      write_run(run_out, cfg, rec);
      std::cout << "rounds " << rec.rounds << " converged " << (rec.converged ? "yes" : "no") << " accuracy "
                << rec.rows.back().accuracy << " objective " << rec.total_objective << "\n";
    } else if (sw->parsed()) {
      const ExperimentConfig base = config_or_default(sw_config);
      std::vector<std::pair<std::string, ExperimentConfig>> configs;
      std::vector<std::size_t> hs;
      for (const auto& h : split(sw_scheduled)) hs.push_back(std::stoul(h));
      if (hs.empty()) hs.push_back(base.scheduled);
      for (const auto& p : split(sw_policies)) {
        for (std::size_t h : hs) {
          ExperimentConfig c = base;
          c.policy = parse_schedule_policy(p);
          c.scheduled = h;
          if (c.policy != SchedulePolicy::kRandom) {
            if (h % c.clusters != 0) {
              std::cerr << "skipping " << p << " at H=" << h << ": not a multiple of K=" << c.clusters << "\n";
              continue;
            }
            c.per_cluster = h / c.clusters;
          }
          if (!sw_agent.empty()) c.agent_path = sw_agent;
          configs.emplace_back(p + "/H=" + std::to_string(h), c);
        }
      }
      const auto rows = sweep(configs, sw_reps, nullptr, [](const std::string& label, std::size_t r, const RunRecord* rec) {
        std::cerr << label << " rep " << r << ": " << (rec ? std::to_string(rec->rounds) + " rounds" : "failed")
                  << "\n";
      });
      std::string csv = sweep_csv_header();
      for (const auto& row : rows) {
        csv += sweep_csv_row(row);
        for (const auto& e : row.errors) std::cerr << row.label << ": " << e << "\n";
      }
      write_text(sw_out, csv);
    } else if (cmp->parsed()) {
      const Topology base = generate_topology(cmp_base_devices, cmp_m, cmp_side, cmp_base_seed);
      const auto strategies = split(cmp_strategies);
      std::optional<Agent> agent;
      if (!cmp_agent.empty()) agent.emplace(Agent::load(cmp_agent));
      const auto result = compare_assignment(base, cmp_h, cmp_n, strategies, CostParams{}, cmp_seed,
                                             agent ? &*agent : nullptr);
      std::string csv = compare_csv_header();
      for (const auto& row : result.summary) csv += compare_csv_row(row);
      if (cmp_out.empty())
        std::cout << csv;
      else
        write_text(cmp_out, csv);
      if (!cmp_detail.empty()) {
        std::string detail = outcome_csv_header();
        for (std::size_t s = 0; s < strategies.size(); ++s)
          for (std::size_t i = 0; i < result.outcomes[s].size(); ++i)
            detail += outcome_csv_row(strategies[s], i, result.outcomes[s][i]);
        write_text(cmp_detail, detail);
      }
    } else if (ce->parsed()) {
      const ExperimentConfig cfg = config_or_default(ce_config);
      const ClusterEval ev = cluster_eval(cfg);
      const auto cost = [](const ClusteringCost& c) {
        return nlohmann::json{{"time_s", c.time}, {"energy_j", c.energy}, {"uplink_bytes", c.uplink_bytes}};
      };
      const nlohmann::json j{{"ari_ikc", ev.ari_ikc},
                             {"ari_vkc", ev.ari_vkc},
                             {"cost_ikc", cost(ev.cost_ikc)},
                             {"cost_vkc", cost(ev.cost_vkc)},
                             {"config_hash", config_hash(cfg)}};
      if (ce_out.empty())
        std::cout << j.dump(2) << "\n";
      else
        write_text(ce_out, j.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "hflsim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
