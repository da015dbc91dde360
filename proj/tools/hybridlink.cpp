// Copyright 2026 The HybridLink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hybridlink: simulate, train, evaluate, stiffness sweep and gait metrics.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hybridlink/cli.hpp"

namespace cli = hybridlink::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hybrid rigid/soft humanoid simulation and imitation training"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a model and write a trajectory CSV");
  simulate->add_option("--model", sim.model, "Model file (JSON)");
  simulate->add_option("--config", sim.config, "Run config; supplies model, reference and rates");
  simulate->add_option("--checkpoint", sim.checkpoint,
                       "Policy checkpoint; without one the PD targets follow the reference");
  simulate->add_option("--duration", sim.duration, "Seconds to simulate")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Seed for sampled actions")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output trajectory CSV")->capture_default_str();
  simulate->add_flag("--stochastic", sim.stochastic, "Sample actions instead of the policy mean");

  cli::TrainArgs tr;
  std::string resume;
  std::uint64_t train_seed = 0;
  int train_workers = 0, train_iterations = 0;
  auto* train = app.add_subcommand("train", "Train a policy with PPO");
  train->add_option("--config", tr.config, "Run config")->required();
  train->add_option("--model", tr.model, "Override the config's model");
  train->add_option("--fine-tune", tr.fine_tune, "Initialize from this checkpoint");
  auto* resume_opt = train->add_option("--resume", resume,
                                       "Continue from a checkpoint (default <checkpoint_dir>/latest.json)")
                         ->expected(0, 1);
  auto* seed_opt = train->add_option("--seed", train_seed, "Override the config seed");
  auto* workers_opt = train->add_option("--workers", train_workers, "Override the worker count");
  auto* iter_opt = train->add_option("--iterations", train_iterations, "Override the iteration count");
  train->add_option("--out", tr.out, "Checkpoint directory override");

  cli::EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Mean return of a checkpoint");
  evaluate->add_option("--config", ev.config, "Run config");
  evaluate->add_option("--model", ev.model, "Model file");
  evaluate->add_option("--checkpoint", ev.checkpoint, "Policy checkpoint")->required();
  evaluate->add_option("--episodes", ev.episodes, "Episode count")->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "Seed")->capture_default_str();
  evaluate->add_flag("--deterministic", ev.deterministic, "Use the policy mean");

  cli::SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run stiffness conditions and compare metrics");
  sweep->add_option("--config", sw.config, "Run config");
  sweep->add_option("--model", sw.model, "Model file");
  sweep->add_option("--checkpoint", sw.checkpoint, "Shared policy for all conditions");
  sweep->add_option("--scales", sw.scales, "Stiffness scale factors")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_flag("--scale-damping", sw.scale_damping, "Scale damping together with stiffness");
  sweep->add_flag("--scripted-load", sw.scripted_load,
                  "Locked-body quasi-static tip loading instead of closed-loop simulation");
  sweep->add_option("--load", sw.load, "Scripted load magnitude, N")->capture_default_str();
  sweep->add_option("--load-point", sw.load_point, "Contact point receiving the load")
      ->capture_default_str();
  sweep->add_option("--duration", sw.duration, "Seconds per condition")->capture_default_str();
  sweep->add_option("--seed", sw.seed, "Seed")->capture_default_str();
  sweep->add_option("--out", sw.out, "Output directory")->capture_default_str();

  cli::MetricsArgs mt;
  auto* metrics = app.add_subcommand("metrics", "Gait metrics report for trajectory files");
  metrics->add_option("files", mt.files, "Trajectory CSV files")->required();
  metrics->add_option("--mass", mt.mass, "Body mass, kg (default: from the trajectory)");
  metrics->add_option("--efficiency", mt.efficiency, "Energy transfer efficiency")
      ->capture_default_str();
  metrics->add_option("--out", mt.out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kFailure;
  }

  try {
    if (*simulate) return cli::cmd_simulate(sim);
    if (*train) {
      if (resume_opt->count()) tr.resume = resume;
      if (seed_opt->count()) tr.seed = train_seed;
      if (workers_opt->count()) tr.workers = train_workers;
      if (iter_opt->count()) tr.iterations = train_iterations;
      return cli::cmd_train(tr);
    }
    if (*evaluate) return cli::cmd_evaluate(ev, std::cout);
    if (*sweep) return cli::cmd_sweep(sw, std::cout);
    if (*metrics) return cli::cmd_metrics(mt, std::cout);
  } catch (const std::exception& e) {
    cli::log(cli::LogLevel::kError, e.what());
    return cli::kFailure;
  }
  return cli::kFailure;
}
