// Copyright 2026 The mreg Authors.
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


// mreg: local estimation of linear functionals from sparse noisy systems.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "mreg/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Local unbiased estimation of <w, x> from b = A x + noise"};
  app.set_version_flag("--version", "mreg 0.1.0");

  mreg::ProblemSpec spec;
  std::string command;
  std::vector<long long> potential, sum, cell;
  std::string w_path;
  long long radius = spec.budget.radius;
  long long max_circuits = spec.budget.max_circuits;
  long long max_support = spec.budget.max_support;
  long long rank = 0;
  long long trials = spec.trials;
  std::uint64_t seed = 0;
  std::string obs, x_path, out_path;

  app.add_option("command", command, "estimate | variance | circuits | complete | mc | oracle")
      ->required()
      ->check(CLI::IsMember(mreg::command_names()));
  app.add_option("--matrix", spec.matrix_path, "Matrix Market file (A, or the partial matrix)")
      ->required();
  app.add_option("--obs", obs, "observations b, one value per line");
  auto* w_opt = app.add_option("--w", w_path, "target vector file (dense or 'index value')");
  auto* pot_opt = app.add_option("--potential", potential, "target x_k - x_l (1-based)")
                      ->expected(2);
  auto* sum_opt = app.add_option("--sum", sum, "target x_k + x_l (1-based)")->expected(2);
  auto* cell_opt = app.add_option("--cell", cell, "missing entry (row col) to impute")
                       ->expected(2);
  w_opt->excludes(pot_opt, sum_opt, cell_opt);
  pot_opt->excludes(sum_opt, cell_opt);
  sum_opt->excludes(cell_opt);
  app.add_option("--noise", spec.noise, "iid:<var> | diag:<path> | full:<path>")
      ->capture_default_str();
  app.add_option("--radius", radius, "discovery radius")->capture_default_str();
  app.add_option("--max-circuits", max_circuits, "cap on general circuits")->capture_default_str();
  app.add_option("--max-support", max_support, "cap on rows per circuit")->capture_default_str();
  app.add_option("--rank", rank, "use disjoint rank-r row blocks as circuits");
  app.add_flag("--pool", spec.pool, "merge duplicate rows before estimating");
  app.add_option("--seed", seed, "Monte Carlo seed");
  app.add_option("--trials", trials, "Monte Carlo trials")->capture_default_str();
  app.add_option("--x", x_path, "true signal for mc (defaults to zero)");
  app.add_option("--out", out_path, "also write the report here");
  app.add_option("--tol", spec.tol, "numerical tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (!obs.empty()) spec.observations_path = obs;
  if (!x_path.empty()) spec.x_path = x_path;
  if (!out_path.empty()) spec.out_path = out_path;
  if (*w_opt) {
    spec.target_form = mreg::TargetForm::kVector;
    spec.w_path = w_path;
  } else if (*pot_opt || *sum_opt || *cell_opt) {
    const auto& pair = *pot_opt ? potential : (*sum_opt ? sum : cell);
    spec.target_form = *pot_opt   ? mreg::TargetForm::kPotential
                       : *sum_opt ? mreg::TargetForm::kSum
                                  : mreg::TargetForm::kCell;
    spec.first = pair[0];
    spec.second = pair[1];
  } else {
    std::cerr << "error: one of --w, --potential, --sum, --cell is required\n";
    return 1;
  }
  spec.budget.radius = radius;
  spec.budget.max_circuits = max_circuits;
  spec.budget.max_support = max_support;
  if (rank > 0) spec.rank = rank;
  spec.seed = seed;
  spec.trials = trials;

  try {
    std::cout << mreg::run_command(command, spec);
    return 0;
  } catch (const mreg::Error& e) {
    std::cerr << "mreg: " << mreg::error_code_name(e.code()) << ": " << e.what() << "\n";
    return mreg::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "mreg: " << e.what() << "\n";
    return 2;
  }
}
