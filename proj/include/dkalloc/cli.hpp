// Copyright 2026 The dkalloc Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dkalloc/io.hpp"
#include "dkalloc/netgen.hpp"
#include "dkalloc/solvers.hpp"

namespace dkalloc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kGuard = 3,
  kIo = 4,
  kDivergence = 5,
};

/// Runs the command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Generator settings from a gen config document. Relative table paths are
/// resolved against `base_dir`.
GenConfig gen_config_from_json(const json& doc, const std::filesystem::path& base_dir = {});
json to_json(const GenConfig& config);

SolverOptions solver_options_from_json(const json& doc);

struct ExperimentCell {
  std::vector<int> n_agents;
  std::vector<int> n_levels;
  int n_tasks = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<SolverKind> solvers;
};

struct ExperimentPlan {
  std::vector<ExperimentCell> cells;
  // Generator fields other than counts and seed.
  GenConfig generator;
  SolverOptions options;
};

ExperimentPlan plan_from_json(const json& doc, const std::filesystem::path& base_dir = {});

inline constexpr const char* kBenchHeader =
    "kind,N,L,K,seed,solver,status,J_net,L_A,O_T,C_S,wall_time_s,evaluations,improvement_pct";

/// Runs every (N, L, seed, solver) cell and returns the CSV text: one run
/// row per cell in plan order, then one aggregate row per (N, L, K, solver).
std::string run_bench(const ExperimentPlan& plan, int jobs = 1);

}  // namespace dkalloc::cli
