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
#include <optional>
#include <string>
#include <string_view>

#include "dkalloc/allocation.hpp"
#include "dkalloc/core.hpp"

namespace dkalloc {

// Storage-space solvers. Every solver searches over storage configurations
// only; exploitation and transmission follow from derive_policies_prop1.

struct GreedyConfig {
  int max_sweeps = 100;
};

struct GaConfig {
  int population = 64;
  int generations = 200;
  int tournament = 3;
  double crossover = 0.9;
  // Per-bit mutation probability; 1 / (N * L) when unset.
  std::optional<double> mutation;
  int elitism = 2;
  std::uint64_t seed = 0;
  // Put the all-ones storage into the initial population.
  bool seed_full_storage = false;
};

inline constexpr int kDefaultMaxBits = 24;

void validate(const GreedyConfig& config);
void validate(const GaConfig& config);

SolveResult solve_fully_store(const NetworkInstance& instance, int task);

/// Coordinate descent over agents' storage rows, starting from fully-store.
/// A row change is accepted only on strict improvement.
SolveResult solve_greedy(const NetworkInstance& instance, int task, const GreedyConfig& config = {});

/// Enumerates all 2^(N*L) storage configurations. Throws GuardError when
/// N * L exceeds `max_bits`.
SolveResult solve_exact(const NetworkInstance& instance, int task, int max_bits = kDefaultMaxBits);

SolveResult solve_ga(const NetworkInstance& instance, int task, const GaConfig& config = {});

enum class SolverKind { kFullyStore, kGreedy, kExact, kGenetic };

std::optional<SolverKind> parse_solver(std::string_view name);
std::string_view solver_name(SolverKind kind);

struct SolverOptions {
  GreedyConfig greedy;
  GaConfig ga;
  int max_bits = kDefaultMaxBits;
};

/// Solves every task independently and sums metrics and diagnostics.
SolveResult solve_all(const NetworkInstance& instance, SolverKind kind, const SolverOptions& options = {});

}  // namespace dkalloc
