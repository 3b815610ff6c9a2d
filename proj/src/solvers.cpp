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

#include "dkalloc/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace dkalloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Materializes the policy of the chosen storage and fills the result.
void finish(SolveResult& result, const NetworkInstance& instance, const StorageConfig& storage, int task) {
  Prop1Result derived = derive_policies_prop1(instance, storage, task);
  result.tasks = {task};
  result.policies = {std::move(derived.policy)};
  result.metrics = derived.metrics;
}

std::mt19937_64 ga_engine(std::uint64_t seed, int task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6761u,
                    static_cast<std::uint32_t>(task)};
  return std::mt19937_64(seq);
}

}  // namespace

void validate(const GreedyConfig& config) {
  if (config.max_sweeps < 1) throw std::invalid_argument("greedy max_sweeps must be at least 1");
}

void validate(const GaConfig& config) {
  if (config.population < 2) throw std::invalid_argument("GA population must be at least 2");
  if (config.generations < 0) throw std::invalid_argument("GA generations must be nonnegative");
  if (config.tournament < 1) throw std::invalid_argument("GA tournament size must be at least 1");
  if (!(config.crossover >= 0.0 && config.crossover <= 1.0)) {
    throw std::invalid_argument("GA crossover probability must lie in [0, 1]");
  }
  if (config.mutation && !(*config.mutation >= 0.0 && *config.mutation <= 1.0)) {
    throw std::invalid_argument("GA mutation probability must lie in [0, 1]");
  }
  if (config.elitism < 0 || config.elitism > config.population) {
    throw std::invalid_argument("GA elitism must lie in [0, population]");
  }
}

SolveResult solve_fully_store(const NetworkInstance& instance, int task) {
  const auto start = Clock::now();
  SolveResult result;
  result.solver = "fully-store";
  finish(result, instance, StorageConfig::full(instance.n_agents, instance.n_levels), task);
  result.iterations = 1;
  result.evaluations = 1;
  result.wall_time_s = seconds_since(start);
  return result;
}

SolveResult solve_greedy(const NetworkInstance& instance, int task, const GreedyConfig& config) {
  validate(config);
  if (instance.n_levels > 20) throw GuardError("greedy enumerates 2^L rows per agent; L > 20 refused");
  const auto start = Clock::now();
  SolveResult result;
  result.solver = "greedy";

  Prop1Evaluator evaluator(instance, task);
  StorageConfig storage = StorageConfig::full(instance.n_agents, instance.n_levels);
  double best = evaluator.evaluate(storage).network_loss;
  long evaluations = 1;
  result.trace.push_back(best);

  const std::uint32_t rows = 1u << instance.n_levels;
  int sweep = 0;
  while (sweep < config.max_sweeps) {
    ++sweep;
    bool changed = false;
    for (int i = 0; i < instance.n_agents; ++i) {
      const std::uint32_t incumbent = storage.row(i);
      std::uint32_t best_row = incumbent;
      for (std::uint32_t row = 0; row < rows; ++row) {
        if (row == incumbent) continue;
        storage.set_row(i, row);
        const double value = evaluator.evaluate(storage).network_loss;
        ++evaluations;
        if (value < best) {
          best = value;
          best_row = row;
        }
      }
      storage.set_row(i, best_row);
      if (best_row != incumbent) {
        changed = true;
        result.trace.push_back(best);
      }
    }
    if (!changed) break;
  }

  finish(result, instance, storage, task);
  result.iterations = sweep;
  result.evaluations = evaluations;
  result.wall_time_s = seconds_since(start);
  return result;
}

SolveResult solve_exact(const NetworkInstance& instance, int task, int max_bits) {
  const long bits = static_cast<long>(instance.n_agents) * instance.n_levels;
  if (bits > max_bits || bits > 62) {
    throw GuardError("exact solver refused: N*L = " + std::to_string(bits) + " exceeds max-bits " +
                     std::to_string(std::min(max_bits, 62)));
  }
  const auto start = Clock::now();
  SolveResult result;
  result.solver = "exact";

  Prop1Evaluator evaluator(instance, task);
  StorageConfig storage(instance.n_agents, instance.n_levels);
  std::vector<std::uint8_t>& data = storage.data();
  const std::uint64_t count = std::uint64_t{1} << bits;
  double best = kInfinity;
  std::uint64_t best_mask = count - 1;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (long b = 0; b < bits; ++b) data[b] = (mask >> b) & 1u;
    const double value = evaluator.evaluate(storage).network_loss;
    if (value < best) {
      best = value;
      best_mask = mask;
    }
  }

  finish(result, instance, StorageConfig::from_mask(instance.n_agents, instance.n_levels, best_mask), task);
  result.iterations = 1;
  result.evaluations = static_cast<long>(count);
  result.wall_time_s = seconds_since(start);
  return result;
}

SolveResult solve_ga(const NetworkInstance& instance, int task, const GaConfig& config) {
  validate(config);
  const auto start = Clock::now();
  SolveResult result;
  result.solver = "ga";

  const int n = instance.n_agents;
  const int levels = instance.n_levels;
  const std::size_t genes = static_cast<std::size_t>(n) * levels;
  const double mutation = config.mutation.value_or(1.0 / static_cast<double>(genes));

  std::mt19937_64 rng = ga_engine(config.seed, task);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution do_cross(config.crossover);
  std::bernoulli_distribution do_mutate(mutation);
  std::uniform_int_distribution<int> pick(0, config.population - 1);

  Prop1Evaluator evaluator(instance, task);
  StorageConfig scratch(n, levels);
  long evaluations = 0;
  const auto fitness = [&](const std::vector<std::uint8_t>& genome) {
    scratch.data() = genome;
    ++evaluations;
    return evaluator.evaluate(scratch).network_loss;
  };

  using Genome = std::vector<std::uint8_t>;
  std::vector<Genome> population(config.population, Genome(genes));
  for (auto& g : population)
    for (auto& bit : g) bit = coin(rng) ? 1 : 0;
  if (config.seed_full_storage) std::fill(population[0].begin(), population[0].end(), 1);

  std::vector<double> cost(population.size());
  for (std::size_t p = 0; p < population.size(); ++p) cost[p] = fitness(population[p]);

  Genome best = population[0];
  double best_cost = cost[0];
  const auto track = [&](const Genome& g, double c) {
    if (c < best_cost) {
      best_cost = c;
      best = g;
    }
  };
  for (std::size_t p = 1; p < population.size(); ++p) track(population[p], cost[p]);

  const auto tournament = [&]() {
    int winner = pick(rng);
    for (int t = 1; t < config.tournament; ++t) {
      const int challenger = pick(rng);
      if (cost[challenger] < cost[winner]) winner = challenger;
    }
    return winner;
  };

  std::vector<int> order(population.size());
  for (int gen = 0; gen < config.generations; ++gen) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cost[a] < cost[b]; });

    std::vector<Genome> next;
    std::vector<double> next_cost;
    next.reserve(population.size());
    for (int e = 0; e < config.elitism; ++e) {
      next.push_back(population[order[e]]);
      next_cost.push_back(cost[order[e]]);
    }
    while (next.size() < population.size()) {
      const Genome& a = population[tournament()];
      const Genome& b = population[tournament()];
      Genome child = a;
      if (do_cross(rng)) {
        for (std::size_t g = 0; g < genes; ++g) child[g] = coin(rng) ? a[g] : b[g];
      }
      for (auto& bit : child)
        if (do_mutate(rng)) bit ^= 1;
      const double c = fitness(child);
      track(child, c);
      next.push_back(std::move(child));
      next_cost.push_back(c);
    }
    population = std::move(next);
    cost = std::move(next_cost);
  }

  StorageConfig chosen(n, levels);
  chosen.data() = best;
  finish(result, instance, chosen, task);
  result.iterations = config.generations;
  result.evaluations = evaluations;
  result.wall_time_s = seconds_since(start);
  return result;
}

std::optional<SolverKind> parse_solver(std::string_view name) {
  if (name == "fully-store") return SolverKind::kFullyStore;
  if (name == "greedy") return SolverKind::kGreedy;
  if (name == "exact") return SolverKind::kExact;
  if (name == "ga" || name == "genetic") return SolverKind::kGenetic;
  return std::nullopt;
}

std::string_view solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kFullyStore: return "fully-store";
    case SolverKind::kGreedy: return "greedy";
    case SolverKind::kExact: return "exact";
    case SolverKind::kGenetic: return "ga";
  }
  return "unknown";
}

SolveResult solve_all(const NetworkInstance& instance, SolverKind kind, const SolverOptions& options) {
  SolveResult total;
  total.solver = std::string(solver_name(kind));
  for (int k = 0; k < instance.n_tasks; ++k) {
    SolveResult part;
    switch (kind) {
      case SolverKind::kFullyStore: part = solve_fully_store(instance, k); break;
      case SolverKind::kGreedy: part = solve_greedy(instance, k, options.greedy); break;
      case SolverKind::kExact: part = solve_exact(instance, k, options.max_bits); break;
      case SolverKind::kGenetic: part = solve_ga(instance, k, options.ga); break;
    }
    total.tasks.push_back(k);
    total.policies.push_back(std::move(part.policies.front()));
    total.metrics += part.metrics;
    total.iterations += part.iterations;
    total.evaluations += part.evaluations;
    total.wall_time_s += part.wall_time_s;
    total.trace.insert(total.trace.end(), part.trace.begin(), part.trace.end());
  }
  return total;
}

}  // namespace dkalloc
