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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dkalloc/allocation.hpp"
#include "dkalloc/io.hpp"
#include "dkalloc/solvers.hpp"
#include "oracles.hpp"

using namespace dkalloc;

namespace {

void check_consistent(const NetworkInstance& inst, const SolveResult& r) {
  REQUIRE(r.policies.size() == r.tasks.size());
  for (std::size_t n = 0; n < r.policies.size(); ++n) CHECK(check_constraints(inst, r.policies[n], r.tasks[n]).empty());
  const MetricsReport again = network_loss(inst, r.policies, r.tasks);
  CHECK(again.feasible == r.metrics.feasible);
  CHECK(oracle::close(again.network_loss, r.metrics.network_loss));
  MetricsReport ref;
  for (std::size_t n = 0; n < r.policies.size(); ++n) ref += oracle::metrics(inst, r.policies[n], r.tasks[n]);
  CHECK(oracle::close(ref.network_loss, r.metrics.network_loss));
}

std::string fingerprint(const SolveResult& r) { return to_json(r).dump(); }

}  // namespace

TEST_CASE("fully-store baseline") {
  const NetworkInstance worked = oracle::worked_instance();
  const SolveResult r = solve_fully_store(worked, 0);
  CHECK(r.metrics.align_loss == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r.metrics.tx_overhead == 0.0);
  CHECK(r.metrics.storage_cost == 4.0);
  CHECK(r.metrics.network_loss == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.policies.front().storage() == StorageConfig::full(2, 2));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const NetworkInstance inst = oracle::random_instance(5, 3, 2, seed);
    const SolveResult all = solve_all(inst, SolverKind::kFullyStore);
    CHECK(all.metrics.tx_overhead == 0.0);
    CHECK(all.metrics.storage_cost == doctest::Approx(5 * 3 * inst.chunk_size.mean() * 2));
    check_consistent(inst, all);
  }
}

TEST_CASE("greedy keeps full storage when storage is free") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NetworkInstance inst = oracle::random_instance(4, 3, 1, seed);
    inst.weights = {1.0, 1.0, 0.0};
    const SolveResult r = solve_greedy(inst, 0);
    CHECK(r.policies.front().storage() == StorageConfig::full(4, 3));
    CHECK(r.iterations == 1);
    CHECK(r.trace.size() == 1);
  }
}

TEST_CASE("worked instance: greedy and exact") {
  const NetworkInstance inst = oracle::worked_instance();
  const SolveResult exact = solve_exact(inst, 0);
  const SolveResult greedy = solve_greedy(inst, 0);
  CHECK(exact.evaluations == 16);
  CHECK(exact.metrics.network_loss <= 0.6 * (1 + 1e-12));
  CHECK(oracle::close(exact.metrics.network_loss, oracle::global_min(inst, 0)));
  CHECK(greedy.metrics.network_loss <= 0.6 * (1 + 1e-12));
  CHECK(greedy.metrics.network_loss >= exact.metrics.network_loss);
  check_consistent(inst, exact);
  check_consistent(inst, greedy);
}

TEST_CASE("one level with symmetric rates: greedy equals exact") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    NetworkInstance inst = oracle::random_instance(3, 1, 1, seed);
    inst.rate = (inst.rate + inst.rate.transpose()) / 2;
    CAPTURE(seed);
    CHECK(oracle::close(solve_greedy(inst, 0).metrics.network_loss, solve_exact(inst, 0).metrics.network_loss));
  }
}

TEST_CASE("one level: exact picks the best nonempty storage") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkInstance inst = oracle::random_instance(4, 1, 1, seed);
    double best = oracle::kInf;
    for (std::uint64_t m = 1; m < 16; ++m) best = std::min(best, oracle::profile_min(inst, m, 0));
    const SolveResult r = solve_exact(inst, 0);
    CHECK(oracle::close(r.metrics.network_loss, best));
    CHECK(r.policies.front().storage().count() > 0);
  }
}

TEST_CASE("exact guard") {
  const NetworkInstance inst = oracle::random_instance(5, 5, 1, 1);
  CHECK_THROWS_AS(solve_exact(inst, 0), GuardError);
  CHECK_THROWS_AS(solve_exact(inst, 0, 20), GuardError);
  CHECK_NOTHROW(solve_exact(oracle::random_instance(3, 2, 1, 1), 0, 6));
  CHECK_THROWS_AS(solve_exact(oracle::random_instance(3, 2, 1, 1), 0, 5), GuardError);
}

TEST_CASE("dominance chain and self-consistency") {
  for (int n = 3; n <= 5; ++n) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const NetworkInstance inst = oracle::random_instance(n, 2, 2, seed);
      const SolveResult exact = solve_all(inst, SolverKind::kExact);
      const SolveResult greedy = solve_all(inst, SolverKind::kGreedy);
      const SolveResult full = solve_all(inst, SolverKind::kFullyStore);
      const SolveResult ga = solve_all(inst, SolverKind::kGenetic);
      CHECK(exact.metrics.network_loss <= greedy.metrics.network_loss);
      CHECK(greedy.metrics.network_loss <= full.metrics.network_loss);
      CHECK(exact.metrics.network_loss <= ga.metrics.network_loss);
      for (const auto* r : {&exact, &greedy, &full, &ga}) check_consistent(inst, *r);
    }
  }
}

TEST_CASE("greedy accepts strictly decreasing values only") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const NetworkInstance inst = oracle::random_instance(6, 3, 1, seed);
    const SolveResult r = solve_greedy(inst, 0, {.max_sweeps = 100});
    for (std::size_t n = 1; n < r.trace.size(); ++n) CHECK(r.trace[n] < r.trace[n - 1]);
    CHECK(r.trace.back() == r.metrics.network_loss);
    CHECK(r.iterations <= 100);
    CHECK(r.evaluations == 1 + r.iterations * 6 * 7);

    const SolveResult capped = solve_greedy(inst, 0, {.max_sweeps = 1});
    CHECK(capped.iterations == 1);
    CHECK(capped.metrics.network_loss >= r.metrics.network_loss);
  }
}

TEST_CASE("GA never beats exact and keeps a seeded full storage") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkInstance inst = oracle::random_instance(3, 2, 1, seed);
    const double exact = solve_exact(inst, 0).metrics.network_loss;
    GaConfig c;
    c.seed = seed;
    c.generations = 20;
    c.seed_full_storage = true;
    const SolveResult ga = solve_ga(inst, 0, c);
    CHECK(ga.metrics.network_loss >= exact);
    CHECK(ga.metrics.network_loss <= solve_fully_store(inst, 0).metrics.network_loss);
  }
}

TEST_CASE("solvers are deterministic") {
  const NetworkInstance inst = oracle::random_instance(4, 3, 2, 11);
  SolverOptions opts;
  opts.ga.seed = 5;
  for (SolverKind kind : {SolverKind::kFullyStore, SolverKind::kGreedy, SolverKind::kExact, SolverKind::kGenetic}) {
    const SolveResult a = solve_all(inst, kind, opts);
    const SolveResult b = solve_all(inst, kind, opts);
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(a.iterations == b.iterations);
    CHECK(a.evaluations == b.evaluations);
  }
  SolverOptions other = opts;
  other.ga.seed = 6;
  CHECK(solve_all(inst, SolverKind::kGenetic, other).evaluations ==
        solve_all(inst, SolverKind::kGenetic, opts).evaluations);
}

TEST_CASE("exact equals the level-profile oracle") {
  struct Size {
    int n, levels, seeds;
  };
  for (const Size size : {Size{3, 2, 10}, Size{3, 3, 6}, Size{4, 2, 6}, Size{4, 3, 3}, Size{5, 2, 3}, Size{5, 3, 1}}) {
    for (int seed = 0; seed < size.seeds; ++seed) {
      const NetworkInstance inst = oracle::random_instance(size.n, size.levels, 1, 100 + seed);
      CAPTURE(size.n);
      CAPTURE(size.levels);
      CAPTURE(seed);
      CHECK(oracle::close(solve_exact(inst, 0).metrics.network_loss, oracle::global_min(inst, 0)));
    }
  }
}

TEST_CASE("tasks are solved independently and summed") {
  const NetworkInstance inst = oracle::random_instance(4, 2, 3, 3);
  const SolveResult all = solve_all(inst, SolverKind::kGreedy);
  double total = 0.0;
  for (int k = 0; k < 3; ++k) total += solve_greedy(inst, k).metrics.network_loss;
  CHECK(all.metrics.network_loss == doctest::Approx(total).epsilon(1e-12));
  CHECK(all.tasks == std::vector<int>{0, 1, 2});
}

TEST_CASE("solver names and configs") {
  CHECK(parse_solver("fully-store") == SolverKind::kFullyStore);
  CHECK(parse_solver("greedy") == SolverKind::kGreedy);
  CHECK(parse_solver("exact") == SolverKind::kExact);
  CHECK(parse_solver("ga") == SolverKind::kGenetic);
  CHECK(parse_solver("genetic") == SolverKind::kGenetic);
  CHECK_FALSE(parse_solver("gurobi").has_value());
  for (SolverKind k : {SolverKind::kFullyStore, SolverKind::kGreedy, SolverKind::kExact, SolverKind::kGenetic}) {
    CHECK(parse_solver(solver_name(k)) == k);
  }
  CHECK_THROWS_AS(validate(GreedyConfig{0}), std::invalid_argument);
  GaConfig ga;
  ga.population = 1;
  CHECK_THROWS_AS(validate(ga), std::invalid_argument);
  ga = {};
  ga.crossover = 1.5;
  CHECK_THROWS_AS(validate(ga), std::invalid_argument);
  ga = {};
  ga.mutation = -0.1;
  CHECK_THROWS_AS(validate(ga), std::invalid_argument);
  CHECK_NOTHROW(validate(GaConfig{}));
}
