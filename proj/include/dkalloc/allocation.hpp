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

#include <optional>
#include <span>
#include <vector>

#include "dkalloc/core.hpp"

namespace dkalloc {

// Network metrics of a single task. The policy carries its own storage.

/// Sum over links i != j and levels of F[i][j] * e[i][j][l] * J_A[l].
/// Throws std::invalid_argument when an exploitation row is not one-hot.
double alignment_loss(const NetworkInstance& instance, const AllocationPolicy& policy, int task);

/// Frequency-weighted cost of every chunk delivered to both link endpoints.
double transmission_overhead(const NetworkInstance& instance, const AllocationPolicy& policy, int task);

double storage_cost(const NetworkInstance& instance, const StorageConfig& storage, int task);

/// Metrics summed over tasks. `policies[n]` belongs to task `tasks[n]`; an
/// empty `tasks` means policies[k] is task k. A policy that breaks any
/// constraint makes the report infeasible.
MetricsReport network_loss(const NetworkInstance& instance, std::span<const AllocationPolicy> policies,
                           std::span<const int> tasks = {});

/// Constraint violations of a task policy. Throws DimensionError when the
/// policy does not match the instance dimensions.
std::vector<Violation> check_constraints(const NetworkInstance& instance, const AllocationPolicy& policy,
                                         int task);

struct SourceChoice {
  double time = kInfinity;
  std::optional<int> source;
};

/// Cheapest storer of chunk l for agent i (self first, then lowest index on
/// ties). Infinite with no source when nobody stores the chunk.
SourceChoice min_transmission(const NetworkInstance& instance, const StorageConfig& storage, int i, int task,
                              int l);

struct Prop1Result {
  AllocationPolicy policy;
  // (i, j) level of link i->j; -1 on the diagonal and on unservable links.
  Eigen::MatrixXi link_level;
  // (i, l) minimal delivery time of chunk l to agent i.
  Eigen::MatrixXd min_time;
  MetricsReport metrics;
  bool feasible = false;
};

/// Closed-form exploitation/transmission policies for a fixed storage.
///
/// Every link independently picks the level minimizing
///   eta_A * J_A[l] + eta_T * sum_{l' <= l} (Tmin_i[l'] + Tmin_j[l'])
/// with ties going to the lowest level. Agents then need every level up to
/// the highest one used on any of their links, and each needed chunk is
/// sourced from its cheapest storer on every link of that agent.
Prop1Result derive_policies_prop1(const NetworkInstance& instance, const StorageConfig& storage, int task);

/// Allocation-free evaluation of the closed-form policies, reused across
/// many storage configurations of one task. Metrics match network_loss of
/// the materialized policy.
class Prop1Evaluator {
 public:
  Prop1Evaluator(const NetworkInstance& instance, int task);

  MetricsReport evaluate(const StorageConfig& storage);

  // State of the last evaluate() call.
  const Eigen::MatrixXd& min_time() const { return min_time_; }
  const Eigen::MatrixXi& source() const { return source_; }
  const Eigen::MatrixXi& link_level() const { return link_level_; }
  /// Highest level needed by each agent, -1 when none.
  const Eigen::VectorXi& top_need() const { return top_need_; }

  const NetworkInstance& instance() const { return *instance_; }
  int task() const { return task_; }

 private:
  const NetworkInstance* instance_;
  int task_;
  int n_;
  int levels_;
  // times_[l](h, i) = T_hi for chunk l.
  std::vector<Eigen::MatrixXd> times_;
  Eigen::MatrixXd min_time_;
  Eigen::MatrixXd prefix_;
  Eigen::MatrixXi source_;
  Eigen::MatrixXi link_level_;
  Eigen::VectorXi top_need_;
};

}  // namespace dkalloc
