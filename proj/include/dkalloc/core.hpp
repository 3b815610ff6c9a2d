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

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dkalloc {

/// Cost assigned to infeasible configurations. Compares greater than every
/// finite cost.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tolerance on the per-row normalization of SC frequencies.
inline constexpr double kFreqRowTolerance = 1e-9;

/// Objective weights of the network loss.
struct Weights {
  double align = 1.0;
  double transmit = 0.5;
  double storage = 0.1;

  bool operator==(const Weights&) const = default;
};

/// Full allocation problem datum.
///
/// Levels and tasks are 0-based throughout the library. `freq[k](i, j)` is
/// the frequency with which agent i (Tx) talks to agent j (Rx) for task k,
/// `rate(h, i)` the link rate from h to i, `chunk_size(k, l)` the size of the
/// differential chunk of level l and `align_loss(k, l)` the alignment loss
/// of the level-l knowledge of task k.
struct NetworkInstance {
  int n_agents = 0;
  int n_tasks = 0;
  int n_levels = 0;
  std::vector<Eigen::MatrixXd> freq;
  Eigen::MatrixXd rate;
  Eigen::MatrixXd chunk_size;
  Eigen::MatrixXd align_loss;
  Weights weights;
  std::optional<std::uint64_t> seed;
  // Generator settings recorded for provenance; null when absent.
  nlohmann::json provenance;
};

/// One broken invariant or constraint.
struct Violation {
  std::string field;
  std::vector<int> index;
  std::string rule;

  std::string message() const;
};

std::vector<Violation> validate_instance(const NetworkInstance& instance);

/// Time for agent h to send the level-l chunk of task k to agent i. Zero for
/// h == i. Throws std::out_of_range on bad indices.
double transmission_time(const NetworkInstance& instance, int h, int i, int k, int l);

/// Per-agent, per-level binary storage decisions for one task.
class StorageConfig {
 public:
  StorageConfig() = default;
  StorageConfig(int n_agents, int n_levels, bool value = false);

  static StorageConfig full(int n_agents, int n_levels) { return {n_agents, n_levels, true}; }
  /// Bit (i * n_levels + l) of `mask` is s[i][l].
  static StorageConfig from_mask(int n_agents, int n_levels, std::uint64_t mask);

  int n_agents() const { return n_agents_; }
  int n_levels() const { return n_levels_; }

  bool operator()(int i, int l) const { return bits_[index(i, l)] != 0; }
  void set(int i, int l, bool value) { bits_[index(i, l)] = value ? 1 : 0; }

  /// Storage row of agent i packed as bits l = 0..L-1.
  std::uint32_t row(int i) const;
  void set_row(int i, std::uint32_t row);

  std::uint64_t to_mask() const;
  int count() const;

  const std::vector<std::uint8_t>& data() const { return bits_; }
  std::vector<std::uint8_t>& data() { return bits_; }

  bool operator==(const StorageConfig&) const = default;

 private:
  std::size_t index(int i, int l) const { return static_cast<std::size_t>(i) * n_levels_ + l; }

  int n_agents_ = 0;
  int n_levels_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Binary exploitation, storage, transmission and need variables of one task.
///
/// Array layouts follow the index order e[i][j][l], s[i][l],
/// phi[h][i][j][l], psi[h][i][j][l], tau[i][l]. Diagonal links (i == j) are
/// never used and stay zero.
class AllocationPolicy {
 public:
  AllocationPolicy() = default;
  AllocationPolicy(int n_agents, int n_levels);

  int n_agents() const { return n_agents_; }
  int n_levels() const { return n_levels_; }

  std::uint8_t& exploit(int i, int j, int l) { return exploit_[link(i, j) * n_levels_ + l]; }
  std::uint8_t exploit(int i, int j, int l) const { return exploit_[link(i, j) * n_levels_ + l]; }

  std::uint8_t& tx_to_tx(int h, int i, int j, int l) { return tx_to_tx_[sourced(h, i, j, l)]; }
  std::uint8_t tx_to_tx(int h, int i, int j, int l) const { return tx_to_tx_[sourced(h, i, j, l)]; }

  std::uint8_t& tx_to_rx(int h, int i, int j, int l) { return tx_to_rx_[sourced(h, i, j, l)]; }
  std::uint8_t tx_to_rx(int h, int i, int j, int l) const { return tx_to_rx_[sourced(h, i, j, l)]; }

  std::uint8_t& needed(int i, int l) { return needed_[static_cast<std::size_t>(i) * n_levels_ + l]; }
  std::uint8_t needed(int i, int l) const { return needed_[static_cast<std::size_t>(i) * n_levels_ + l]; }

  StorageConfig& storage() { return storage_; }
  const StorageConfig& storage() const { return storage_; }

  /// Level used by link i->j, or -1 when the one-hot row is malformed.
  int exploited_level(int i, int j) const;

  std::vector<std::uint8_t>& exploit_data() { return exploit_; }
  const std::vector<std::uint8_t>& exploit_data() const { return exploit_; }
  std::vector<std::uint8_t>& tx_to_tx_data() { return tx_to_tx_; }
  const std::vector<std::uint8_t>& tx_to_tx_data() const { return tx_to_tx_; }
  std::vector<std::uint8_t>& tx_to_rx_data() { return tx_to_rx_; }
  const std::vector<std::uint8_t>& tx_to_rx_data() const { return tx_to_rx_; }
  std::vector<std::uint8_t>& needed_data() { return needed_; }
  const std::vector<std::uint8_t>& needed_data() const { return needed_; }

  bool operator==(const AllocationPolicy&) const = default;

 private:
  std::size_t link(int i, int j) const { return static_cast<std::size_t>(i) * n_agents_ + j; }
  std::size_t sourced(int h, int i, int j, int l) const {
    return ((static_cast<std::size_t>(h) * n_agents_ + i) * n_agents_ + j) * n_levels_ + l;
  }

  int n_agents_ = 0;
  int n_levels_ = 0;
  std::vector<std::uint8_t> exploit_;
  StorageConfig storage_;
  std::vector<std::uint8_t> tx_to_tx_;
  std::vector<std::uint8_t> tx_to_rx_;
  std::vector<std::uint8_t> needed_;
};

struct MetricsReport {
  double align_loss = 0.0;
  double tx_overhead = 0.0;
  double storage_cost = 0.0;
  double network_loss = 0.0;
  bool feasible = true;

  static MetricsReport infeasible();
  MetricsReport& operator+=(const MetricsReport& other);
};

/// eta_A * L_A + eta_T * O_T + eta_S * C_S.
double weighted_loss(const Weights& weights, double align, double transmit, double storage);

struct SolveResult {
  std::string solver;
  // One policy per solved task, ascending task index.
  std::vector<int> tasks;
  std::vector<AllocationPolicy> policies;
  MetricsReport metrics;
  long iterations = 0;
  long evaluations = 0;
  double wall_time_s = 0.0;
  // Accepted objective values in order (greedy only).
  std::vector<double> trace;
};

/// Raised when an exhaustive search would exceed its configured bit budget.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when input files disagree on dimensions.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dkalloc
