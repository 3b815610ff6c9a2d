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

#include "dkalloc/core.hpp"

#include <cmath>
#include <sstream>

namespace dkalloc {

std::string Violation::message() const {
  std::ostringstream out;
  out << field;
  if (!index.empty()) {
    out << '[';
    for (std::size_t n = 0; n < index.size(); ++n) out << (n ? "][" : "") << index[n];
    out << ']';
  }
  out << ": " << rule;
  return out.str();
}

namespace {

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(12);
  out << value;
  return out.str();
}

bool has_shape(const Eigen::MatrixXd& m, int rows, int cols) {
  return m.rows() == rows && m.cols() == cols;
}

}  // namespace

std::vector<Violation> validate_instance(const NetworkInstance& instance) {
  std::vector<Violation> out;
  const int n = instance.n_agents;
  const int n_tasks = instance.n_tasks;
  const int n_levels = instance.n_levels;

  if (n < 2) out.push_back({"n_agents", {}, "must be at least 2"});
  if (n_tasks < 1) out.push_back({"n_tasks", {}, "must be at least 1"});
  if (n_levels < 1) out.push_back({"n_levels", {}, "must be at least 1"});
  if (!out.empty()) return out;

  bool shapes_ok = true;
  if (static_cast<int>(instance.freq.size()) != n_tasks) {
    out.push_back({"freq", {}, "expected " + std::to_string(n_tasks) + " task slices"});
    shapes_ok = false;
  } else {
    for (int k = 0; k < n_tasks; ++k) {
      if (!has_shape(instance.freq[k], n, n)) {
        out.push_back({"freq", {k}, "task slice must be n_agents x n_agents"});
        shapes_ok = false;
      }
    }
  }
  if (!has_shape(instance.rate, n, n)) {
    out.push_back({"rate", {}, "must be n_agents x n_agents"});
    shapes_ok = false;
  }
  if (!has_shape(instance.chunk_size, n_tasks, n_levels)) {
    out.push_back({"chunk_size", {}, "must be n_tasks x n_levels"});
    shapes_ok = false;
  }
  if (!has_shape(instance.align_loss, n_tasks, n_levels)) {
    out.push_back({"align_loss", {}, "must be n_tasks x n_levels"});
    shapes_ok = false;
  }
  if (!shapes_ok) return out;

  for (int k = 0; k < n_tasks; ++k) {
    const Eigen::MatrixXd& f = instance.freq[k];
    for (int i = 0; i < n; ++i) {
      if (f(i, i) != 0.0) out.push_back({"freq", {i, i, k}, "self-link frequency must be 0"});
      double row_sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        if (!(std::isfinite(f(i, j)) && f(i, j) >= 0.0)) {
          out.push_back({"freq", {i, j, k}, "must be finite and nonnegative"});
        }
        row_sum += f(i, j);
      }
      if (!(std::abs(row_sum - 1.0) <= kFreqRowTolerance)) {
        out.push_back({"freq", {i, k},
                       "freq row (" + std::to_string(i) + "," + std::to_string(k) + ") sums to " +
                           format_double(row_sum)});
      }
    }
  }

  for (int h = 0; h < n; ++h) {
    for (int i = 0; i < n; ++i) {
      if (h == i) continue;
      const double r = instance.rate(h, i);
      if (!(r > 0.0) || std::isnan(r)) out.push_back({"rate", {h, i}, "must be positive"});
    }
  }

  for (int k = 0; k < n_tasks; ++k) {
    for (int l = 0; l < n_levels; ++l) {
      const double s = instance.chunk_size(k, l);
      if (!(s > 0.0 && std::isfinite(s))) {
        out.push_back({"chunk_size", {k, l}, "must be positive and finite"});
      }
      const double a = instance.align_loss(k, l);
      if (!(std::isfinite(a) && a >= 0.0)) {
        out.push_back({"align_loss", {k, l}, "must be finite and nonnegative"});
      }
      if (l > 0 && instance.align_loss(k, l) > instance.align_loss(k, l - 1)) {
        out.push_back({"align_loss", {k, l}, "must be nonincreasing in level"});
      }
    }
  }

  const auto check_weight = [&](const char* name, double w) {
    if (!(w >= 0.0 && w <= 1.0)) out.push_back({std::string("weights.") + name, {}, "must lie in [0, 1]"});
  };
  check_weight("eta_a", instance.weights.align);
  check_weight("eta_t", instance.weights.transmit);
  check_weight("eta_s", instance.weights.storage);
  return out;
}

double transmission_time(const NetworkInstance& instance, int h, int i, int k, int l) {
  if (h < 0 || h >= instance.n_agents || i < 0 || i >= instance.n_agents) {
    throw std::out_of_range("transmission_time: agent index out of range");
  }
  if (k < 0 || k >= instance.n_tasks || l < 0 || l >= instance.n_levels) {
    throw std::out_of_range("transmission_time: task or level index out of range");
  }
  if (h == i) return 0.0;
  return instance.chunk_size(k, l) / instance.rate(h, i);
}

StorageConfig::StorageConfig(int n_agents, int n_levels, bool value)
    : n_agents_(n_agents),
      n_levels_(n_levels),
      bits_(static_cast<std::size_t>(n_agents) * n_levels, value ? 1 : 0) {}

StorageConfig StorageConfig::from_mask(int n_agents, int n_levels, std::uint64_t mask) {
  StorageConfig out(n_agents, n_levels);
  for (std::size_t b = 0; b < out.bits_.size(); ++b) out.bits_[b] = (mask >> b) & 1u;
  return out;
}

std::uint32_t StorageConfig::row(int i) const {
  std::uint32_t r = 0;
  for (int l = 0; l < n_levels_; ++l) r |= static_cast<std::uint32_t>(bits_[index(i, l)]) << l;
  return r;
}

void StorageConfig::set_row(int i, std::uint32_t row) {
  for (int l = 0; l < n_levels_; ++l) bits_[index(i, l)] = (row >> l) & 1u;
}

std::uint64_t StorageConfig::to_mask() const {
  if (bits_.size() > 64) throw std::length_error("StorageConfig::to_mask: more than 64 bits");
  std::uint64_t mask = 0;
  for (std::size_t b = 0; b < bits_.size(); ++b) mask |= static_cast<std::uint64_t>(bits_[b] & 1u) << b;
  return mask;
}

int StorageConfig::count() const {
  int c = 0;
  for (auto b : bits_) c += b != 0;
  return c;
}

AllocationPolicy::AllocationPolicy(int n_agents, int n_levels)
    : n_agents_(n_agents),
      n_levels_(n_levels),
      exploit_(static_cast<std::size_t>(n_agents) * n_agents * n_levels, 0),
      storage_(n_agents, n_levels),
      tx_to_tx_(static_cast<std::size_t>(n_agents) * n_agents * n_agents * n_levels, 0),
      tx_to_rx_(tx_to_tx_.size(), 0),
      needed_(static_cast<std::size_t>(n_agents) * n_levels, 0) {}

int AllocationPolicy::exploited_level(int i, int j) const {
  int level = -1;
  for (int l = 0; l < n_levels_; ++l) {
    const auto v = exploit(i, j, l);
    if (v > 1) return -1;
    if (v == 1) {
      if (level >= 0) return -1;
      level = l;
    }
  }
  return level;
}

MetricsReport MetricsReport::infeasible() {
  MetricsReport m;
  m.network_loss = kInfinity;
  m.feasible = false;
  return m;
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& other) {
  align_loss += other.align_loss;
  tx_overhead += other.tx_overhead;
  storage_cost += other.storage_cost;
  network_loss += other.network_loss;
  feasible = feasible && other.feasible;
  if (!feasible) network_loss = kInfinity;
  return *this;
}

double weighted_loss(const Weights& weights, double align, double transmit, double storage) {
  return weights.align * align + weights.transmit * transmit + weights.storage * storage;
}

}  // namespace dkalloc
