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

#include "dkalloc/allocation.hpp"

#include <cmath>
#include <string>

namespace dkalloc {

namespace {

void require_shape(const NetworkInstance& instance, const AllocationPolicy& policy, int task) {
  if (policy.n_agents() != instance.n_agents || policy.n_levels() != instance.n_levels ||
      policy.storage().n_agents() != instance.n_agents || policy.storage().n_levels() != instance.n_levels) {
    throw DimensionError("policy is " + std::to_string(policy.n_agents()) + " agents x " +
                         std::to_string(policy.n_levels()) + " levels, instance is " +
                         std::to_string(instance.n_agents) + " x " + std::to_string(instance.n_levels));
  }
  if (task < 0 || task >= instance.n_tasks) throw std::out_of_range("task index out of range");
}

}  // namespace

double alignment_loss(const NetworkInstance& instance, const AllocationPolicy& policy, int task) {
  require_shape(instance, policy, task);
  const Eigen::MatrixXd& freq = instance.freq[task];
  double total = 0.0;
  for (int i = 0; i < instance.n_agents; ++i) {
    for (int j = 0; j < instance.n_agents; ++j) {
      if (j == i) continue;
      if (policy.exploited_level(i, j) < 0) {
        throw std::invalid_argument("exploitation row of link " + std::to_string(i) + "->" + std::to_string(j) +
                                    " is not one-hot");
      }
      for (int l = 0; l < instance.n_levels; ++l) {
        if (policy.exploit(i, j, l)) total += freq(i, j) * instance.align_loss(task, l);
      }
    }
  }
  return total;
}

double transmission_overhead(const NetworkInstance& instance, const AllocationPolicy& policy, int task) {
  require_shape(instance, policy, task);
  const int n = instance.n_agents;
  const Eigen::MatrixXd& freq = instance.freq[task];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double per_link = 0.0;
      for (int l = 0; l < instance.n_levels; ++l) {
        double to_tx = 0.0;
        double to_rx = 0.0;
        for (int h = 0; h < n; ++h) {
          if (policy.tx_to_tx(h, i, j, l)) to_tx += transmission_time(instance, h, i, task, l);
          if (policy.tx_to_rx(h, i, j, l)) to_rx += transmission_time(instance, h, j, task, l);
        }
        per_link += to_tx + to_rx;
      }
      total += freq(i, j) * per_link;
    }
  }
  return total;
}

double storage_cost(const NetworkInstance& instance, const StorageConfig& storage, int task) {
  if (storage.n_agents() != instance.n_agents || storage.n_levels() != instance.n_levels) {
    throw DimensionError("storage config does not match instance dimensions");
  }
  double total = 0.0;
  for (int i = 0; i < instance.n_agents; ++i) {
    for (int l = 0; l < instance.n_levels; ++l) {
      if (storage(i, l)) total += instance.chunk_size(task, l);
    }
  }
  return total;
}

MetricsReport network_loss(const NetworkInstance& instance, std::span<const AllocationPolicy> policies,
                           std::span<const int> tasks) {
  if (!tasks.empty() && tasks.size() != policies.size()) {
    throw std::invalid_argument("network_loss: tasks and policies differ in length");
  }
  MetricsReport report;
  for (std::size_t n = 0; n < policies.size(); ++n) {
    const int task = tasks.empty() ? static_cast<int>(n) : tasks[n];
    const AllocationPolicy& policy = policies[n];
    if (!check_constraints(instance, policy, task).empty()) return MetricsReport::infeasible();
    report.align_loss += alignment_loss(instance, policy, task);
    report.tx_overhead += transmission_overhead(instance, policy, task);
    report.storage_cost += storage_cost(instance, policy.storage(), task);
  }
  report.network_loss =
      weighted_loss(instance.weights, report.align_loss, report.tx_overhead, report.storage_cost);
  return report;
}

std::vector<Violation> check_constraints(const NetworkInstance& instance, const AllocationPolicy& policy,
                                         int task) {
  require_shape(instance, policy, task);
  const int n = instance.n_agents;
  const int levels = instance.n_levels;
  const StorageConfig& s = policy.storage();
  std::vector<Violation> out;

  const auto binary = [&](const char* field, const std::vector<std::uint8_t>& data) {
    for (std::size_t b = 0; b < data.size(); ++b) {
      if (data[b] > 1) {
        out.push_back({field, {static_cast<int>(b)}, "binary: value must be 0 or 1"});
        return;
      }
    }
  };
  binary("exploit", policy.exploit_data());
  binary("store", s.data());
  binary("tx_to_tx", policy.tx_to_tx_data());
  binary("tx_to_rx", policy.tx_to_rx_data());
  binary("needed", policy.needed_data());
  if (!out.empty()) return out;

  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < levels; ++l) {
      if (policy.exploit(i, i, l)) out.push_back({"exploit", {i, i, l}, "unused: self-links carry no traffic"});
      for (int h = 0; h < n; ++h) {
        if (policy.tx_to_tx(h, i, i, l) || policy.tx_to_rx(h, i, i, l)) {
          out.push_back({"tx_to_tx/tx_to_rx", {h, i, i, l}, "unused: self-links carry no traffic"});
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      int ones = 0;
      for (int l = 0; l < levels; ++l) ones += policy.exploit(i, j, l);
      if (ones != 1) {
        out.push_back({"exploit", {i, j},
                       "one-level-per-link: link exploits " + std::to_string(ones) + " levels, expected exactly 1"});
      }

      for (int l = 0; l < levels; ++l) {
        int to_tx = 0;
        int to_rx = 0;
        for (int h = 0; h < n; ++h) {
          to_tx += policy.tx_to_tx(h, i, j, l);
          to_rx += policy.tx_to_rx(h, i, j, l);
          if (policy.tx_to_tx(h, i, j, l) > static_cast<int>(s(h, l))) {
            out.push_back({"tx_to_tx", {h, i, j, l}, "source-must-store: sender does not store the chunk"});
          }
          if (policy.tx_to_rx(h, i, j, l) > static_cast<int>(s(h, l))) {
            out.push_back({"tx_to_rx", {h, i, j, l}, "source-must-store: sender does not store the chunk"});
          }
        }
        if (policy.needed(i, l) > to_tx + static_cast<int>(s(i, l))) {
          out.push_back({"needed", {i, j, l}, "tx-availability: chunk needed by Tx is neither stored nor received"});
        }
        if (policy.needed(j, l) > to_rx + static_cast<int>(s(j, l))) {
          out.push_back({"needed", {i, j, l}, "rx-availability: chunk needed by Rx is neither stored nor received"});
        }
        for (int lp = l; lp < levels; ++lp) {
          if (policy.exploit(i, j, lp) > policy.needed(i, l) || policy.exploit(j, i, lp) > policy.needed(i, l)) {
            out.push_back({"needed", {i, l},
                           "level-nesting: a link at level " + std::to_string(lp) + " needs every lower level"});
            break;
          }
        }
      }
    }
  }
  return out;
}

SourceChoice min_transmission(const NetworkInstance& instance, const StorageConfig& storage, int i, int task,
                              int l) {
  SourceChoice best;
  if (storage(i, l)) {
    best.time = 0.0;
    best.source = i;
    return best;
  }
  for (int h = 0; h < instance.n_agents; ++h) {
    if (!storage(h, l)) continue;
    const double t = transmission_time(instance, h, i, task, l);
    if (t < best.time) {
      best.time = t;
      best.source = h;
    }
  }
  return best;
}

Prop1Evaluator::Prop1Evaluator(const NetworkInstance& instance, int task)
    : instance_(&instance),
      task_(task),
      n_(instance.n_agents),
      levels_(instance.n_levels),
      min_time_(n_, levels_),
      prefix_(n_, levels_),
      source_(n_, levels_),
      link_level_(n_, n_),
      top_need_(n_) {
  if (task < 0 || task >= instance.n_tasks) throw std::out_of_range("task index out of range");
  times_.reserve(levels_);
  for (int l = 0; l < levels_; ++l) {
    Eigen::MatrixXd t(n_, n_);
    for (int h = 0; h < n_; ++h)
      for (int i = 0; i < n_; ++i) t(h, i) = transmission_time(instance, h, i, task, l);
    times_.push_back(std::move(t));
  }
}

MetricsReport Prop1Evaluator::evaluate(const StorageConfig& storage) {
  const NetworkInstance& inst = *instance_;
  const Weights& w = inst.weights;

  for (int l = 0; l < levels_; ++l) {
    const Eigen::MatrixXd& t = times_[l];
    for (int i = 0; i < n_; ++i) {
      if (storage(i, l)) {
        min_time_(i, l) = 0.0;
        source_(i, l) = i;
        continue;
      }
      double best = kInfinity;
      int src = -1;
      for (int h = 0; h < n_; ++h) {
        if (storage(h, l) && t(h, i) < best) {
          best = t(h, i);
          src = h;
        }
      }
      min_time_(i, l) = best;
      source_(i, l) = src;
    }
  }
  for (int i = 0; i < n_; ++i) {
    double run = 0.0;
    for (int l = 0; l < levels_; ++l) {
      run += min_time_(i, l);
      prefix_(i, l) = run;
    }
  }

  bool feasible = true;
  top_need_.setConstant(-1);
  for (int i = 0; i < n_; ++i) {
    link_level_(i, i) = -1;
    for (int j = 0; j < n_; ++j) {
      if (j == i) continue;
      int best_level = -1;
      double best_cost = kInfinity;
      for (int l = 0; l < levels_; ++l) {
        // A level is usable only if every chunk up to it can reach both ends.
        if (!std::isfinite(prefix_(i, l)) || !std::isfinite(prefix_(j, l))) break;
        const double cost = w.align * inst.align_loss(task_, l) + w.transmit * (prefix_(i, l) + prefix_(j, l));
        if (best_level < 0 || cost < best_cost) {
          best_cost = cost;
          best_level = l;
        }
      }
      link_level_(i, j) = best_level;
      if (best_level < 0) {
        feasible = false;
        continue;
      }
      top_need_(i) = std::max(top_need_(i), best_level);
      top_need_(j) = std::max(top_need_(j), best_level);
    }
  }
  if (!feasible) return MetricsReport::infeasible();

  const Eigen::MatrixXd& freq = inst.freq[task_];
  MetricsReport report;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (j == i) continue;
      report.align_loss += freq(i, j) * inst.align_loss(task_, link_level_(i, j));
    }
  }
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (j == i) continue;
      double per_link = 0.0;
      for (int l = 0; l < levels_; ++l) {
        const double to_tx = l <= top_need_(i) ? min_time_(i, l) : 0.0;
        const double to_rx = l <= top_need_(j) ? min_time_(j, l) : 0.0;
        per_link += to_tx + to_rx;
      }
      report.tx_overhead += freq(i, j) * per_link;
    }
  }
  for (int i = 0; i < n_; ++i) {
    for (int l = 0; l < levels_; ++l) {
      if (storage(i, l)) report.storage_cost += inst.chunk_size(task_, l);
    }
  }
  report.network_loss = weighted_loss(w, report.align_loss, report.tx_overhead, report.storage_cost);
  return report;
}

Prop1Result derive_policies_prop1(const NetworkInstance& instance, const StorageConfig& storage, int task) {
  if (storage.n_agents() != instance.n_agents || storage.n_levels() != instance.n_levels) {
    throw DimensionError("storage config does not match instance dimensions");
  }
  Prop1Evaluator evaluator(instance, task);
  Prop1Result result;
  result.metrics = evaluator.evaluate(storage);
  result.feasible = result.metrics.feasible;
  result.link_level = evaluator.link_level();
  result.min_time = evaluator.min_time();

  const int n = instance.n_agents;
  const int levels = instance.n_levels;
  AllocationPolicy& policy = result.policy;
  policy = AllocationPolicy(n, levels);
  policy.storage() = storage;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && result.link_level(i, j) >= 0) policy.exploit(i, j, result.link_level(i, j)) = 1;
    }
  }
  if (!result.feasible) return result;

  const Eigen::VectorXi& top = evaluator.top_need();
  const Eigen::MatrixXi& source = evaluator.source();
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l <= top(i); ++l) policy.needed(i, l) = 1;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int l = 0; l < levels; ++l) {
        if (policy.needed(i, l)) policy.tx_to_tx(source(i, l), i, j, l) = 1;
        if (policy.needed(j, l)) policy.tx_to_rx(source(j, l), i, j, l) = 1;
      }
    }
  }
  return result;
}

}  // namespace dkalloc
