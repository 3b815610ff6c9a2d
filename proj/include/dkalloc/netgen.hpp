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
#include <random>

#include "dkalloc/core.hpp"

namespace dkalloc {

enum class AlignTableMode { kSyntheticDecay, kDistillerFed };

/// Random-network generator settings.
///
/// SC frequencies are uniform and normalized per (Tx, task), link rates are
/// log-normal(0, 1) per ordered pair and every chunk has unit size.
struct GenConfig {
  int n_agents = 3;
  int n_tasks = 4;
  int n_levels = 5;
  std::uint64_t seed = 0;
  AlignTableMode align_mode = AlignTableMode::kSyntheticDecay;
  // J_A[k][l] = a_k * decay^(l + 1), a_k ~ U[base_loss_min, base_loss_max].
  double base_loss_min = 0.5;
  double base_loss_max = 1.0;
  double decay = 0.6;
  Weights weights;
  // Distiller-fed mode: one row per task, or a single row shared by all.
  std::optional<Eigen::MatrixXd> align_table;
};

/// Throws std::invalid_argument on a bad configuration.
void validate(const GenConfig& config);

/// Independent generator streams, so adding a field never perturbs others.
enum class Stream : std::uint32_t { kFreq = 1, kRate = 2, kAlign = 3 };

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::uint32_t salt = 0);

NetworkInstance generate_instance(const GenConfig& config);

/// Synthetic alignment-loss row of task k (strictly decreasing).
Eigen::VectorXd synth_alignment_table(const GenConfig& config, int task);

/// a * b^(l + 1) for l = 0..levels-1.
Eigen::VectorXd decay_table(double base, double decay, int levels);

}  // namespace dkalloc
