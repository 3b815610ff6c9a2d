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

#include "dkalloc/distiller.hpp"

#include <limits>

namespace dkalloc {

namespace {

Index rank_bound(std::span<const LayerShape> shapes) {
  Index bound = std::numeric_limits<Index>::max();
  for (const auto& s : shapes) bound = std::min({bound, s.input_dim, s.output_dim});
  return bound;
}

void require_shapes(std::span<const LayerShape> shapes) {
  if (shapes.empty()) throw std::invalid_argument("at least one layer shape is required");
  for (const auto& s : shapes) {
    if (s.input_dim < 1 || s.output_dim < 1) throw std::invalid_argument("layer dimensions must be positive");
  }
}

}  // namespace

void validate(const DistillConfig& config) {
  if (!(config.step_size > 0.0 && std::isfinite(config.step_size))) {
    throw std::invalid_argument("step_size must be positive");
  }
  if (config.sweeps_per_level < 1) throw std::invalid_argument("sweeps_per_level must be positive");
  if (!(config.spectrum_decay > 0.0 && config.spectrum_decay < 1.0)) {
    throw std::invalid_argument("spectrum_decay must lie in (0, 1)");
  }
}

void validate(const LevelSchema& schema, std::span<const LayerShape> shapes) {
  require_shapes(shapes);
  if (schema.ranks.empty()) throw std::invalid_argument("schema needs at least one level");
  Index prev = 0;
  for (Index r : schema.ranks) {
    if (r <= prev) throw std::invalid_argument("schema ranks must be positive and strictly increasing");
    prev = r;
  }
  if (schema.top_rank() > rank_bound(shapes)) {
    throw std::invalid_argument("top rank " + std::to_string(schema.top_rank()) + " exceeds layer dimensions");
  }
}

double parameter_ratio(std::span<const LayerShape> shapes, Index rank) {
  require_shapes(shapes);
  if (rank < 0) throw std::invalid_argument("rank must be nonnegative");
  double ratio = 0.0;
  for (const auto& s : shapes) {
    ratio += static_cast<double>(rank) * static_cast<double>(s.input_dim + s.output_dim) /
             (static_cast<double>(s.input_dim) * static_cast<double>(s.output_dim));
  }
  return ratio;
}

LevelSchema build_schema(std::span<const LayerShape> shapes, std::span<const double> target_prs) {
  require_shapes(shapes);
  if (target_prs.empty()) throw std::invalid_argument("at least one target ratio is required");
  const Index bound = rank_bound(shapes);
  LevelSchema schema;
  double prev_target = 0.0;
  for (double target : target_prs) {
    if (!(target > prev_target)) throw std::invalid_argument("target ratios must be positive and strictly increasing");
    prev_target = target;
    Index rank = 1;
    while (rank <= bound && parameter_ratio(shapes, rank) < target * (1.0 - 1e-12)) ++rank;
    if (!schema.ranks.empty()) rank = std::max(rank, schema.ranks.back() + 1);
    if (rank > bound) {
      throw std::invalid_argument("target ratio " + std::to_string(target) + " unreachable within rank bound " +
                                  std::to_string(bound));
    }
    schema.ranks.push_back(rank);
    schema.target_prs.push_back(target);
  }
  return schema;
}

std::vector<double> chunk_sizes(const LevelSchema& schema, std::span<const LayerShape> shapes) {
  validate(schema, shapes);
  double per_rank = 0.0;
  for (const auto& s : shapes) per_rank += static_cast<double>(s.input_dim + s.output_dim);
  std::vector<double> out;
  Index prev = 0;
  for (Index r : schema.ranks) {
    out.push_back(static_cast<double>(r - prev) * per_rank);
    prev = r;
  }
  return out;
}

std::vector<double> export_alignment_table(std::span<const double> raw) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (double v : raw) {
    if (!(std::isfinite(v) && v >= 0.0)) throw std::invalid_argument("alignment losses must be finite and nonnegative");
    out.push_back(out.empty() ? v : std::min(out.back(), v));
  }
  return out;
}

}  // namespace dkalloc
