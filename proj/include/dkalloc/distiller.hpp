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

// Nested multi-level low-rank distillation.
//
// Each layer delta P_m (I_m x O_m) is approximated by left_m * right_m with
// left_m of shape I_m x r_L and right_m of shape r_L x O_m. Level l uses the
// first r_l columns of left_m and the first r_l rows of right_m, so lower
// levels are literally sub-blocks of higher ones. Training alternates
// between levels chosen uniformly at random, taking one gradient step on the
// squared Frobenius residual of the sampled level per iteration.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkalloc {

using Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct LayerShape {
  Index input_dim = 0;
  Index output_dim = 0;

  bool operator==(const LayerShape&) const = default;
};

struct LevelSchema {
  std::vector<Index> ranks;
  std::vector<double> target_prs;

  int levels() const { return static_cast<int>(ranks.size()); }
  Index top_rank() const { return ranks.empty() ? 0 : ranks.back(); }
};

struct DistillConfig {
  double step_size = 5e-4;
  // Total iterations = sweeps_per_level * L.
  long sweeps_per_level = 100;
  std::uint64_t seed = 0;
  // Synthetic targets: sigma_i = spectrum_scale * spectrum_decay^i.
  double spectrum_decay = 0.7;
  double spectrum_scale = 10.0;

  long iterations(int levels) const { return sweeps_per_level * levels; }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

void validate(const DistillConfig& config);
void validate(const LevelSchema& schema, std::span<const LayerShape> shapes);

/// sum_m r (I_m + O_m) / (I_m O_m). Throws on an empty shape list.
double parameter_ratio(std::span<const LayerShape> shapes, Index rank);

/// Smallest rank reaching each target ratio, bumped to keep ranks strictly
/// increasing. Throws when a target needs a rank above min(I_m, O_m).
LevelSchema build_schema(std::span<const LayerShape> shapes, std::span<const double> target_prs);

/// Parameter count of each differential chunk: (r_l - r_{l-1}) sum_m (I_m + O_m).
std::vector<double> chunk_sizes(const LevelSchema& schema, std::span<const LayerShape> shapes);

/// Running minimum, making the table nonincreasing in level.
std::vector<double> export_alignment_table(std::span<const double> raw);

template <typename Scalar = double>
struct DistillTarget {
  std::vector<DenseMatrix<Scalar>> deltas;

  std::vector<LayerShape> shapes() const {
    std::vector<LayerShape> out;
    out.reserve(deltas.size());
    for (const auto& d : deltas) out.push_back({d.rows(), d.cols()});
    return out;
  }

  Scalar squared_norm() const {
    Scalar total(0);
    for (const auto& d : deltas) total += d.squaredNorm();
    return total;
  }
};

template <typename Scalar = double>
class NestedFactors {
 public:
  NestedFactors() = default;
  NestedFactors(std::span<const LayerShape> shapes, LevelSchema schema) : schema_(std::move(schema)) {
    const Index r = schema_.top_rank();
    for (const auto& s : shapes) {
      left_.push_back(DenseMatrix<Scalar>::Zero(s.input_dim, r));
      right_.push_back(DenseMatrix<Scalar>::Zero(r, s.output_dim));
    }
  }

  int layers() const { return static_cast<int>(left_.size()); }
  const LevelSchema& schema() const { return schema_; }

  DenseMatrix<Scalar>& left(int m) { return left_[m]; }
  const DenseMatrix<Scalar>& left(int m) const { return left_[m]; }
  DenseMatrix<Scalar>& right(int m) { return right_[m]; }
  const DenseMatrix<Scalar>& right(int m) const { return right_[m]; }

  /// Level-l views: leading columns of left, leading rows of right.
  auto left(int m, int level) { return left_[m].leftCols(schema_.ranks[level]); }
  auto left(int m, int level) const { return left_[m].leftCols(schema_.ranks[level]); }
  auto right(int m, int level) { return right_[m].topRows(schema_.ranks[level]); }
  auto right(int m, int level) const { return right_[m].topRows(schema_.ranks[level]); }

  DenseMatrix<Scalar> product(int m, int level) const { return left(m, level) * right(m, level); }

  std::vector<LayerShape> shapes() const {
    std::vector<LayerShape> out;
    for (int m = 0; m < layers(); ++m) out.push_back({left_[m].rows(), right_[m].cols()});
    return out;
  }

  bool all_finite() const {
    for (int m = 0; m < layers(); ++m)
      if (!left_[m].allFinite() || !right_[m].allFinite()) return false;
    return true;
  }

 private:
  LevelSchema schema_;
  std::vector<DenseMatrix<Scalar>> left_;
  std::vector<DenseMatrix<Scalar>> right_;
};

template <typename Scalar>
struct LevelGradient {
  std::vector<DenseMatrix<Scalar>> left;   // I_m x r_l
  std::vector<DenseMatrix<Scalar>> right;  // r_l x O_m
};

template <typename Scalar>
struct DistillResult {
  NestedFactors<Scalar> factors;
  std::vector<double> raw_loss;
  long iterations = 0;
};

/// Called after every update with the 1-based iteration, the sampled level
/// and the current factors.
template <typename Scalar>
using DistillObserver = std::function<void(long, int, const NestedFactors<Scalar>&)>;

/// Squared Frobenius residual of level l summed over layers.
template <typename Scalar>
Scalar level_loss(const NestedFactors<Scalar>& factors, const DistillTarget<Scalar>& target, int level) {
  Scalar total(0);
  for (int m = 0; m < factors.layers(); ++m) {
    total += (factors.left(m, level) * factors.right(m, level) - target.deltas[m]).squaredNorm();
  }
  return total;
}

/// Exact gradient of level_loss with respect to the level-l sub-blocks.
template <typename Scalar>
LevelGradient<Scalar> level_gradient(const NestedFactors<Scalar>& factors, const DistillTarget<Scalar>& target,
                                     int level) {
  LevelGradient<Scalar> g;
  for (int m = 0; m < factors.layers(); ++m) {
    const auto left = factors.left(m, level);
    const auto right = factors.right(m, level);
    const DenseMatrix<Scalar> residual = left * right - target.deltas[m];
    g.left.push_back(Scalar(2) * residual * right.transpose());
    g.right.push_back(Scalar(2) * left.transpose() * residual);
  }
  return g;
}

/// Eckart-Young floor: sum over layers of the squared singular values past
/// the leading `rank`. rank = 0 gives the squared norm of the target.
template <typename Scalar>
Scalar svd_oracle(const DistillTarget<Scalar>& target, Index rank) {
  Scalar total(0);
  for (const auto& d : target.deltas) {
    if (rank > std::min(d.rows(), d.cols())) throw std::invalid_argument("svd_oracle: rank exceeds layer dims");
    Eigen::BDCSVD<DenseMatrix<Scalar>> svd(d);
    const auto& sigma = svd.singularValues();
    for (Index i = rank; i < sigma.size(); ++i) total += sigma(i) * sigma(i);
  }
  return total;
}

namespace detail {

inline std::mt19937_64 distill_stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose};
  return std::mt19937_64(seq);
}

inline constexpr std::uint32_t kInitStream = 0x696e6974;
inline constexpr std::uint32_t kLevelStream = 0x6c766c73;
inline constexpr std::uint32_t kTargetStream = 0x74677420;

template <typename Scalar>
DenseMatrix<Scalar> gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix<Scalar> out(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) out(r, c) = static_cast<Scalar>(gauss(rng));
  return out;
}

}  // namespace detail

/// Left factors ~ N(0, 1/I_m), right factors zero, so the initial level loss
/// equals the squared norm of the target at every level.
template <typename Scalar = double>
NestedFactors<Scalar> init_factors(std::span<const LayerShape> shapes, const LevelSchema& schema,
                                   std::uint64_t seed) {
  NestedFactors<Scalar> factors(shapes, schema);
  std::mt19937_64 rng = detail::distill_stream(seed, detail::kInitStream);
  for (int m = 0; m < factors.layers(); ++m) {
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(shapes[m].input_dim));
    factors.left(m) = detail::gaussian<Scalar>(shapes[m].input_dim, schema.top_rank(), rng) * scale;
  }
  return factors;
}

/// Target with singular values scale * decay^i (i = 1..min(I, O)) and
/// random orthogonal singular vectors.
template <typename Scalar = double>
DistillTarget<Scalar> synthetic_target(std::span<const LayerShape> shapes, const DistillConfig& config) {
  std::mt19937_64 rng = detail::distill_stream(config.seed, detail::kTargetStream);
  DistillTarget<Scalar> target;
  for (const auto& s : shapes) {
    const Index p = std::min(s.input_dim, s.output_dim);
    const DenseMatrix<Scalar> u =
        Eigen::HouseholderQR<DenseMatrix<Scalar>>(detail::gaussian<Scalar>(s.input_dim, s.input_dim, rng))
            .householderQ() *
        DenseMatrix<Scalar>::Identity(s.input_dim, p);
    const DenseMatrix<Scalar> v =
        Eigen::HouseholderQR<DenseMatrix<Scalar>>(detail::gaussian<Scalar>(s.output_dim, s.output_dim, rng))
            .householderQ() *
        DenseMatrix<Scalar>::Identity(s.output_dim, p);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sigma(p);
    for (Index i = 0; i < p; ++i) {
      sigma(i) = static_cast<Scalar>(config.spectrum_scale * std::pow(config.spectrum_decay, double(i + 1)));
    }
    target.deltas.push_back(u * sigma.asDiagonal() * v.transpose());
  }
  return target;
}

/// Alternating multi-level gradient descent. Throws DivergenceError when a
/// loss or parameter becomes non-finite.
template <typename Scalar = double>
DistillResult<Scalar> distill(const DistillTarget<Scalar>& target, const LevelSchema& schema,
                              const DistillConfig& config, const DistillObserver<Scalar>& observer = {}) {
  validate(config);
  const std::vector<LayerShape> shapes = target.shapes();
  validate(schema, shapes);

  DistillResult<Scalar> result;
  result.factors = init_factors<Scalar>(shapes, schema, config.seed);
  NestedFactors<Scalar>& factors = result.factors;

  std::mt19937_64 rng = detail::distill_stream(config.seed, detail::kLevelStream);
  std::uniform_int_distribution<int> pick(0, schema.levels() - 1);
  const Scalar step = static_cast<Scalar>(config.step_size);
  const long total = config.iterations(schema.levels());

  for (long t = 1; t <= total; ++t) {
    const int level = pick(rng);
    Scalar loss(0);
    for (int m = 0; m < factors.layers(); ++m) {
      auto left = factors.left(m, level);
      auto right = factors.right(m, level);
      const DenseMatrix<Scalar> residual = left * right - target.deltas[m];
      loss += residual.squaredNorm();
      const DenseMatrix<Scalar> grad_left = Scalar(2) * residual * right.transpose();
      const DenseMatrix<Scalar> grad_right = Scalar(2) * left.transpose() * residual;
      left -= step * grad_left;
      right -= step * grad_right;
    }
    if (!std::isfinite(static_cast<double>(loss)) || !factors.all_finite()) {
      throw DivergenceError(t, "distillation diverged at iteration " + std::to_string(t) + " (level " +
                                   std::to_string(level) + ")");
    }
    if (observer) observer(t, level, factors);
  }

  result.iterations = total;
  for (int l = 0; l < schema.levels(); ++l) {
    result.raw_loss.push_back(static_cast<double>(level_loss(factors, target, l)));
  }
  return result;
}

}  // namespace dkalloc
