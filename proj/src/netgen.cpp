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

#include "dkalloc/netgen.hpp"

#include <cmath>

namespace dkalloc {

void validate(const GenConfig& config) {
  if (config.n_agents < 2) throw std::invalid_argument("n_agents must be at least 2");
  if (config.n_tasks < 1) throw std::invalid_argument("n_tasks must be at least 1");
  if (config.n_levels < 1) throw std::invalid_argument("n_levels must be at least 1");
  if (config.align_mode == AlignTableMode::kSyntheticDecay) {
    if (!(config.decay > 0.0 && config.decay < 1.0)) throw std::invalid_argument("decay must lie in (0, 1)");
    if (!(config.base_loss_min > 0.0 && config.base_loss_min <= config.base_loss_max &&
          std::isfinite(config.base_loss_max))) {
      throw std::invalid_argument("base loss range must satisfy 0 < min <= max");
    }
  } else {
    if (!config.align_table) throw std::invalid_argument("distiller-fed mode requires an alignment table");
    const Eigen::MatrixXd& t = *config.align_table;
    if (t.cols() != config.n_levels || (t.rows() != 1 && t.rows() != config.n_tasks)) {
      throw std::invalid_argument("alignment table must be 1 x L or K x L");
    }
    for (Eigen::Index k = 0; k < t.rows(); ++k) {
      for (Eigen::Index l = 0; l < t.cols(); ++l) {
        if (!(std::isfinite(t(k, l)) && t(k, l) >= 0.0)) {
          throw std::invalid_argument("alignment table entries must be finite and nonnegative");
        }
        if (l > 0 && t(k, l) > t(k, l - 1)) throw std::invalid_argument("alignment table must be nonincreasing");
      }
    }
  }
  const Weights& w = config.weights;
  for (double v : {w.align, w.transmit, w.storage}) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("weights must lie in [0, 1]");
  }
}

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), salt};
  return std::mt19937_64(seq);
}

Eigen::VectorXd decay_table(double base, double decay, int levels) {
  Eigen::VectorXd out(levels);
  double factor = decay;
  for (int l = 0; l < levels; ++l) {
    out(l) = base * factor;
    factor *= decay;
  }
  return out;
}

Eigen::VectorXd synth_alignment_table(const GenConfig& config, int task) {
  validate(config);
  std::mt19937_64 rng = substream(config.seed, Stream::kAlign, static_cast<std::uint32_t>(task));
  std::uniform_real_distribution<double> base(config.base_loss_min, config.base_loss_max);
  const double a = config.base_loss_min == config.base_loss_max ? config.base_loss_min : base(rng);
  return decay_table(a, config.decay, config.n_levels);
}

NetworkInstance generate_instance(const GenConfig& config) {
  validate(config);
  const int n = config.n_agents;
  NetworkInstance inst;
  inst.n_agents = n;
  inst.n_tasks = config.n_tasks;
  inst.n_levels = config.n_levels;
  inst.weights = config.weights;
  inst.seed = config.seed;

  std::mt19937_64 freq_rng = substream(config.seed, Stream::kFreq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  inst.freq.assign(config.n_tasks, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < config.n_tasks; ++k) {
      Eigen::MatrixXd& f = inst.freq[k];
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        // Strictly positive draw keeps the normalization well defined.
        double u = 0.0;
        while (u == 0.0) u = unit(freq_rng);
        f(i, j) = u;
        sum += u;
      }
      for (int j = 0; j < n; ++j) f(i, j) /= sum;
    }
  }

  std::mt19937_64 rate_rng = substream(config.seed, Stream::kRate);
  std::normal_distribution<double> gauss(0.0, 1.0);
  inst.rate = Eigen::MatrixXd::Ones(n, n);
  for (int h = 0; h < n; ++h) {
    for (int i = 0; i < n; ++i) {
      if (h != i) inst.rate(h, i) = std::exp(gauss(rate_rng));
    }
  }

  inst.chunk_size = Eigen::MatrixXd::Ones(config.n_tasks, config.n_levels);
  inst.align_loss.resize(config.n_tasks, config.n_levels);
  for (int k = 0; k < config.n_tasks; ++k) {
    if (config.align_mode == AlignTableMode::kSyntheticDecay) {
      inst.align_loss.row(k) = synth_alignment_table(config, k).transpose();
    } else {
      const Eigen::MatrixXd& t = *config.align_table;
      inst.align_loss.row(k) = t.row(t.rows() == 1 ? 0 : k);
    }
  }
  return inst;
}

}  // namespace dkalloc
