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

#include <random>

#include "dkalloc/distiller.hpp"
#include "oracles.hpp"

using namespace dkalloc;

namespace {

DistillTarget<double> diag_target() {
  DistillTarget<double> t;
  t.deltas.push_back(Eigen::MatrixXd(Eigen::Vector4d(3.0, 2.0, 1.0, 0.5).asDiagonal()));
  return t;
}

DistillTarget<double> random_target(std::span<const LayerShape> shapes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  DistillTarget<double> t;
  for (const auto& s : shapes) {
    Eigen::MatrixXd d(s.input_dim, s.output_dim);
    for (Index c = 0; c < d.cols(); ++c)
      for (Index r = 0; r < d.rows(); ++r) d(r, c) = g(rng);
    t.deltas.push_back(d);
  }
  return t;
}

NestedFactors<double> random_factors(std::span<const LayerShape> shapes, const LevelSchema& schema,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  NestedFactors<double> f(shapes, schema);
  for (int m = 0; m < f.layers(); ++m) {
    for (Index c = 0; c < f.left(m).cols(); ++c)
      for (Index r = 0; r < f.left(m).rows(); ++r) f.left(m)(r, c) = g(rng);
    for (Index c = 0; c < f.right(m).cols(); ++c)
      for (Index r = 0; r < f.right(m).rows(); ++r) f.right(m)(r, c) = g(rng);
  }
  return f;
}

}  // namespace

TEST_CASE("parameter ratio") {
  const std::vector<LayerShape> big{{100, 100}};
  const std::vector<LayerShape> two{{10, 10}, {10, 10}};
  const std::vector<LayerShape> tall{{8, 4}};
  CHECK(parameter_ratio(big, 1) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(parameter_ratio(two, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(parameter_ratio(tall, 2) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(parameter_ratio(std::vector<LayerShape>{}, 1), std::invalid_argument);
  for (Index r = 1; r < 8; ++r) {
    CHECK(parameter_ratio(tall, r) == doctest::Approx(r * parameter_ratio(tall, 1)).epsilon(1e-12));
    CHECK(parameter_ratio(two, r) == doctest::Approx(2 * parameter_ratio(std::vector<LayerShape>{{10, 10}}, r)));
  }
}

TEST_CASE("schema from target ratios") {
  const std::vector<LayerShape> big{{100, 100}};
  const std::vector<LayerShape> two{{10, 10}, {10, 10}};
  CHECK(build_schema(big, std::vector{0.02, 0.04}).ranks == std::vector<Index>{1, 2});
  CHECK(build_schema(big, std::vector{0.01, 0.02}).ranks == std::vector<Index>{1, 2});
  CHECK(build_schema(two, std::vector{0.4, 0.8}).ranks == std::vector<Index>{1, 2});
  // Smallest qualifying rank, by enumeration.
  for (double target : {0.03, 0.05, 0.5, 1.9}) {
    Index expect = 1;
    while (parameter_ratio(big, expect) < target) ++expect;
    CHECK(build_schema(big, std::vector{target}).ranks.front() == expect);
  }
  CHECK_THROWS_AS(build_schema(two, std::vector{0.4, 5.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_schema(two, std::vector{0.8, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(build_schema(two, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("schema validation") {
  const std::vector<LayerShape> s{{6, 5}};
  CHECK_NOTHROW(validate(LevelSchema{{1, 5}, {}}, s));
  CHECK_THROWS_AS(validate(LevelSchema{{2, 2}, {}}, s), std::invalid_argument);
  CHECK_THROWS_AS(validate(LevelSchema{{0, 2}, {}}, s), std::invalid_argument);
  CHECK_THROWS_AS(validate(LevelSchema{{1, 6}, {}}, s), std::invalid_argument);
  CHECK_THROWS_AS(validate(LevelSchema{{}, {}}, s), std::invalid_argument);
}

TEST_CASE("chunk sizes") {
  const std::vector<LayerShape> big{{100, 100}};
  const std::vector<LayerShape> tall{{8, 4}};
  CHECK(chunk_sizes(LevelSchema{{1, 2}, {}}, big) == std::vector<double>{200, 200});
  CHECK(chunk_sizes(LevelSchema{{1, 3}, {}}, tall) == std::vector<double>{12, 24});

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LayerShape> shapes;
    const int layers = 1 + static_cast<int>(rng() % 4);
    Index bound = 1000;
    for (int m = 0; m < layers; ++m) {
      shapes.push_back({2 + static_cast<Index>(rng() % 30), 2 + static_cast<Index>(rng() % 30)});
      bound = std::min({bound, shapes.back().input_dim, shapes.back().output_dim});
    }
    LevelSchema schema;
    for (Index r = 1; r <= bound; ++r)
      if (rng() % 2 || r == bound) schema.ranks.push_back(r);
    double full = 0.0;
    for (const auto& s : shapes) full += static_cast<double>(schema.top_rank() * (s.input_dim + s.output_dim));
    double total = 0.0;
    for (double v : chunk_sizes(schema, shapes)) total += v;
    CHECK(total == full);
  }
}

TEST_CASE("alignment table export") {
  CHECK(export_alignment_table(std::vector{5.0, 2.0, 2.1}) == std::vector{5.0, 2.0, 2.0});
  CHECK(export_alignment_table(std::vector{3.0, 2.0, 1.0}) == std::vector{3.0, 2.0, 1.0});
  CHECK(export_alignment_table(std::vector{4.0, 4.0, 4.0}) == std::vector{4.0, 4.0, 4.0});
  CHECK_THROWS_AS(export_alignment_table(std::vector{1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(export_alignment_table(std::vector{1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("level loss") {
  const DistillTarget<double> t = diag_target();
  const std::vector<LayerShape> shapes = t.shapes();
  NestedFactors<double> zero(shapes, LevelSchema{{1, 4}, {}});
  CHECK(level_loss(zero, t, 0) == 14.25);
  CHECK(level_loss(zero, t, 1) == 14.25);

  NestedFactors<double> exact(shapes, LevelSchema{{1, 4}, {}});
  exact.left(0) = Eigen::Matrix4d::Identity();
  exact.right(0) = t.deltas[0];
  CHECK(level_loss(exact, t, 1) == 0.0);
  // Rank-1 optimum keeps the leading singular pair.
  CHECK(level_loss(exact, t, 0) == doctest::Approx(5.25).epsilon(1e-12));
}

TEST_CASE("svd oracle") {
  const DistillTarget<double> t = diag_target();
  CHECK(svd_oracle(t, 1) == doctest::Approx(5.25).epsilon(1e-12));
  CHECK(svd_oracle(t, 2) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(svd_oracle(t, 4) == doctest::Approx(0.0));
  const std::vector<LayerShape> shapes{{7, 5}, {4, 6}};
  const DistillTarget<double> r = random_target(shapes, 3);
  CHECK(svd_oracle(r, 0) == doctest::Approx(r.squared_norm()).epsilon(1e-12));
  CHECK_THROWS_AS(svd_oracle(r, 5), std::invalid_argument);
}

TEST_CASE("synthetic target has the requested spectrum") {
  const std::vector<LayerShape> shapes{{12, 10}, {5, 9}};
  DistillConfig c;
  c.seed = 17;
  const DistillTarget<double> t = synthetic_target<double>(shapes, c);
  for (std::size_t m = 0; m < shapes.size(); ++m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.deltas[m]);
    const auto& s = svd.singularValues();
    for (Index i = 0; i < s.size(); ++i) CHECK(s(i) == doctest::Approx(10.0 * std::pow(0.7, i + 1)).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const std::vector<LayerShape> shapes{{6, 5}};
  const LevelSchema schema{{1, 3, 5}, {}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DistillTarget<double> t = random_target(shapes, seed);
    const NestedFactors<double> f = random_factors(shapes, schema, seed + 100);
    for (int level = 0; level < 3; ++level) CHECK(oracle::gradient_error(f, t, level) <= 1e-4);
    // At initialization the left gradient vanishes; the check is norm-wise.
    const NestedFactors<double> init = init_factors<double>(shapes, schema, seed);
    for (int level = 0; level < 3; ++level) CHECK(oracle::gradient_error(init, t, level) <= 1e-4);
  }
  const std::vector<LayerShape> multi{{6, 5}, {4, 7}};
  const LevelSchema small{{1, 2}, {}};
  CHECK(oracle::gradient_error(random_factors(multi, small, 1), random_target(multi, 2), 1) <= 1e-4);
}

TEST_CASE("initial loss equals the target norm") {
  const std::vector<LayerShape> shapes{{12, 10}};
  DistillConfig c;
  const DistillTarget<double> t = synthetic_target<double>(shapes, c);
  const NestedFactors<double> f = init_factors<double>(shapes, LevelSchema{{1, 3}, {}}, 0);
  CHECK(level_loss(f, t, 0) == t.squared_norm());
  CHECK(level_loss(f, t, 1) == t.squared_norm());
  CHECK(f.right(0).isZero(0.0));
}

TEST_CASE("representable target converges to zero") {
  const std::vector<LayerShape> shapes{{8, 6}};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(8), v(6);
  for (auto& x : u) x = g(rng);
  for (auto& x : v) x = g(rng);
  DistillTarget<double> t;
  t.deltas.push_back(u * v.transpose() / 3.0);
  DistillConfig c;
  c.sweeps_per_level = 20000;
  const auto r = distill(t, LevelSchema{{1, 3}, {}}, c);
  for (double loss : r.raw_loss) CHECK(loss <= 1e-4 * t.squared_norm());
}

TEST_CASE("diagonal target reaches its floors") {
  DistillConfig c;
  c.sweeps_per_level = 30000;
  const auto r = distill(diag_target(), LevelSchema{{1, 2}, {}}, c);
  CHECK(r.raw_loss[0] == doctest::Approx(5.25).epsilon(0.05));
  CHECK(r.raw_loss[1] == doctest::Approx(1.25).epsilon(0.05));
  CHECK(r.iterations == 60000);
}

TEST_CASE("zero target stays finite and reaches zero") {
  DistillTarget<double> t;
  t.deltas.push_back(Eigen::MatrixXd::Zero(5, 4));
  const auto r = distill(t, LevelSchema{{1, 2}, {}}, DistillConfig{});
  CHECK(r.factors.all_finite());
  for (double loss : r.raw_loss) CHECK(loss == 0.0);
}

TEST_CASE("only the sampled level's blocks move and lower levels stay sub-blocks") {
  const std::vector<LayerShape> shapes{{7, 6}, {5, 4}};
  const LevelSchema schema{{1, 2, 4}, {}};
  DistillConfig c;
  c.seed = 3;
  c.sweeps_per_level = 200;
  const DistillTarget<double> t = synthetic_target<double>(shapes, c);
  NestedFactors<double> previous = init_factors<double>(shapes, schema, c.seed);
  long checked = 0;
  bool bounded = true;
  const DistillObserver<double> watch = [&](long, int level, const NestedFactors<double>& f) {
    const Index r = schema.ranks[level];
    for (int m = 0; m < f.layers(); ++m) {
      const Index top = schema.top_rank();
      CHECK(f.left(m).rightCols(top - r) == previous.left(m).rightCols(top - r));
      CHECK(f.right(m).bottomRows(top - r) == previous.right(m).bottomRows(top - r));
      for (int l = 0; l + 1 < schema.levels(); ++l) {
        // Level l exported on its own equals level l+1 sliced to rank r_l.
        const Eigen::MatrixXd own_left = f.left(m, l);
        const Eigen::MatrixXd own_right = f.right(m, l);
        const Eigen::MatrixXd upper_left = f.left(m, l + 1);
        const Eigen::MatrixXd upper_right = f.right(m, l + 1);
        CHECK(own_left == upper_left.leftCols(schema.ranks[l]));
        CHECK(own_right == upper_right.topRows(schema.ranks[l]));
      }
    }
    for (int l = 0; l < schema.levels(); ++l) bounded = bounded && level_loss(f, t, l) >= svd_oracle(t, schema.ranks[l]);
    previous = f;
    ++checked;
  };
  distill(t, schema, c, watch);
  CHECK(checked == 600);
  CHECK(bounded);
}

TEST_CASE("distill is bit-reproducible") {
  const std::vector<LayerShape> shapes{{9, 7}};
  DistillConfig c;
  c.seed = 42;
  const DistillTarget<double> t = synthetic_target<double>(shapes, c);
  const auto a = distill(t, LevelSchema{{1, 3}, {}}, c);
  const auto b = distill(t, LevelSchema{{1, 3}, {}}, c);
  CHECK(a.raw_loss == b.raw_loss);
  CHECK(a.factors.left(0) == b.factors.left(0));
  CHECK(a.factors.right(0) == b.factors.right(0));
}

TEST_CASE("divergence is reported with its iteration") {
  DistillConfig c;
  c.step_size = 10.0;
  try {
    distill(diag_target(), LevelSchema{{1, 2}, {}}, c);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() >= 1);
    CHECK(e.iteration() <= 200);
    CHECK(std::string(e.what()).find("iteration " + std::to_string(e.iteration())) != std::string::npos);
  }
}

TEST_CASE("config validation") {
  DistillConfig c;
  c.step_size = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.sweeps_per_level = 0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.spectrum_decay = 1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

TEST_CASE("single precision instantiation") {
  const std::vector<LayerShape> shapes{{6, 5}};
  DistillConfig c;
  c.sweeps_per_level = 5000;
  const DistillTarget<float> t = synthetic_target<float>(shapes, c);
  const auto r = distill(t, LevelSchema{{1, 2}, {}}, c);
  CHECK(r.raw_loss[0] == doctest::Approx(svd_oracle(t, 1)).epsilon(0.05));
}
