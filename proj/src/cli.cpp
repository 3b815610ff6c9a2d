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

#include "dkalloc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dkalloc/allocation.hpp"
#include "dkalloc/distiller.hpp"

namespace dkalloc::cli {

namespace {

/// Thrown for bad config documents; maps to kValidation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.is_object() || !doc.contains(key) || doc[key].is_null()) return fallback;
  try {
    return doc[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

// Shortest round-trip text for a double; "inf" for infinities.
std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return json(v).dump();
}

Eigen::MatrixXd table_from_json(const json& v) {
  if (!v.is_array() || v.empty()) throw ConfigError("align_table must be a nonempty array");
  // Accept a flat row or a list of rows.
  const bool flat = v[0].is_number();
  const std::size_t rows = flat ? 1 : v.size();
  const std::size_t cols = flat ? v.size() : v[0].size();
  Eigen::MatrixXd t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = flat ? v : v[r];
    if (!row.is_array() || row.size() != cols) throw ConfigError("align_table rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = row[c].get<double>();
  }
  return t;
}

Weights weights_from_json(const json& doc, Weights fallback) {
  if (!doc.is_object() || !doc.contains("weights")) return fallback;
  const json& w = doc["weights"];
  return {get_or(w, "eta_a", fallback.align), get_or(w, "eta_t", fallback.transmit),
          get_or(w, "eta_s", fallback.storage)};
}

struct Options {
  std::string config;
  std::string out;
  std::string solver;
  std::string instance;
  std::string policy;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<int> max_bits;
  int jobs = 1;
  bool timing = false;
};

int cmd_gen(const Options& opt, std::ostream& out) {
  const std::filesystem::path config_path(opt.config);
  GenConfig config = gen_config_from_json(read_json_file(config_path), config_path.parent_path());
  if (opt.seed) config.seed = *opt.seed;
  validate(config);
  NetworkInstance inst = generate_instance(config);
  inst.provenance = {{"generator", to_json(config)}};
  write_text_file(opt.out, dump(dkalloc::to_json(inst)));
  out << "wrote " << opt.out << " (N=" << inst.n_agents << ", K=" << inst.n_tasks << ", L=" << inst.n_levels
      << ", seed=" << config.seed << ")\n";
  return kOk;
}

int cmd_distill(const Options& opt, std::ostream& out) {
  const std::filesystem::path config_path(opt.config);
  const json doc = read_json_file(config_path);

  std::vector<LayerShape> shapes;
  for (const auto& s : get_or(doc, "layers", json::array())) {
    if (!s.is_array() || s.size() != 2) throw ConfigError("layers entries must be [input_dim, output_dim]");
    shapes.push_back({s[0].get<Index>(), s[1].get<Index>()});
  }

  DistillConfig config;
  config.step_size = get_or(doc, "step_size", config.step_size);
  config.sweeps_per_level = get_or(doc, "sweeps_per_level", config.sweeps_per_level);
  config.seed = get_or(doc, "seed", config.seed);
  config.spectrum_decay = get_or(doc, "spectrum_decay", config.spectrum_decay);
  config.spectrum_scale = get_or(doc, "spectrum_scale", config.spectrum_scale);
  if (opt.seed) config.seed = *opt.seed;

  DistillTarget<double> target;
  const json target_doc = get_or(doc, "target", json{{"type", "synthetic"}});
  const std::string type = get_or<std::string>(target_doc, "type", "synthetic");
  try {
    validate(config);
    if (type == "explicit") {
      shapes.clear();
      for (const auto& m : target_doc.at("matrices")) {
        const std::size_t rows = m.size();
        const std::size_t cols = rows ? m[0].size() : 0;
        Eigen::MatrixXd d(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) d(r, c) = m[r].at(c).get<double>();
        shapes.push_back({d.rows(), d.cols()});
        target.deltas.push_back(std::move(d));
      }
    } else if (type == "synthetic") {
      target = synthetic_target<double>(shapes, config);
    } else {
      throw ConfigError("unknown target type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  LevelSchema schema;
  try {
    if (doc.contains("ranks")) {
      schema.ranks = doc["ranks"].get<std::vector<Index>>();
      for (Index r : schema.ranks) schema.target_prs.push_back(parameter_ratio(shapes, r));
      validate(schema, shapes);
    } else {
      schema = build_schema(shapes, get_or(doc, "target_prs", std::vector<double>{}));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const DistillResult<double> result = distill(target, schema, config);
  const std::vector<double> table = export_alignment_table(result.raw_loss);
  std::vector<double> floors;
  for (Index r : schema.ranks) floors.push_back(svd_oracle(target, r));

  std::filesystem::path out_path(opt.out);
  if (opt.format == "binary") {
    std::ostringstream bytes(std::ios::binary);
    write_factors_binary(bytes, result.factors);
    write_text_file(out_path, bytes.str());
  } else {
    write_text_file(out_path, dump(dkalloc::to_json(result.factors)));
  }
  std::filesystem::path table_path = out_path;
  table_path.replace_extension(".table.json");
  json table_doc;
  table_doc["ranks"] = schema.ranks;
  table_doc["parameter_ratio"] = schema.target_prs;
  table_doc["raw_loss"] = result.raw_loss;
  table_doc["align_loss"] = table;
  table_doc["chunk_size"] = chunk_sizes(schema, shapes);
  table_doc["svd_floor"] = floors;
  table_doc["iterations"] = result.iterations;
  table_doc["seed"] = config.seed;
  write_text_file(table_path, dump(table_doc));

  out << "wrote " << out_path.string() << " and " << table_path.string() << "; align_loss =";
  for (double v : table) out << ' ' << number(v);
  out << '\n';
  return kOk;
}

int cmd_solve(const Options& opt, std::ostream& out) {
  const auto kind = parse_solver(opt.solver);
  if (!kind) {
    throw CLI::ValidationError("--solver", "unknown solver '" + opt.solver + "' (fully-store, greedy, exact, ga)");
  }
  const NetworkInstance inst = load_instance(opt.instance);
  SolverOptions options;
  if (!opt.config.empty()) options = solver_options_from_json(read_json_file(opt.config));
  if (opt.seed) options.ga.seed = *opt.seed;
  if (opt.max_bits) options.max_bits = *opt.max_bits;

  const SolveResult result = solve_all(inst, *kind, options);
  if (!opt.out.empty()) write_text_file(opt.out, dump(dkalloc::to_json(result, opt.timing)));
  const MetricsReport& m = result.metrics;
  out << "solver=" << result.solver << " J_net=" << number(m.network_loss) << " L_A=" << number(m.align_loss)
      << " O_T=" << number(m.tx_overhead) << " C_S=" << number(m.storage_cost) << " time=" << result.wall_time_s
      << "s\n";
  return kOk;
}

int cmd_verify(const Options& opt, std::ostream& out) {
  const NetworkInstance inst = load_instance(opt.instance);
  const json doc = read_json_file(opt.policy);
  std::vector<int> tasks;
  const std::vector<AllocationPolicy> policies = policies_from_json(doc, &tasks);

  bool ok = true;
  for (std::size_t n = 0; n < policies.size(); ++n) {
    if (tasks[n] < 0 || tasks[n] >= inst.n_tasks) throw DimensionError("task index out of range for instance");
    const auto violations = check_constraints(inst, policies[n], tasks[n]);
    for (const auto& v : violations) {
      out << "task " << tasks[n] << ": " << v.message() << '\n';
      ok = false;
    }
  }
  if (!ok) return kValidation;
  out << "feasible\n";

  const MetricsReport recomputed = network_loss(inst, policies, tasks);
  out << "J_net=" << number(recomputed.network_loss) << " L_A=" << number(recomputed.align_loss)
      << " O_T=" << number(recomputed.tx_overhead) << " C_S=" << number(recomputed.storage_cost) << '\n';
  if (doc.is_object() && doc.contains("metrics")) {
    const MetricsReport embedded = metrics_from_json(doc["metrics"]);
    const auto close = [](double a, double b) {
      return a == b || std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
    };
    if (close(embedded.network_loss, recomputed.network_loss) && close(embedded.align_loss, recomputed.align_loss) &&
        close(embedded.tx_overhead, recomputed.tx_overhead) && close(embedded.storage_cost, recomputed.storage_cost)) {
      out << "metrics match\n";
    } else {
      out << "metrics mismatch: embedded J_net=" << number(embedded.network_loss) << '\n';
      return kValidation;
    }
  }
  return kOk;
}

int cmd_bench(const Options& opt, std::ostream& out) {
  const std::filesystem::path plan_path(opt.config);
  ExperimentPlan plan = plan_from_json(read_json_file(plan_path), plan_path.parent_path());
  if (opt.max_bits) plan.options.max_bits = *opt.max_bits;
  if (opt.seed) {
    for (auto& cell : plan.cells) {
      for (std::size_t n = 0; n < cell.seeds.size(); ++n) cell.seeds[n] = *opt.seed + n;
    }
  }
  const std::string csv = run_bench(plan, std::max(1, opt.jobs));
  write_text_file(opt.out, csv);
  out << "wrote " << opt.out << '\n';
  return kOk;
}

}  // namespace

GenConfig gen_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("gen config must be a JSON object");
  GenConfig c;
  c.n_agents = get_or(doc, "n_agents", c.n_agents);
  c.n_tasks = get_or(doc, "n_tasks", c.n_tasks);
  c.n_levels = get_or(doc, "n_levels", c.n_levels);
  c.seed = get_or(doc, "seed", c.seed);
  const std::string mode = get_or<std::string>(doc, "align_mode", "synthetic-decay");
  if (mode == "synthetic-decay") {
    c.align_mode = AlignTableMode::kSyntheticDecay;
  } else if (mode == "distiller-fed") {
    c.align_mode = AlignTableMode::kDistillerFed;
  } else {
    throw ConfigError("unknown align_mode '" + mode + "'");
  }
  if (doc.contains("base_loss")) {
    const auto range = get_or(doc, "base_loss", std::vector<double>{});
    if (range.size() != 2) throw ConfigError("base_loss must be [min, max]");
    c.base_loss_min = range[0];
    c.base_loss_max = range[1];
  }
  c.decay = get_or(doc, "decay", c.decay);
  c.weights = weights_from_json(doc, c.weights);
  if (doc.contains("align_table")) {
    c.align_table = table_from_json(doc["align_table"]);
  } else if (doc.contains("align_table_file")) {
    const json table = read_json_file(resolve(base_dir, doc["align_table_file"].get<std::string>()));
    if (!table.contains("align_loss")) throw ConfigError("align_table_file has no 'align_loss' field");
    c.align_table = table_from_json(table["align_loss"]);
  }
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gen config: ") + e.what());
  }
  return c;
}

json to_json(const GenConfig& c) {
  json doc;
  doc["n_agents"] = c.n_agents;
  doc["n_tasks"] = c.n_tasks;
  doc["n_levels"] = c.n_levels;
  doc["seed"] = c.seed;
  doc["align_mode"] = c.align_mode == AlignTableMode::kSyntheticDecay ? "synthetic-decay" : "distiller-fed";
  doc["base_loss"] = {c.base_loss_min, c.base_loss_max};
  doc["decay"] = c.decay;
  doc["weights"] = {{"eta_a", c.weights.align}, {"eta_t", c.weights.transmit}, {"eta_s", c.weights.storage}};
  if (c.align_table) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < c.align_table->rows(); ++r) {
      json row = json::array();
      for (Eigen::Index l = 0; l < c.align_table->cols(); ++l) row.push_back((*c.align_table)(r, l));
      rows.push_back(std::move(row));
    }
    doc["align_table"] = std::move(rows);
  }
  return doc;
}

SolverOptions solver_options_from_json(const json& doc) {
  SolverOptions o;
  o.max_bits = get_or(doc, "max_bits", o.max_bits);
  const json greedy = get_or(doc, "greedy", json::object());
  o.greedy.max_sweeps = get_or(greedy, "max_sweeps", o.greedy.max_sweeps);
  const json ga = get_or(doc, "ga", json::object());
  o.ga.population = get_or(ga, "population", o.ga.population);
  o.ga.generations = get_or(ga, "generations", o.ga.generations);
  o.ga.tournament = get_or(ga, "tournament", o.ga.tournament);
  o.ga.crossover = get_or(ga, "crossover", o.ga.crossover);
  if (ga.contains("mutation") && !ga["mutation"].is_null()) o.ga.mutation = ga["mutation"].get<double>();
  o.ga.elitism = get_or(ga, "elitism", o.ga.elitism);
  o.ga.seed = get_or(ga, "seed", o.ga.seed);
  o.ga.seed_full_storage = get_or(ga, "seed_full_storage", o.ga.seed_full_storage);
  try {
    validate(o.greedy);
    validate(o.ga);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return o;
}

ExperimentPlan plan_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("plan must be a JSON object");
  ExperimentPlan plan;
  json gen = get_or(doc, "generator", json::object());
  // Counts and seed are per cell; give the base config valid placeholders.
  gen["n_agents"] = 2;
  gen["n_tasks"] = 1;
  gen["n_levels"] = 1;
  if (gen.contains("align_table") || gen.contains("align_table_file")) {
    throw ConfigError("bench generator supports synthetic alignment tables only");
  }
  plan.generator = gen_config_from_json(gen, base_dir);
  plan.options = solver_options_from_json(doc);

  for (const auto& c : get_or(doc, "cells", json::array())) {
    ExperimentCell cell;
    const auto ints = [&](const char* key) {
      if (!c.contains(key)) throw ConfigError(std::string("cell is missing '") + key + "'");
      const json& v = c[key];
      return v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
    };
    cell.n_agents = ints("n_agents");
    cell.n_levels = ints("n_levels");
    cell.n_tasks = get_or(c, "n_tasks", 1);
    const json& seeds = c.contains("seeds") ? c["seeds"] : json{{"start", 0}, {"count", 1}};
    if (seeds.is_array()) {
      cell.seeds = seeds.get<std::vector<std::uint64_t>>();
    } else {
      const auto start = get_or<std::uint64_t>(seeds, "start", 0);
      const auto count = get_or<std::uint64_t>(seeds, "count", 1);
      for (std::uint64_t s = 0; s < count; ++s) cell.seeds.push_back(start + s);
    }
    for (const auto& name : get_or(c, "solvers", std::vector<std::string>{"exact", "greedy", "fully-store"})) {
      const auto kind = parse_solver(name);
      if (!kind) throw ConfigError("unknown solver '" + name + "' in plan");
      cell.solvers.push_back(*kind);
    }
    if (cell.n_tasks < 1) throw ConfigError("cell n_tasks must be positive");
    plan.cells.push_back(std::move(cell));
  }
  return plan;
}

std::string run_bench(const ExperimentPlan& plan, int jobs) {
  struct Job {
    int n_agents, n_levels, n_tasks;
    std::uint64_t seed;
    std::vector<SolverKind> solvers;
  };
  struct Row {
    std::string status;
    MetricsReport metrics;
    double wall = 0.0;
    long evaluations = 0;
  };

  std::vector<Job> work;
  for (const auto& cell : plan.cells)
    for (int n : cell.n_agents)
      for (int l : cell.n_levels)
        for (auto seed : cell.seeds) work.push_back({n, l, cell.n_tasks, seed, cell.solvers});

  std::vector<std::vector<Row>> rows(work.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      const Job& job = work[w];
      GenConfig gen = plan.generator;
      gen.n_agents = job.n_agents;
      gen.n_levels = job.n_levels;
      gen.n_tasks = job.n_tasks;
      gen.seed = job.seed;
      std::vector<Row>& out = rows[w];
      std::optional<NetworkInstance> inst;
      std::string gen_error;
      try {
        inst = generate_instance(gen);
      } catch (const std::exception& e) {
        gen_error = e.what();
      }
      for (SolverKind kind : job.solvers) {
        Row row;
        if (!inst) {
          row.status = "failed";
          out.push_back(row);
          continue;
        }
        try {
          const SolveResult r = solve_all(*inst, kind, plan.options);
          row.status = "ok";
          row.metrics = r.metrics;
          row.wall = r.wall_time_s;
          row.evaluations = r.evaluations;
        } catch (const GuardError&) {
          row.status = "skipped";
        } catch (const std::exception&) {
          row.status = "failed";
        }
        out.push_back(row);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(work.size())); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << kBenchHeader << '\n';

  struct Sum {
    double j = 0, a = 0, t = 0, s = 0, wall = 0, evals = 0;
    int count = 0;
  };
  // Aggregates keyed by (N, L, K) in first-seen order, then solver.
  std::vector<std::tuple<int, int, int>> keys;
  std::map<std::tuple<int, int, int>, std::map<SolverKind, Sum>> sums;

  for (std::size_t w = 0; w < work.size(); ++w) {
    const Job& job = work[w];
    const auto key = std::make_tuple(job.n_agents, job.n_levels, job.n_tasks);
    if (!sums.count(key)) keys.push_back(key);
    auto& by_solver = sums[key];

    std::optional<double> baseline;
    for (std::size_t s = 0; s < job.solvers.size(); ++s) {
      if (job.solvers[s] == SolverKind::kFullyStore && rows[w][s].status == "ok") {
        baseline = rows[w][s].metrics.network_loss;
      }
    }
    for (std::size_t s = 0; s < job.solvers.size(); ++s) {
      const Row& row = rows[w][s];
      csv << "run," << job.n_agents << ',' << job.n_levels << ',' << job.n_tasks << ',' << job.seed << ','
          << solver_name(job.solvers[s]) << ',' << row.status << ',';
      if (row.status == "ok") {
        const MetricsReport& m = row.metrics;
        csv << number(m.network_loss) << ',' << number(m.align_loss) << ',' << number(m.tx_overhead) << ','
            << number(m.storage_cost) << ',' << number(row.wall) << ',' << row.evaluations << ',';
        if (baseline && *baseline > 0) csv << number(100.0 * (*baseline - m.network_loss) / *baseline);
        Sum& sum = by_solver[job.solvers[s]];
        sum.j += m.network_loss;
        sum.a += m.align_loss;
        sum.t += m.tx_overhead;
        sum.s += m.storage_cost;
        sum.wall += row.wall;
        sum.evals += static_cast<double>(row.evaluations);
        ++sum.count;
      } else {
        by_solver[job.solvers[s]];
        csv << ",,,,,,";
      }
      csv << '\n';
    }
  }

  for (const auto& key : keys) {
    const auto& by_solver = sums[key];
    std::optional<double> baseline;
    if (auto it = by_solver.find(SolverKind::kFullyStore); it != by_solver.end() && it->second.count > 0) {
      baseline = it->second.j / it->second.count;
    }
    for (const auto& [kind, sum] : by_solver) {
      csv << "aggregate," << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ",,"
          << solver_name(kind) << ',';
      if (sum.count == 0) {
        csv << "skipped,,,,,,,\n";
        continue;
      }
      const double n = sum.count;
      const double mean_j = sum.j / n;
      csv << "ok," << number(mean_j) << ',' << number(sum.a / n) << ',' << number(sum.t / n) << ','
          << number(sum.s / n) << ',' << number(sum.wall / n) << ',' << number(sum.evals / n) << ',';
      if (baseline && *baseline > 0) csv << number(100.0 * (*baseline - mean_j) / *baseline);
      csv << '\n';
    }
  }
  return csv.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distilled-knowledge distillation and allocation toolkit", "dkalloc"};
  app.require_subcommand(1);
  Options opt;

  auto* gen = app.add_subcommand("gen", "Generate a random network instance");
  gen->add_option("--config", opt.config, "Generator config JSON")->required();
  gen->add_option("--out", opt.out, "Instance JSON to write")->required();
  gen->add_option("--seed", opt.seed, "Override the config seed");

  auto* dist = app.add_subcommand("distill", "Distill nested low-rank factors and export the loss table");
  dist->add_option("--config", opt.config, "Distillation config JSON")->required();
  dist->add_option("--out", opt.out, "Factors file to write (table goes to <stem>.table.json)")->required();
  dist->add_option("--seed", opt.seed, "Override the config seed");
  dist->add_option("--format", opt.format, "Factors format")->check(CLI::IsMember({"json", "binary"}));

  auto* solve = app.add_subcommand("solve", "Allocate knowledge on an instance");
  solve->add_option("instance,--instance", opt.instance, "Instance JSON")->required();
  solve->add_option("--solver", opt.solver, "fully-store | greedy | exact | ga")->required();
  solve->add_option("--config", opt.config, "Solver config JSON");
  solve->add_option("--out", opt.out, "Result JSON to write");
  solve->add_option("--seed", opt.seed, "GA seed");
  solve->add_option("--max-bits", opt.max_bits, "Exact solver guard on N*L");
  solve->add_flag("--timing", opt.timing, "Record wall time in the result JSON");

  auto* bench = app.add_subcommand("bench", "Run an experiment plan and write CSV");
  bench->add_option("--config", opt.config, "Plan JSON")->required();
  bench->add_option("--out", opt.out, "CSV to write")->required();
  bench->add_option("--seed", opt.seed, "First seed of every cell");
  bench->add_option("--jobs", opt.jobs, "Concurrent cells");
  bench->add_option("--max-bits", opt.max_bits, "Exact solver guard on N*L");

  auto* verify = app.add_subcommand("verify", "Check a policy against an instance");
  verify->add_option("instance,--instance", opt.instance, "Instance JSON")->required();
  verify->add_option("policy,--policy", opt.policy, "Policy or result JSON")->required();

  std::vector<const char*> argv{"dkalloc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (app.got_subcommand(gen)) return cmd_gen(opt, out);
    if (app.got_subcommand(dist)) return cmd_distill(opt, out);
    if (app.got_subcommand(solve)) return cmd_solve(opt, out);
    if (app.got_subcommand(bench)) return cmd_bench(opt, out);
    if (app.got_subcommand(verify)) return cmd_verify(opt, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DimensionError& e) {
    err << "error: dimension mismatch: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kValidation;
  } catch (const FormatError& e) {
    err << "error: malformed file: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kValidation;
  } catch (const GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kGuard;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}

}  // namespace dkalloc::cli
