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

#include "dkalloc/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dkalloc {

static_assert(std::endian::native == std::endian::little, "binary factor files assume a little-endian host");

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error([&] {
        std::string what = "instance violates " + std::to_string(violations.size()) + " invariant(s)";
        for (const auto& v : violations) what += "\n  " + v.message();
        return what;
      }()),
      violations_(std::move(violations)) {}

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) throw FormatError(std::string("missing field '") + name + "'");
  return doc.at(name);
}

int as_count(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FormatError(std::string("field '") + name + "' must be a nonnegative integer");
  }
  return v.get<int>();
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw FormatError(where + ": expected a number");
  return v.get<double>();
}

const json& as_array(const json& v, std::size_t size, const std::string& where) {
  if (!v.is_array() || v.size() != size) {
    throw FormatError(where + ": expected an array of length " + std::to_string(size));
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& v, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  as_array(v, static_cast<std::size_t>(rows), where);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = as_array(v[r], static_cast<std::size_t>(cols), where + "[" + std::to_string(r) + "]");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = as_double(row[c], where);
  }
  return m;
}

// Nested binary array of the given extents over a flat row-major buffer.
json binary_to_json(const std::vector<std::uint8_t>& data, std::span<const int> extents, std::size_t offset = 0) {
  json out = json::array();
  std::size_t stride = 1;
  for (std::size_t d = 1; d < extents.size(); ++d) stride *= static_cast<std::size_t>(extents[d]);
  for (int n = 0; n < extents[0]; ++n) {
    if (extents.size() == 1) {
      out.push_back(static_cast<int>(data[offset + n]));
    } else {
      out.push_back(binary_to_json(data, extents.subspan(1), offset + n * stride));
    }
  }
  return out;
}

void binary_from_json(const json& v, std::span<const int> extents, std::vector<std::uint8_t>& data,
                      const std::string& where, std::size_t offset = 0) {
  as_array(v, static_cast<std::size_t>(extents[0]), where);
  std::size_t stride = 1;
  for (std::size_t d = 1; d < extents.size(); ++d) stride *= static_cast<std::size_t>(extents[d]);
  for (int n = 0; n < extents[0]; ++n) {
    if (extents.size() == 1) {
      const json& x = v[n];
      if (!x.is_number_integer() || x.get<long long>() < 0 || x.get<long long>() > 255) {
        throw FormatError(where + ": expected a binary entry");
      }
      data[offset + n] = static_cast<std::uint8_t>(x.get<int>());
    } else {
      binary_from_json(v[n], extents.subspan(1), data, where, offset + n * stride);
    }
  }
}

template <typename Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json to_json(const NetworkInstance& instance) {
  json doc;
  doc["n_agents"] = instance.n_agents;
  doc["n_tasks"] = instance.n_tasks;
  doc["n_levels"] = instance.n_levels;
  json freq = json::array();
  for (int i = 0; i < instance.n_agents; ++i) {
    json row = json::array();
    for (int j = 0; j < instance.n_agents; ++j) {
      json cell = json::array();
      for (int k = 0; k < instance.n_tasks; ++k) cell.push_back(instance.freq[k](i, j));
      row.push_back(std::move(cell));
    }
    freq.push_back(std::move(row));
  }
  doc["freq"] = std::move(freq);
  doc["rate"] = matrix_to_json(instance.rate);
  doc["chunk_size"] = matrix_to_json(instance.chunk_size);
  doc["align_loss"] = matrix_to_json(instance.align_loss);
  doc["weights"] = {{"eta_a", instance.weights.align},
                    {"eta_t", instance.weights.transmit},
                    {"eta_s", instance.weights.storage}};
  if (instance.seed) doc["seed"] = *instance.seed;
  if (!instance.provenance.is_null()) doc["provenance"] = instance.provenance;
  return doc;
}

NetworkInstance instance_from_json(const json& doc) {
  return wrap_json_errors("instance", [&] {
    NetworkInstance inst;
    inst.n_agents = as_count(doc, "n_agents");
    inst.n_tasks = as_count(doc, "n_tasks");
    inst.n_levels = as_count(doc, "n_levels");
    const int n = inst.n_agents;

    const json& freq = as_array(field(doc, "freq"), n, "freq");
    inst.freq.assign(inst.n_tasks, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i < n; ++i) {
      const json& row = as_array(freq[i], n, "freq[" + std::to_string(i) + "]");
      for (int j = 0; j < n; ++j) {
        const std::string where = "freq[" + std::to_string(i) + "][" + std::to_string(j) + "]";
        const json& cell = as_array(row[j], inst.n_tasks, where);
        for (int k = 0; k < inst.n_tasks; ++k) inst.freq[k](i, j) = as_double(cell[k], where);
      }
    }
    inst.rate = matrix_from_json(field(doc, "rate"), n, n, "rate");
    inst.chunk_size = matrix_from_json(field(doc, "chunk_size"), inst.n_tasks, inst.n_levels, "chunk_size");
    inst.align_loss = matrix_from_json(field(doc, "align_loss"), inst.n_tasks, inst.n_levels, "align_loss");

    const json& w = field(doc, "weights");
    inst.weights.align = as_double(field(w, "eta_a"), "weights.eta_a");
    inst.weights.transmit = as_double(field(w, "eta_t"), "weights.eta_t");
    inst.weights.storage = as_double(field(w, "eta_s"), "weights.eta_s");
    if (doc.contains("seed") && !doc["seed"].is_null()) inst.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("provenance")) inst.provenance = doc["provenance"];
    return inst;
  });
}

json to_json(const AllocationPolicy& policy) {
  const int n = policy.n_agents();
  const int levels = policy.n_levels();
  const int link[] = {n, n, levels};
  const int sourced[] = {n, n, n, levels};
  const int per_agent[] = {n, levels};
  json doc;
  doc["n_agents"] = n;
  doc["n_levels"] = levels;
  doc["exploit"] = binary_to_json(policy.exploit_data(), link);
  doc["store"] = binary_to_json(policy.storage().data(), per_agent);
  doc["tx_to_tx"] = binary_to_json(policy.tx_to_tx_data(), sourced);
  doc["tx_to_rx"] = binary_to_json(policy.tx_to_rx_data(), sourced);
  doc["needed"] = binary_to_json(policy.needed_data(), per_agent);
  return doc;
}

AllocationPolicy policy_from_json(const json& doc) {
  return wrap_json_errors("policy", [&] {
    const int n = as_count(doc, "n_agents");
    const int levels = as_count(doc, "n_levels");
    AllocationPolicy policy(n, levels);
    const int link[] = {n, n, levels};
    const int sourced[] = {n, n, n, levels};
    const int per_agent[] = {n, levels};
    binary_from_json(field(doc, "exploit"), link, policy.exploit_data(), "exploit");
    binary_from_json(field(doc, "store"), per_agent, policy.storage().data(), "store");
    binary_from_json(field(doc, "tx_to_tx"), sourced, policy.tx_to_tx_data(), "tx_to_tx");
    binary_from_json(field(doc, "tx_to_rx"), sourced, policy.tx_to_rx_data(), "tx_to_rx");
    binary_from_json(field(doc, "needed"), per_agent, policy.needed_data(), "needed");
    return policy;
  });
}

json to_json(const MetricsReport& metrics) {
  json doc;
  doc["align_loss"] = metrics.align_loss;
  doc["tx_overhead"] = metrics.tx_overhead;
  doc["storage_cost"] = metrics.storage_cost;
  doc["network_loss"] = std::isfinite(metrics.network_loss) ? json(metrics.network_loss) : json(nullptr);
  doc["feasible"] = metrics.feasible;
  return doc;
}

MetricsReport metrics_from_json(const json& doc) {
  return wrap_json_errors("metrics", [&] {
    MetricsReport m;
    m.align_loss = as_double(field(doc, "align_loss"), "align_loss");
    m.tx_overhead = as_double(field(doc, "tx_overhead"), "tx_overhead");
    m.storage_cost = as_double(field(doc, "storage_cost"), "storage_cost");
    const json& loss = field(doc, "network_loss");
    m.network_loss = loss.is_null() ? kInfinity : as_double(loss, "network_loss");
    m.feasible = field(doc, "feasible").get<bool>();
    return m;
  });
}

json to_json(const SolveResult& result, bool include_timing) {
  json doc;
  doc["solver"] = result.solver;
  doc["tasks"] = result.tasks;
  json policies = json::array();
  for (const auto& p : result.policies) policies.push_back(to_json(p));
  doc["policies"] = std::move(policies);
  doc["metrics"] = to_json(result.metrics);
  doc["diagnostics"] = {{"iterations", result.iterations},
                        {"evaluations", result.evaluations},
                        {"trace", result.trace}};
  if (include_timing) doc["wall_time_s"] = result.wall_time_s;
  return doc;
}

std::vector<AllocationPolicy> policies_from_json(const json& doc, std::vector<int>* tasks) {
  return wrap_json_errors("policies", [&] {
    std::vector<AllocationPolicy> out;
    if (doc.is_object() && doc.contains("exploit")) {
      out.push_back(policy_from_json(doc));
    } else {
      const json& list = field(doc, "policies");
      if (!list.is_array()) throw FormatError("'policies' must be an array");
      for (const auto& p : list) out.push_back(policy_from_json(p));
    }
    if (tasks) {
      tasks->clear();
      if (doc.is_object() && doc.contains("tasks")) {
        *tasks = doc.at("tasks").get<std::vector<int>>();
        if (tasks->size() != out.size()) throw FormatError("'tasks' and 'policies' differ in length");
      } else {
        for (std::size_t n = 0; n < out.size(); ++n) tasks->push_back(static_cast<int>(n));
      }
    }
    return out;
  });
}

json to_json(const NestedFactors<double>& factors) {
  json doc;
  doc["ranks"] = factors.schema().ranks;
  doc["target_prs"] = factors.schema().target_prs;
  json shapes = json::array();
  json left = json::array();
  json right = json::array();
  for (int m = 0; m < factors.layers(); ++m) {
    shapes.push_back({factors.left(m).rows(), factors.right(m).cols()});
    left.push_back(matrix_to_json(factors.left(m)));
    right.push_back(matrix_to_json(factors.right(m)));
  }
  doc["shapes"] = std::move(shapes);
  doc["left"] = std::move(left);
  doc["right"] = std::move(right);
  return doc;
}

NestedFactors<double> factors_from_json(const json& doc) {
  return wrap_json_errors("factors", [&] {
    LevelSchema schema;
    schema.ranks = field(doc, "ranks").get<std::vector<Index>>();
    if (doc.contains("target_prs")) schema.target_prs = doc["target_prs"].get<std::vector<double>>();
    std::vector<LayerShape> shapes;
    for (const auto& s : field(doc, "shapes")) {
      as_array(s, 2, "shapes");
      shapes.push_back({s[0].get<Index>(), s[1].get<Index>()});
    }
    try {
      validate(schema, shapes);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("factors: ") + e.what());
    }
    NestedFactors<double> factors(shapes, schema);
    const json& left = as_array(field(doc, "left"), shapes.size(), "left");
    const json& right = as_array(field(doc, "right"), shapes.size(), "right");
    for (int m = 0; m < factors.layers(); ++m) {
      factors.left(m) = matrix_from_json(left[m], shapes[m].input_dim, schema.top_rank(), "left");
      factors.right(m) = matrix_from_json(right[m], schema.top_rank(), shapes[m].output_dim, "right");
    }
    return factors;
  });
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("factors binary: truncated header");
  return v;
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("factors binary: truncated payload");
      m(r, c) = v;
    }
}

}  // namespace

void write_factors_binary(std::ostream& out, const NestedFactors<double>& factors) {
  const LevelSchema& schema = factors.schema();
  put_u64(out, static_cast<std::uint64_t>(factors.layers()));
  put_u64(out, static_cast<std::uint64_t>(schema.levels()));
  for (Index r : schema.ranks) put_u64(out, static_cast<std::uint64_t>(r));
  for (const auto& s : factors.shapes()) {
    put_u64(out, static_cast<std::uint64_t>(s.input_dim));
    put_u64(out, static_cast<std::uint64_t>(s.output_dim));
  }
  for (int m = 0; m < factors.layers(); ++m) put_matrix(out, factors.left(m));
  for (int m = 0; m < factors.layers(); ++m) put_matrix(out, factors.right(m));
}

NestedFactors<double> read_factors_binary(std::istream& in) {
  const std::uint64_t layers = get_u64(in);
  const std::uint64_t levels = get_u64(in);
  if (layers == 0 || layers > (1u << 20) || levels == 0 || levels > (1u << 20)) {
    throw FormatError("factors binary: implausible header");
  }
  LevelSchema schema;
  for (std::uint64_t l = 0; l < levels; ++l) schema.ranks.push_back(static_cast<Index>(get_u64(in)));
  std::vector<LayerShape> shapes;
  for (std::uint64_t m = 0; m < layers; ++m) {
    const auto i = static_cast<Index>(get_u64(in));
    const auto o = static_cast<Index>(get_u64(in));
    shapes.push_back({i, o});
  }
  try {
    validate(schema, shapes);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("factors binary: ") + e.what());
  }
  NestedFactors<double> factors(shapes, schema);
  for (int m = 0; m < factors.layers(); ++m) get_matrix(in, factors.left(m));
  for (int m = 0; m < factors.layers(); ++m) get_matrix(in, factors.right(m));
  return factors;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

NetworkInstance load_instance(const std::filesystem::path& path) {
  NetworkInstance inst = instance_from_json(read_json_file(path));
  auto violations = validate_instance(inst);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return inst;
}

}  // namespace dkalloc
