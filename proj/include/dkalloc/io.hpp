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

// File formats.
//
// Instance JSON:
//   {n_agents, n_tasks, n_levels, freq[i][j][k], rate[h][i], chunk_size[k][l],
//    align_loss[k][l], weights{eta_a, eta_t, eta_s}, seed?, provenance?}
// Policy JSON:
//   {n_agents, n_levels, exploit[i][j][l], store[i][l], tx_to_tx[h][i][j][l],
//    tx_to_rx[h][i][j][l], needed[i][l]}
// Result JSON:
//   {solver, tasks[], policies[], metrics{...}, diagnostics{iterations,
//    evaluations, trace[]}, wall_time_s?}
// Factors binary (little-endian):
//   u64 M, u64 L, u64 ranks[L], u64 (I_m, O_m)[M],
//   f64 left_m row-major for m = 0..M-1, then f64 right_m row-major.
//
// Doubles are written in shortest round-trip form, so every value survives
// a write/read cycle bit-exactly. An infinite network loss is written as null.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkalloc/core.hpp"
#include "dkalloc/distiller.hpp"
#include "json.hpp"

namespace dkalloc {

using nlohmann::json;

/// Malformed or unreadable file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance that parsed but breaks its invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

json to_json(const NetworkInstance& instance);
/// Parses without checking invariants.
NetworkInstance instance_from_json(const json& doc);

json to_json(const AllocationPolicy& policy);
AllocationPolicy policy_from_json(const json& doc);

json to_json(const MetricsReport& metrics);
MetricsReport metrics_from_json(const json& doc);

json to_json(const SolveResult& result, bool include_timing = false);

/// Policies of a result or policy-list document; `tasks` receives the task
/// index of each policy.
std::vector<AllocationPolicy> policies_from_json(const json& doc, std::vector<int>* tasks = nullptr);

json to_json(const NestedFactors<double>& factors);
NestedFactors<double> factors_from_json(const json& doc);

void write_factors_binary(std::ostream& out, const NestedFactors<double>& factors);
NestedFactors<double> read_factors_binary(std::istream& in);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed with a trailing newline.
std::string dump(const json& doc);

/// Reads and validates an instance file. Throws ValidationError listing
/// every violation.
NetworkInstance load_instance(const std::filesystem::path& path);

}  // namespace dkalloc
