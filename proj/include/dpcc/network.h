// Copyright 2026 The dpcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Resource-allocation networks: supplies p and potentials theta with
//
//   min  c1'p + p' diag(c2) p
//   s.t. p - B theta = d,  theta_ref = 0,
//        p_min <= p <= p_max,  f_min <= beta (theta_s - theta_r) <= f_max.
//
// Nodes whose supply bounds coincide get an equality row p_i = p_max_i in
// place of the two bound rows.

#ifndef DPCC_NETWORK_H_
#define DPCC_NETWORK_H_

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpcc/conic.h"
#include "dpcc/problem.h"

namespace dpcc {

struct Edge {
  int from = 0;
  int to = 0;
  double beta = 1.0;
  // Infinite limits mean unconstrained.
  double f_min = -std::numeric_limits<double>::infinity();
  double f_max = std::numeric_limits<double>::infinity();
};

struct NetworkCase {
  std::string name;
  int nodes = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd p_min;
  Eigen::VectorXd p_max;
  Eigen::VectorXd c1;
  Eigen::VectorXd c2;
  Eigen::VectorXd demand;

  // Nodes with p_max > p_min, i.e. the adjustable supplies.
  std::vector<int> supply_nodes() const;
};

enum class CaseFormat { kMatpower, kJson };

CaseFormat parse_case_format(std::string_view name);
// "json" for *.json, "matpower" otherwise.
CaseFormat guess_case_format(std::string_view path);

// matpower subset: `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch` and
// `mpc.gencost` tables, '%' comments, rows ended by ';' or newline.
//   bus:     [bus_i type Pd ...]                   Pd used
//   gen:     [bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin ...]
//   branch:  [fbus tbus r x b rateA ... status]    beta = 1/x, rateA = 0 unlimited
//   gencost: [2 startup shutdown ncost c_{ncost-1} ... c0]
// Quantities are converted to per-unit on baseMVA (default 100): demands and
// limits are divided by it, c1 is multiplied by it and c2 by its square.
// Generators at the same bus add their limits; the first generator's cost
// applies. Out-of-service rows (status 0) are skipped.
//
// json: {"name", "nodes", "edges": [{"from", "to", "beta", "f_min", "f_max"}],
//        "p_min", "p_max", "c1", "c2", "demand"}; null limits are unlimited.
//
// Throws Error(kParseError) with a location, or Error(kConnectivityError).
NetworkCase parse_case(std::string_view text, CaseFormat format);
NetworkCase load_case(const std::string& path, CaseFormat format);
NetworkCase load_case(const std::string& path);

std::string to_json(const NetworkCase& network);

// Throws Error(kInvalidSpec) or Error(kConnectivityError).
void validate_case(const NetworkCase& network);

Eigen::MatrixXd laplacian(const NetworkCase& network);

struct AllocationProgram {
  ConvexProgram program;
  int nodes = 0;
  int reference = 0;
  // Variable index of p_i is i; of theta_i is nodes + i.
  std::vector<int> supply;  // adjustable supply variables

  int p_index(int node) const { return node; }
  int theta_index(int node) const { return nodes + node; }
};

AllocationProgram build_program(const NetworkCase& network, int reference = 0);

// c1 ~ U(1, 3), c2 ~ U(0.1, 0.3), d ~ U(0.5, 1) per node, drawn in that order
// from a std::mt19937_64 stream.
NetworkCase random_instance(const NetworkCase& topology, std::uint64_t seed);

struct SensitivityReport {
  double alpha = 0.0;
  double max_observed = 0.0;
  std::vector<double> observed;   // one entry per completed trial
  int exceedances = 0;            // trials above alpha + 1e-6
  int skipped = 0;                // trials with no feasible perturbation
  std::vector<int> histogram;     // counts over [0, 2 alpha] in 10 bins plus overflow
  std::vector<std::string> warnings;
};

SensitivityReport sensitivity_probe(const NetworkCase& network, double alpha, int trials,
                                    std::uint64_t seed, const SolverOptions& options = {});

}  // namespace dpcc

#endif  // DPCC_NETWORK_H_
