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

#include "dpcc/network.h"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dpcc/error.h"

namespace dpcc {

std::vector<int> NetworkCase::supply_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < nodes; ++i) {
    if (p_max(i) > p_min(i)) out.push_back(i);
  }
  return out;
}

CaseFormat parse_case_format(std::string_view name) {
  if (name == "matpower") return CaseFormat::kMatpower;
  if (name == "json") return CaseFormat::kJson;
  throw Error(ErrorCode::kUsageError, fmt::format("unknown case format '{}'", name));
}

CaseFormat guess_case_format(std::string_view path) {
  return path.ends_with(".json") ? CaseFormat::kJson : CaseFormat::kMatpower;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TableRow {
  int line;
  std::vector<double> values;
};

struct MatpowerTables {
  std::optional<double> base_mva;
  std::map<std::string, std::vector<TableRow>> tables;
};

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw Error(ErrorCode::kParseError, fmt::format("line {}: {}", line, what));
}

double parse_number(const std::string& token, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) parse_error(line, fmt::format("bad number '{}'", token));
    return v;
  } catch (const std::logic_error&) {
    parse_error(line, fmt::format("bad number '{}'", token));
  }
}

MatpowerTables read_matpower(std::string_view text) {
  MatpowerTables out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  std::string table;  // non-empty while inside a table
  std::vector<double> row;
  int row_line = 0;
  auto flush_row = [&]() {
    if (!row.empty()) out.tables[table].push_back({row_line, row});
    row.clear();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('%'));
    size_t pos = 0;
    if (table.empty()) {
      const size_t at = line.find("mpc.");
      if (at == std::string::npos) continue;
      const size_t eq = line.find('=', at);
      if (eq == std::string::npos) continue;
      std::string name = line.substr(at + 4, eq - at - 4);
      name.erase(name.find_last_not_of(" \t") + 1);
      const size_t open = line.find('[', eq);
      if (open == std::string::npos) {
        if (name == "baseMVA") {
          std::string value = line.substr(eq + 1);
          value.erase(0, value.find_first_not_of(" \t"));
          value = value.substr(0, value.find_first_of(" \t;"));
          out.base_mva = parse_number(value, line_no);
        }
        continue;
      }
      table = name;
      out.tables[table];
      pos = open + 1;
    }
    // Inside a table: tokens, ';' ends a row, ']' ends the table.
    std::string token;
    auto flush_token = [&]() {
      if (token.empty()) return;
      if (row.empty()) row_line = line_no;
      row.push_back(parse_number(token, line_no));
      token.clear();
    };
    for (; pos < line.size(); ++pos) {
      const char ch = line[pos];
      if (ch == ';') {
        flush_token();
        flush_row();
      } else if (ch == ']') {
        flush_token();
        flush_row();
        table.clear();
        break;
      } else if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
        flush_token();
      } else {
        token.push_back(ch);
      }
    }
    if (!table.empty()) {
      flush_token();
      flush_row();
    }
  }
  if (!table.empty()) parse_error(line_no, fmt::format("unterminated table mpc.{}", table));
  return out;
}

void require_columns(const TableRow& row, size_t count, const char* table) {
  if (row.values.size() < count) {
    parse_error(row.line, fmt::format("mpc.{} row has {} columns, needs {}", table,
                                      row.values.size(), count));
  }
}

NetworkCase from_matpower(std::string_view text) {
  const MatpowerTables mp = read_matpower(text);
  const double base = mp.base_mva.value_or(100.0);
  if (!(base > 0.0)) parse_error(0, "baseMVA must be positive");
  auto table = [&](const std::string& name) -> const std::vector<TableRow>& {
    auto it = mp.tables.find(name);
    if (it == mp.tables.end()) parse_error(0, fmt::format("missing table mpc.{}", name));
    return it->second;
  };
  const auto& bus = table("bus");
  const auto& gen = table("gen");
  const auto& branch = table("branch");
  const std::vector<TableRow> no_cost;
  auto cost_it = mp.tables.find("gencost");
  const auto& gencost = cost_it == mp.tables.end() ? no_cost : cost_it->second;

  NetworkCase net;
  net.name = "matpower";
  net.nodes = static_cast<int>(bus.size());
  if (net.nodes == 0) parse_error(0, "mpc.bus is empty");
  std::map<long long, int> index;
  net.demand = Eigen::VectorXd::Zero(net.nodes);
  for (int i = 0; i < net.nodes; ++i) {
    require_columns(bus[i], 3, "bus");
    const auto id = static_cast<long long>(bus[i].values[0]);
    if (!index.emplace(id, i).second) {
      parse_error(bus[i].line, fmt::format("duplicate bus id {}", id));
    }
    net.demand(i) = bus[i].values[2] / base;
  }
  auto lookup = [&](double id, int line) {
    auto it = index.find(static_cast<long long>(id));
    if (it == index.end()) parse_error(line, fmt::format("unknown bus id {}", id));
    return it->second;
  };

  net.p_min = Eigen::VectorXd::Zero(net.nodes);
  net.p_max = Eigen::VectorXd::Zero(net.nodes);
  net.c1 = Eigen::VectorXd::Zero(net.nodes);
  net.c2 = Eigen::VectorXd::Zero(net.nodes);
  std::vector<bool> has_cost(net.nodes, false);
  if (!gencost.empty() && gencost.size() < gen.size()) {
    parse_error(gencost.back().line, "mpc.gencost has fewer rows than mpc.gen");
  }
  for (size_t g = 0; g < gen.size(); ++g) {
    const TableRow& row = gen[g];
    require_columns(row, 10, "gen");
    if (row.values[7] <= 0.0) continue;
    const int i = lookup(row.values[0], row.line);
    net.p_max(i) += row.values[8] / base;
    net.p_min(i) += row.values[9] / base;
    if (gencost.empty() || has_cost[i]) continue;
    const TableRow& cost = gencost[g];
    require_columns(cost, 4, "gencost");
    if (cost.values[0] != 2.0) {
      parse_error(cost.line, "only polynomial gencost (model 2) is supported");
    }
    const int ncost = static_cast<int>(cost.values[3]);
    if (ncost < 1 || ncost > 3) {
      parse_error(cost.line, fmt::format("gencost with {} coefficients is unsupported", ncost));
    }
    require_columns(cost, 4 + ncost, "gencost");
    // Coefficients run from the highest order down to c0.
    const double* c = cost.values.data() + 4;
    if (ncost == 3) {
      net.c2(i) = c[0] * base * base;
      net.c1(i) = c[1] * base;
    } else if (ncost == 2) {
      net.c1(i) = c[0] * base;
    }
    has_cost[i] = true;
  }

  for (const TableRow& row : branch) {
    require_columns(row, 6, "branch");
    if (row.values.size() > 10 && row.values[10] <= 0.0) continue;
    const double x = row.values[3];
    if (x == 0.0) parse_error(row.line, "branch reactance x = 0 gives an infinite weight");
    if (x < 0.0) parse_error(row.line, "branch reactance must be positive");
    Edge e;
    e.from = lookup(row.values[0], row.line);
    e.to = lookup(row.values[1], row.line);
    e.beta = 1.0 / x;
    const double rate = row.values[5];
    if (rate > 0.0) {
      e.f_max = rate / base;
      e.f_min = -rate / base;
    }
    net.edges.push_back(e);
  }
  return net;
}

Eigen::VectorXd json_vector(const nlohmann::json& doc, const char* key, int size) {
  if (!doc.contains(key)) {
    throw Error(ErrorCode::kParseError, fmt::format("missing field '{}'", key));
  }
  const auto& arr = doc.at(key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != size) {
    throw Error(ErrorCode::kParseError,
                fmt::format("field '{}' must be an array of {} numbers", key, size));
  }
  Eigen::VectorXd out(size);
  for (int i = 0; i < size; ++i) {
    if (!arr[i].is_number()) {
      throw Error(ErrorCode::kParseError, fmt::format("field '{}'[{}] is not a number", key, i));
    }
    out(i) = arr[i].get<double>();
  }
  return out;
}

double json_limit(const nlohmann::json& edge, const char* key, double fallback, size_t idx) {
  if (!edge.contains(key) || edge.at(key).is_null()) return fallback;
  if (!edge.at(key).is_number()) {
    throw Error(ErrorCode::kParseError, fmt::format("edges[{}].{} is not a number", idx, key));
  }
  return edge.at(key).get<double>();
}

NetworkCase from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "case must be a JSON object");
  NetworkCase net;
  net.name = doc.value("name", std::string("json"));
  if (!doc.contains("nodes") || !doc.at("nodes").is_number_integer()) {
    throw Error(ErrorCode::kParseError, "field 'nodes' must be an integer");
  }
  net.nodes = doc.at("nodes").get<int>();
  if (net.nodes < 1) throw Error(ErrorCode::kParseError, "field 'nodes' must be positive");
  net.p_min = json_vector(doc, "p_min", net.nodes);
  net.p_max = json_vector(doc, "p_max", net.nodes);
  net.c1 = json_vector(doc, "c1", net.nodes);
  net.c2 = json_vector(doc, "c2", net.nodes);
  net.demand = json_vector(doc, "demand", net.nodes);
  if (!doc.contains("edges") || !doc.at("edges").is_array()) {
    throw Error(ErrorCode::kParseError, "field 'edges' must be an array");
  }
  const auto& edges = doc.at("edges");
  for (size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    for (const char* key : {"from", "to", "beta"}) {
      if (!e.contains(key) || !e.at(key).is_number()) {
        throw Error(ErrorCode::kParseError, fmt::format("edges[{}].{} missing", k, key));
      }
    }
    Edge edge;
    edge.from = e.at("from").get<int>();
    edge.to = e.at("to").get<int>();
    edge.beta = e.at("beta").get<double>();
    edge.f_min = json_limit(e, "f_min", -kInf, k);
    edge.f_max = json_limit(e, "f_max", kInf, k);
    net.edges.push_back(edge);
  }
  return net;
}

}  // namespace

void validate_case(const NetworkCase& net) {
  const int n = net.nodes;
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSpec, msg); };
  if (n < 1) bad("network has no nodes");
  if (net.p_min.size() != n || net.p_max.size() != n || net.c1.size() != n ||
      net.c2.size() != n || net.demand.size() != n) {
    bad("per-node vectors must have one entry per node");
  }
  for (int i = 0; i < n; ++i) {
    if (net.p_min(i) > net.p_max(i)) bad(fmt::format("node {} has p_min > p_max", i));
    if (net.c2(i) < 0.0) bad(fmt::format("node {} has negative c2", i));
  }
  std::vector<std::vector<int>> adj(n);
  for (size_t k = 0; k < net.edges.size(); ++k) {
    const Edge& e = net.edges[k];
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n || e.from == e.to) {
      bad(fmt::format("edge {} has invalid endpoints", k));
    }
    if (!(e.beta > 0.0) || !std::isfinite(e.beta)) bad(fmt::format("edge {} needs beta > 0", k));
    if (e.f_min > e.f_max || e.f_min > 0.0 || e.f_max < 0.0) {
      bad(fmt::format("edge {} needs f_min <= 0 <= f_max", k));
    }
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        q.push(v);
      }
    }
  }
  if (reached != n) {
    throw Error(ErrorCode::kConnectivityError,
                fmt::format("network is disconnected: {} of {} nodes reachable", reached, n));
  }
}

NetworkCase parse_case(std::string_view text, CaseFormat format) {
  NetworkCase net = format == CaseFormat::kJson ? from_json(text) : from_matpower(text);
  validate_case(net);
  return net;
}

NetworkCase load_case(const std::string& path, CaseFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, fmt::format("cannot open '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  NetworkCase net = parse_case(buf.str(), format);
  if (format == CaseFormat::kMatpower) {
    const size_t slash = path.find_last_of('/');
    std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
    net.name = stem.substr(0, stem.find('.'));
  }
  return net;
}

NetworkCase load_case(const std::string& path) {
  return load_case(path, guess_case_format(path));
}

std::string to_json(const NetworkCase& net) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  auto limit = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return nullptr;
    return v;
  };
  nlohmann::json doc;
  doc["name"] = net.name;
  doc["nodes"] = net.nodes;
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : net.edges) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"beta", e.beta},
                     {"f_min", limit(e.f_min)},
                     {"f_max", limit(e.f_max)}});
  }
  doc["edges"] = edges;
  doc["p_min"] = vec(net.p_min);
  doc["p_max"] = vec(net.p_max);
  doc["c1"] = vec(net.c1);
  doc["c2"] = vec(net.c2);
  doc["demand"] = vec(net.demand);
  return doc.dump(2);
}

Eigen::MatrixXd laplacian(const NetworkCase& net) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(net.nodes, net.nodes);
  for (const Edge& e : net.edges) {
    B(e.from, e.from) += e.beta;
    B(e.to, e.to) += e.beta;
    B(e.from, e.to) -= e.beta;
    B(e.to, e.from) -= e.beta;
  }
  return B;
}

AllocationProgram build_program(const NetworkCase& net, int reference) {
  validate_case(net);
  const int N = net.nodes;
  if (reference < 0 || reference >= N) {
    throw Error(ErrorCode::kInvalidSpec, fmt::format("reference node {} out of range", reference));
  }
  AllocationProgram out;
  out.nodes = N;
  out.reference = reference;
  out.supply = net.supply_nodes();
  ConvexProgram& prog = out.program;
  const int n = 2 * N;
  prog.c1 = Eigen::VectorXd::Zero(n);
  prog.c2 = Eigen::VectorXd::Zero(n);
  prog.c1.head(N) = net.c1;
  prog.c2.head(N) = net.c2;

  const Eigen::MatrixXd B = laplacian(net);
  std::vector<int> fixed;
  for (int i = 0; i < N; ++i) {
    if (net.p_max(i) <= net.p_min(i)) fixed.push_back(i);
  }
  const int l = N + 1 + static_cast<int>(fixed.size());
  prog.G = Eigen::MatrixXd::Zero(l, n);
  prog.d = Eigen::VectorXd::Zero(l);
  prog.G.block(0, 0, N, N).setIdentity();
  prog.G.block(0, N, N, N) = -B;
  prog.d.head(N) = net.demand;
  prog.G(N, N + reference) = 1.0;
  for (size_t k = 0; k < fixed.size(); ++k) {
    prog.G(N + 1 + k, fixed[k]) = 1.0;
    prog.d(N + 1 + k) = net.p_max(fixed[k]);
  }

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int i : out.supply) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r(i) = 1.0;
    rows.push_back(r);
    rhs.push_back(net.p_max(i));
    rows.push_back(-r);
    rhs.push_back(-net.p_min(i));
  }
  for (const Edge& e : net.edges) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r(N + e.from) = e.beta;
    r(N + e.to) = -e.beta;
    if (std::isfinite(e.f_max)) {
      rows.push_back(r);
      rhs.push_back(e.f_max);
    }
    if (std::isfinite(e.f_min)) {
      rows.push_back(-r);
      rhs.push_back(-e.f_min);
    }
  }
  prog.A.resize(static_cast<int>(rows.size()), n);
  prog.b.resize(static_cast<int>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    prog.A.row(k) = rows[k];
    prog.b(k) = rhs[k];
  }
  return out;
}

namespace {

double uniform(std::mt19937_64& engine, double lo, double hi) {
  const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

NetworkCase random_instance(const NetworkCase& topology, std::uint64_t seed) {
  NetworkCase net = topology;
  std::mt19937_64 engine(seed);
  for (int i = 0; i < net.nodes; ++i) net.c1(i) = uniform(engine, 1.0, 3.0);
  for (int i = 0; i < net.nodes; ++i) net.c2(i) = uniform(engine, 0.1, 0.3);
  for (int i = 0; i < net.nodes; ++i) net.demand(i) = uniform(engine, 0.5, 1.0);
  return net;
}

SensitivityReport sensitivity_probe(const NetworkCase& net, double alpha, int trials,
                                    std::uint64_t seed, const SolverOptions& options) {
  if (alpha < 0.0) throw Error(ErrorCode::kInvalidSpec, "alpha must be nonnegative");
  SensitivityReport report;
  report.alpha = alpha;
  report.histogram.assign(11, 0);
  AllocationProgram alloc = build_program(net);
  const int N = net.nodes;
  const BaseSolution base = solve_base(alloc.program, options);
  if (base.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("base solve ended {}", status_name(base.status)));
  }
  std::mt19937_64 engine(seed);
  for (int t = 0; t < trials; ++t) {
    const int node = static_cast<int>(engine() % static_cast<std::uint64_t>(N));
    const double first = (engine() & 1) ? 1.0 : -1.0;
    std::optional<BaseSolution> other;
    for (double sign : {first, -first}) {
      ConvexProgram perturbed = alloc.program;
      perturbed.d(node) += sign * alpha;
      BaseSolution sol = solve_base(perturbed, options);
      if (sol.status == SolveStatus::kOptimal) {
        other = std::move(sol);
        break;
      }
      if (sol.status != SolveStatus::kInfeasible) {
        throw Error(ErrorCode::kSolverFailure,
                    fmt::format("perturbed solve ended {}", status_name(sol.status)));
      }
    }
    if (!other) {
      ++report.skipped;
      continue;
    }
    const double diff = (base.z.head(N) - other->z.head(N)).lpNorm<1>();
    report.observed.push_back(diff);
    report.max_observed = std::max(report.max_observed, diff);
    int bin = alpha > 0.0 ? static_cast<int>(diff / (0.2 * alpha)) : 0;
    report.histogram[std::min(bin, 10)] += 1;
    if (diff > alpha + 1e-6) {
      ++report.exceedances;
      report.warnings.push_back(fmt::format(
          "trial {}: node {} moved supplies by {:.9g} > alpha {:.9g}", t, node, diff, alpha));
    }
  }
  return report;
}

}  // namespace dpcc
