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

#include "dpcc/bench.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dpcc/error.h"

namespace dpcc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.6g}", v);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int parse_index(std::string_view s) {
  s = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kUsageError, fmt::format("bad index '{}'", s));
  }
  return v;
}

double parse_number(std::string_view s) {
  s = trim(s);
  std::string copy(s);
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(copy, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (copy.empty() || used != copy.size()) {
    throw Error(ErrorCode::kUsageError, fmt::format("bad number '{}'", s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Unbiased enough for index sampling and stable across standard libraries.
std::uint64_t bounded(std::mt19937_64& engine, std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(engine()) * bound) >> 64);
}

}  // namespace

double empirical_violation(const Recourse& recourse, const ConvexProgram& prog,
                           int n_samples, std::uint64_t seed) {
  if (n_samples <= 0 || prog.m() == 0) return 0.0;
  const Eigen::VectorXd slack = prog.A * recourse.z_tilde - prog.b;
  const Eigen::MatrixXd AZ = prog.A * recourse.Z;
  NoiseSampler sampler(recourse.noise, seed);
  int count = 0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd xi = sampler.next();
    if ((slack + AZ * xi).maxCoeff() > kCertificateTolerance) ++count;
  }
  return static_cast<double>(count) / n_samples;
}

double optimality_loss(const Recourse& recourse, const ConvexProgram& prog,
                       double base_cost) {
  if (std::abs(base_cost) < 1e-12) {
    throw Error(ErrorCode::kDegenerateBase, "base optimum has zero cost");
  }
  const double e = expected_cost(prog, recourse.z_tilde, recourse.Z, recourse.noise.covariance);
  return 100.0 * (e - base_cost) / std::abs(base_cost);
}

double optimality_loss(const Recourse& recourse, const ConvexProgram& prog,
                       const SolverOptions& options) {
  const BaseSolution base = solve_base(prog, options);
  if (base.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("base solve ended {}", status_name(base.status)));
  }
  return optimality_loss(recourse, prog, prog.cost(base.z));
}

double op_violation(const ConvexProgram& prog, const QuerySpec& query,
                    const Eigen::VectorXd& z_star, const NoiseSpec& compact_noise,
                    int n_samples, std::uint64_t seed, const SolverOptions& options) {
  if (n_samples <= 0) return 0.0;
  const Eigen::MatrixXd E = query.selector(prog.n());
  const Eigen::VectorXd answer = query_answer(query, z_star);
  NoiseSampler sampler(compact_noise, seed);
  int count = 0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd released = answer + sampler.next();
    if (!pinned_feasible(prog, E, released, options)) ++count;
  }
  return static_cast<double>(count) / n_samples;
}

QuerySpec parse_query(std::string_view text) {
  const size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kUsageError,
                fmt::format("query '{}' must look like identity:0,2 or sum:0,1|2,3", text));
  }
  const std::string_view kind = trim(text.substr(0, colon));
  const std::string_view body = text.substr(colon + 1);
  auto indices = [](std::string_view list) {
    std::vector<int> out;
    for (std::string_view part : split(list, ',')) out.push_back(parse_index(part));
    return out;
  };
  if (kind == "identity") return QuerySpec::identity(indices(body));
  if (kind == "sum") {
    std::vector<std::vector<int>> groups;
    for (std::string_view g : split(body, '|')) groups.push_back(indices(g));
    return QuerySpec::sum(std::move(groups));
  }
  throw Error(ErrorCode::kUsageError, fmt::format("unknown query kind '{}'", kind));
}

std::vector<double> parse_grid(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() == 1) return {parse_number(parts[0])};
  if (parts.size() != 3) {
    throw Error(ErrorCode::kUsageError, fmt::format("grid '{}' must be a:b:step", text));
  }
  const double a = parse_number(parts[0]);
  const double b = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  if (!(step > 0.0) || b < a) {
    throw Error(ErrorCode::kUsageError, fmt::format("grid '{}' is empty", text));
  }
  const int count = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(std::min(b, a + i * step));
  return out;
}

std::vector<int> sample_subset(const std::vector<int>& pool, double fraction,
                               std::uint64_t seed) {
  if (pool.empty()) return {};
  const int take = std::max(
      1, static_cast<int>(std::floor(fraction * static_cast<double>(pool.size()) + 1e-12)));
  std::vector<int> items = pool;
  std::mt19937_64 engine(seed);
  for (int i = 0; i < take; ++i) {
    const auto j = i + static_cast<int>(bounded(engine, items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(take);
  std::sort(items.begin(), items.end());
  return items;
}

std::vector<std::vector<int>> partition(const std::vector<int>& indices, int groups) {
  if (groups < 1 || groups > static_cast<int>(indices.size())) {
    throw Error(ErrorCode::kInvalidQuery,
                fmt::format("cannot split {} indices into {} groups", indices.size(), groups));
  }
  std::vector<std::vector<int>> out(groups);
  const size_t n = indices.size();
  for (int g = 0; g < groups; ++g) {
    const size_t lo = n * g / groups;
    const size_t hi = n * (g + 1) / groups;
    out[g].assign(indices.begin() + lo, indices.begin() + hi);
  }
  return out;
}

void validate_bench(const BenchConfig& c) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSpec, msg); };
  if (!(c.fraction > 0.0 && c.fraction < 1.0)) bad("fraction must lie in (0, 1)");
  if (c.runs < 1) bad("runs must be at least 1");
  if (c.oos_samples < 1) bad("oos must be at least 1");
  if (c.groups < 1) bad("groups must be at least 1");
  if (!(c.eta > 0.0 && c.eta < 1.0)) bad("eta must lie in (0, 1)");
  if (!(c.beta > 0.0 && c.beta < 1.0)) bad("beta must lie in (0, 1)");
  if (!c.run_op && !c.run_analytic && !c.run_scenario) bad("no mechanism selected");
  for (double phi : c.phi_grid) {
    if (!(phi >= 0.0 && phi <= 1.0)) bad("phi must lie in [0, 1]");
  }
}

BenchConfig parse_bench_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("config: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "config: expected an object");
  BenchConfig c;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "case") {
        c.case_path = v.get<std::string>();
      } else if (key == "format") {
        c.format = parse_case_format(v.get<std::string>());
      } else if (key == "query") {
        c.query = parse_query(v.get<std::string>());
        c.query_kind = c.query->kind;
      } else if (key == "kind") {
        const auto k = v.get<std::string>();
        if (k != "identity" && k != "sum") {
          throw Error(ErrorCode::kParseError, fmt::format("config: unknown kind '{}'", k));
        }
        c.query_kind = k == "sum" ? QueryKind::kSum : QueryKind::kIdentity;
      } else if (key == "fraction") {
        c.fraction = v.get<double>();
      } else if (key == "groups") {
        c.groups = v.get<int>();
      } else if (key == "epsilon") {
        c.privacy.epsilon = v.get<double>();
      } else if (key == "delta") {
        c.privacy.delta = v.get<double>();
      } else if (key == "alpha") {
        c.privacy.alpha = v.get<double>();
      } else if (key == "noise") {
        c.noise = parse_noise_kind(v.get<std::string>());
      } else if (key == "eta") {
        c.eta = v.get<double>();
      } else if (key == "beta") {
        c.beta = v.get<double>();
      } else if (key == "mechanisms") {
        c.run_op = c.run_analytic = c.run_scenario = false;
        for (const auto& m : v) {
          const auto name = m.get<std::string>();
          if (name == "op") {
            c.run_op = true;
          } else if (name == "analytic") {
            c.run_analytic = true;
          } else if (name == "scenario") {
            c.run_scenario = true;
          } else {
            throw Error(ErrorCode::kParseError, fmt::format("config: unknown mechanism '{}'", name));
          }
        }
      } else if (key == "random_instances") {
        c.random_instances = v.get<bool>();
      } else if (key == "variance") {
        c.variance = parse_variance_mode(v.get<std::string>());
      } else if (key == "phi") {
        if (v.is_string()) {
          c.phi_grid = parse_grid(v.get<std::string>());
        } else {
          c.phi_grid = v.get<std::vector<double>>();
        }
      } else if (key == "runs") {
        c.runs = v.get<int>();
      } else if (key == "oos") {
        c.oos_samples = v.get<int>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else {
        throw Error(ErrorCode::kParseError, fmt::format("config: unknown key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("config: {}", e.what()));
  }
  return c;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, fmt::format("cannot read {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bench_config(ss.str());
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

BenchResult run_bench(const BenchConfig& config, const NetworkCase& network) {
  validate_bench(config);
  validate_case(network);
  const bool sum = config.query ? config.query->kind == QueryKind::kSum
                                : config.query_kind == QueryKind::kSum;
  const std::string prefix = sum ? "PSQ" : "PIQ";
  std::vector<std::string> names;
  if (config.run_op) names.push_back("OP");
  if (config.run_analytic) names.push_back(prefix + "-a");
  if (config.run_scenario) names.push_back(prefix + "-s");

  BenchResult result;
  std::vector<double> seconds(names.size(), 0.0);
  VarianceSpec var;
  if (config.variance != VarianceMode::kNone) {
    var.mode = config.variance;
    var.phi = config.phi_grid.empty() ? 0.0 : config.phi_grid.front();
  }

  for (int run = 0; run < config.runs; ++run) {
    const std::uint64_t run_seed = derive_seed(config.seed, run);
    const std::uint64_t oos_seed = derive_seed(run_seed, 3);
    std::vector<RunRecord> records(names.size());
    for (size_t k = 0; k < names.size(); ++k) {
      records[k].run = run;
      records[k].mechanism = names[k];
      records[k].loss = kNaN;
    }
    auto fail_all = [&](const std::string& why) {
      for (auto& r : records) {
        r.ok = false;
        r.error = why;
      }
    };
    try {
      const NetworkCase instance =
          config.random_instances ? random_instance(network, derive_seed(run_seed, 0)) : network;
      const AllocationProgram ap = build_program(instance);
      const ConvexProgram& prog = ap.program;
      QuerySpec query;
      if (config.query) {
        query = *config.query;
      } else {
        const auto subset =
            sample_subset(ap.supply, config.fraction, derive_seed(run_seed, 1));
        query = sum ? QuerySpec::sum(partition(subset, config.groups))
                    : QuerySpec::identity(subset);
      }
      validate_query(query, prog.n());
      const BaseSolution base = solve_base(prog, config.solver);
      if (base.status != SolveStatus::kOptimal) {
        throw Error(ErrorCode::kSolverFailure,
                    fmt::format("base solve ended {}", status_name(base.status)));
      }
      const double base_cost = prog.cost(base.z);
      const NoiseSpec noise = query_noise(config.privacy, config.noise, query, prog.n());

      for (size_t k = 0; k < names.size(); ++k) {
        RunRecord& rec = records[k];
        const auto start = std::chrono::steady_clock::now();
        try {
          if (names[k] == "OP") {
            const NoiseSpec compact =
                calibrate(config.privacy, config.noise, query.noise_dim());
            rec.violation = 100.0 * op_violation(prog, query, base.z, compact,
                                                 config.oos_samples, oos_seed, config.solver);
          } else {
            FeasibilitySpec feas;
            feas.eta = config.eta;
            feas.beta = config.beta;
            feas.mode = names[k].back() == 'a' ? ReformMode::kAnalytic : ReformMode::kScenario;
            feas.seed = derive_seed(run_seed, 2);
            const Recourse r = solve_recourse(prog, query, noise, feas, var, config.solver);
            rec.violation = 100.0 * empirical_violation(r, prog, config.oos_samples, oos_seed);
            rec.loss = optimality_loss(r, prog, base_cost);
          }
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.ok = false;
          rec.error = e.what();
        }
        seconds[k] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
      }
    } catch (const std::exception& e) {
      fail_all(e.what());
    }
    for (auto& r : records) result.records.push_back(std::move(r));
  }

  for (size_t k = 0; k < names.size(); ++k) {
    BenchRow row;
    row.mechanism = names[k];
    row.wall_seconds = seconds[k];
    std::vector<double> viol, loss, within;
    for (const RunRecord& r : result.records) {
      if (r.mechanism != names[k]) continue;
      if (!r.ok) {
        ++row.failed;
        continue;
      }
      ++row.completed;
      viol.push_back(r.violation);
      const double p = r.violation / 100.0;
      within.push_back(100.0 * std::sqrt(p * (1.0 - p) / config.oos_samples));
      if (!std::isnan(r.loss)) loss.push_back(r.loss);
    }
    row.violation_mean = mean(viol);
    row.violation_std = viol.empty() ? kNaN : sample_std(viol);
    row.violation_within_std = mean(within);
    row.loss_mean = mean(loss);
    row.loss_std = loss.empty() ? kNaN : sample_std(loss);
    result.rows.push_back(row);
  }
  return result;
}

BenchResult run_bench(const BenchConfig& config) {
  if (config.case_path.empty()) throw Error(ErrorCode::kUsageError, "no case given");
  const NetworkCase network = config.format ? load_case(config.case_path, *config.format)
                                            : load_case(config.case_path);
  return run_bench(config, network);
}

std::string bench_csv(const BenchResult& result) {
  std::string out =
      "mechanism,runs,failed,violation_mean,violation_std,violation_within_std,"
      "loss_mean,loss_std\n";
  for (const BenchRow& r : result.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.mechanism, r.completed, r.failed,
                       num(r.violation_mean), num(r.violation_std),
                       num(r.violation_within_std), num(r.loss_mean), num(r.loss_std));
  }
  return out;
}

std::string runs_csv(const BenchResult& result) {
  std::string out = "run,mechanism,ok,violation,loss,error\n";
  for (const RunRecord& r : result.records) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{}\n", r.run, r.mechanism, r.ok ? 1 : 0,
                       r.ok ? num(r.violation) : "nan", r.ok ? num(r.loss) : "nan",
                       err.empty() ? "" : "\"" + err + "\"");
  }
  return out;
}

std::string pareto_csv(const std::vector<ParetoRow>& rows, VarianceMode mode) {
  const bool cost = mode == VarianceMode::kCostVariance;
  std::string out = fmt::format("phi,expected_cost,expected_loss,{}\n",
                                cost ? "loss_variance" : "solution_variance");
  for (const ParetoRow& r : rows) {
    out += fmt::format("{},{},{},{}\n", num(r.phi), num(r.expected_cost),
                       num(r.expected_loss),
                       num(cost ? r.cost_variance : r.solution_variance));
  }
  return out;
}

}  // namespace dpcc
