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

#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "dpcc/bench.h"
#include "dpcc/error.h"
#include "dpcc/mechanisms.h"
#include "dpcc/network.h"

namespace dpcc::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string case_path;
  std::string format;
  std::string query;
  std::string kind = "identity";
  double fraction = 0.3;
  int groups = 1;
  double epsilon = 1.0;
  double delta = 0.0;
  double alpha = 0.1;
  std::string noise = "laplace";
  double eta = 0.025;
  double beta = 0.01;
  double mu = 0.001;
  std::string phi;
  std::string variance;
  std::string reform = "analytic";
  std::string mechanism;
  int runs = 20;
  int oos = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string runs_out;
  std::string config;
  bool linear_cost = false;
  bool reveal = false;
  bool fixed_instance = false;
};

// Options shared by every subcommand; the map records which were given.
void add_common(CLI::App* app, Options& o, std::map<std::string, CLI::Option*>& given) {
  given["case"] = app->add_option("--case", o.case_path, "Network case file (.m or .json)");
  given["format"] = app->add_option("--format", o.format, "Case format: matpower or json");
  given["query"] = app->add_option("--query", o.query,
                                   "Explicit query, e.g. identity:0,2 or sum:0,1|2,3");
  given["kind"] = app->add_option("--kind", o.kind, "Sampled query kind: identity or sum");
  given["fraction"] = app->add_option("--fraction", o.fraction,
                                      "Fraction of supplies in a sampled query");
  given["groups"] = app->add_option("--groups", o.groups, "Groups of a sampled sum query");
  given["epsilon"] = app->add_option("--epsilon", o.epsilon, "Privacy loss epsilon");
  given["delta"] = app->add_option("--delta", o.delta, "Privacy delta (Gaussian noise)");
  given["alpha"] = app->add_option("--alpha", o.alpha, "Indistinguishability alpha");
  given["noise"] = app->add_option("--noise", o.noise, "laplace or gaussian");
  given["eta"] = app->add_option("--eta", o.eta, "Joint violation budget");
  given["beta"] = app->add_option("--beta", o.beta, "Scenario confidence parameter");
  given["seed"] = app->add_option("--seed", o.seed, "Master seed");
  given["out"] = app->add_option("--out", o.out, "Output file (stdout when absent)");
}

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorCode::kUsageError, msg); }

NetworkCase load_network(const Options& o) {
  if (o.case_path.empty()) usage("--case is required");
  return o.format.empty() ? load_case(o.case_path)
                          : load_case(o.case_path, parse_case_format(o.format));
}

QueryKind parse_kind(const std::string& kind) {
  if (kind == "identity") return QueryKind::kIdentity;
  if (kind == "sum") return QueryKind::kSum;
  usage(fmt::format("unknown query kind '{}'", kind));
}

QuerySpec make_query(const Options& o, const AllocationProgram& ap) {
  if (!o.query.empty()) return parse_query(o.query);
  if (!(o.fraction > 0.0 && o.fraction < 1.0)) usage("--fraction must lie in (0, 1)");
  const auto subset = sample_subset(ap.supply, o.fraction, derive_seed(o.seed, 1));
  if (parse_kind(o.kind) == QueryKind::kSum) return QuerySpec::sum(partition(subset, o.groups));
  return QuerySpec::identity(subset);
}

PrivacyParams privacy_of(const Options& o) {
  PrivacyParams p;
  p.epsilon = o.epsilon;
  p.delta = o.delta;
  p.alpha = o.alpha;
  return p;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out);
  if (!file) throw Error(ErrorCode::kUsageError, fmt::format("cannot write {}", o.out));
  file << text;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json query_json(const QuerySpec& q) {
  if (q.kind == QueryKind::kIdentity) return {{"kind", "identity"}, {"released", q.released}};
  return {{"kind", "sum"}, {"groups", q.groups}};
}

int cmd_solve(const Options& o, std::ostream& out) {
  const NetworkCase net = load_network(o);
  const AllocationProgram ap = build_program(net);
  const BaseSolution base = solve_base(ap.program);
  if (base.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("base solve ended {}", status_name(base.status)));
  }
  json doc = {{"case", net.name},
              {"status", status_name(base.status)},
              {"objective", ap.program.cost(base.z)},
              {"p", vec(base.z.head(ap.nodes))},
              {"theta", vec(base.z.tail(ap.nodes))}};
  emit(o, doc.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_check(const Options& o, std::ostream& out) {
  const NetworkCase net = load_network(o);
  const AllocationProgram ap = build_program(net);
  const ValidationReport report = validate_program(ap.program);
  std::string text = fmt::format("valid: {}\n", report.valid());
  for (const auto& issue : report.issues) text += fmt::format("issue: {}\n", issue.message);
  for (const auto& w : report.warnings) text += fmt::format("warning: {}\n", w);
  if (report.valid()) {
    const QuerySpec query = make_query(o, ap);
    validate_query(query, ap.program.n());
    text += fmt::format("implementable: {}\n", check_implementable(ap.program, query));
  }
  emit(o, text, out);
  return kExitOk;
}

int cmd_release(const Options& o, std::ostream& out) {
  const NetworkCase net = load_network(o);
  const AllocationProgram ap = build_program(net);
  const QuerySpec query = make_query(o, ap);
  MechanismConfig config;
  config.privacy = privacy_of(o);
  config.noise = parse_noise_kind(o.noise);
  config.feas.eta = o.eta;
  config.feas.beta = o.beta;
  config.feas.mode = parse_reform_mode(o.reform);
  config.feas.seed = derive_seed(o.seed, 2);
  if (!o.variance.empty()) {
    config.var.mode = parse_variance_mode(o.variance);
    const auto grid = parse_grid(o.phi.empty() ? "0" : o.phi);
    if (grid.size() != 1) usage("release takes a single --phi value");
    config.var.phi = grid.front();
  }
  const std::uint64_t seed = derive_seed(o.seed, 3);
  std::string mech = o.mechanism;
  if (mech.empty()) mech = query.kind == QueryKind::kIdentity ? "piq" : "psq";
  Release r;
  if (mech == "piq" || mech == "psq") {
    const bool want_sum = mech == "psq";
    if (want_sum != (query.kind == QueryKind::kSum)) {
      usage(fmt::format("mechanism {} does not match the query kind", mech));
    }
    r = private_query(ap.program, query, config, seed);
  } else if (mech == "iterative") {
    r = iterative(ap.program, query, config, o.mu, seed);
  } else if (mech == "op") {
    r = output_perturbation(ap.program, query, config, seed);
  } else {
    usage(fmt::format("unknown mechanism '{}'", mech));
  }
  const Provenance& p = r.provenance;
  json doc = {{"mechanism", p.mechanism},
              {"query", query_json(query)},
              {"values", vec(r.values)},
              {"feasible", r.feasible},
              {"max_violation", r.feasible ? json(r.max_violation) : json(nullptr)},
              {"iterations", r.iterations},
              {"provenance",
               {{"seed", p.seed},
                {"scenario_seed", p.scenario_seed},
                {"epsilon", p.epsilon},
                {"delta", p.delta},
                {"alpha", p.alpha},
                {"eta", p.eta},
                {"mu", p.mu},
                {"phi", p.phi},
                {"reform", reform_mode_name(p.reform)},
                {"noise", noise_kind_name(p.noise)},
                {"noise_scale", p.noise_scale}}}};
  // The noise draw and the full sampled solution leak d.
  if (o.reveal) {
    doc["xi"] = vec(r.xi);
    doc["z_hat"] = r.z_hat.size() ? vec(r.z_hat) : json(nullptr);
  }
  emit(o, doc.dump(2) + "\n", out);
  return kExitOk;
}

BenchConfig bench_config(const Options& o, const std::map<std::string, CLI::Option*>& given) {
  BenchConfig c = o.config.empty() ? BenchConfig{} : load_bench_config(o.config);
  auto has = [&](const char* key) {
    const auto it = given.find(key);
    return it != given.end() && it->second->count() > 0;
  };
  if (has("case")) c.case_path = o.case_path;
  if (has("format")) c.format = parse_case_format(o.format);
  if (has("query")) {
    c.query = parse_query(o.query);
    c.query_kind = c.query->kind;
  }
  if (has("kind")) c.query_kind = parse_kind(o.kind);
  if (has("fraction")) c.fraction = o.fraction;
  if (has("groups")) c.groups = o.groups;
  if (has("epsilon")) c.privacy.epsilon = o.epsilon;
  if (has("delta")) c.privacy.delta = o.delta;
  if (has("alpha")) c.privacy.alpha = o.alpha;
  if (has("noise")) c.noise = parse_noise_kind(o.noise);
  if (has("eta")) c.eta = o.eta;
  if (has("beta")) c.beta = o.beta;
  if (has("seed")) c.seed = o.seed;
  if (has("runs")) c.runs = o.runs;
  if (has("oos")) c.oos_samples = o.oos;
  if (has("fixed")) c.random_instances = false;
  if (has("variance")) c.variance = parse_variance_mode(o.variance);
  if (has("phi")) c.phi_grid = parse_grid(o.phi);
  if (has("mechanism")) {
    c.run_op = c.run_analytic = c.run_scenario = false;
    for (const auto& part : CLI::detail::split(o.mechanism, ',')) {
      if (part == "op") {
        c.run_op = true;
      } else if (part == "analytic") {
        c.run_analytic = true;
      } else if (part == "scenario") {
        c.run_scenario = true;
      } else {
        usage(fmt::format("unknown bench mechanism '{}'", part));
      }
    }
  }
  if (c.case_path.empty()) usage("--case is required");
  return c;
}

int cmd_bench(const Options& o, const std::map<std::string, CLI::Option*>& given,
              std::ostream& out) {
  const BenchConfig config = bench_config(o, given);
  const BenchResult result = run_bench(config);
  emit(o, bench_csv(result), out);
  if (!o.runs_out.empty()) {
    std::ofstream file(o.runs_out);
    if (!file) throw Error(ErrorCode::kUsageError, fmt::format("cannot write {}", o.runs_out));
    file << runs_csv(result);
  }
  if (!o.out.empty()) {
    for (const BenchRow& r : result.rows) {
      out << fmt::format("{:<6} runs {:>3} failed {:>3} violation {:8.4f}% loss {:8.4f}% "
                         "time {:.2f}s\n",
                         r.mechanism, r.completed, r.failed, r.violation_mean, r.loss_mean,
                         r.wall_seconds);
    }
  }
  return kExitOk;
}

int cmd_pareto(const Options& o, std::ostream& out) {
  const NetworkCase net = load_network(o);
  AllocationProgram ap = build_program(net);
  if (o.linear_cost) ap.program.c2.setZero();
  const QuerySpec query = make_query(o, ap);
  MechanismConfig config;
  config.privacy = privacy_of(o);
  config.noise = parse_noise_kind(o.noise);
  config.feas.eta = o.eta;
  config.feas.beta = o.beta;
  config.feas.mode = parse_reform_mode(o.reform);
  config.feas.seed = derive_seed(o.seed, 2);
  const VarianceMode mode = parse_variance_mode(o.variance.empty() ? "solution" : o.variance);
  const auto grid = parse_grid(o.phi.empty() ? "0:1:0.1" : o.phi);
  const auto rows = pareto_sweep(ap.program, query, config, mode, grid);
  emit(o, pareto_csv(rows, mode), out);
  return kExitOk;
}

std::string strip_category(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(error_code_name(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private chance-constrained allocation"};
  app.require_subcommand(1);
  Options o;
  std::map<std::string, CLI::Option*> given;

  auto* solve = app.add_subcommand("solve", "Solve the deterministic problem");
  auto* check = app.add_subcommand("check", "Validate a case and test query implementability");
  auto* release = app.add_subcommand("release", "Produce one private release");
  auto* bench = app.add_subcommand("bench", "Multi-run benchmark, CSV output");
  auto* pareto = app.add_subcommand("pareto", "Variance trade-off sweep, CSV output");
  // Options are shared; each subcommand owns its own copies of the flags.
  std::map<std::string, CLI::Option*> bench_given;
  for (CLI::App* sub : {solve, check, release, pareto}) {
    std::map<std::string, CLI::Option*> unused;
    add_common(sub, o, unused);
  }
  add_common(bench, o, bench_given);
  for (CLI::App* sub : {release, pareto}) {
    sub->add_option("--reform", o.reform, "analytic or scenario");
    sub->add_option("--variance", o.variance, "none, cost or solution");
    sub->add_option("--phi", o.phi, "Trade-off weight or grid a:b:step");
  }
  release->add_option("--mechanism", o.mechanism, "piq, psq, iterative or op");
  release->add_option("--mu", o.mu, "Failure budget of the iterative mechanism");
  release->add_flag("--reveal-internal", o.reveal,
                    "Also print the noise draw and sampled solution (not private)");
  pareto->add_flag("--linear-cost", o.linear_cost, "Drop quadratic cost terms");
  bench_given["mechanism"] = bench->add_option(
      "--mechanism", o.mechanism, "Comma list of op, analytic, scenario");
  bench_given["runs"] = bench->add_option("--runs", o.runs, "Independent runs");
  bench_given["oos"] = bench->add_option("--oos", o.oos, "Out-of-sample draws per run");
  bench_given["variance"] = bench->add_option("--variance", o.variance, "none, cost or solution");
  bench_given["phi"] = bench->add_option("--phi", o.phi, "Trade-off weight (first grid value)");
  bench_given["fixed"] = bench->add_flag("--fixed-instance", o.fixed_instance,
                                         "Use the case data as loaded in every run");
  bench->add_option("--runs-out", o.runs_out, "Per-run CSV output");
  bench->add_option("--config", o.config, "JSON config; flags override it");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[UsageError]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(o, out);
    if (*check) return cmd_check(o, out);
    if (*release) return cmd_release(o, out);
    if (*bench) return cmd_bench(o, bench_given, out);
    if (*pareto) return cmd_pareto(o, out);
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << strip_category(e) << "\n";
    return e.code() == ErrorCode::kUsageError ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error[Internal]: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dpcc::cli
