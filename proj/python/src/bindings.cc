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

// Python bindings for the dpcc core.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "dpcc/bench.h"
#include "dpcc/error.h"
#include "dpcc/mechanisms.h"
#include "dpcc/network.h"
#include "dpcc/noise.h"
#include "dpcc/problem.h"
#include "dpcc/reform.h"

namespace py = pybind11;
using namespace dpcc;

namespace {

std::string str(std::string_view v) { return std::string(v); }

}  // namespace

PYBIND11_MODULE(_dpcc, m) {
  m.doc() = "Differentially private chance-constrained optimization";

  // Errors surface as DpccError with the category in .code.
  static py::exception<Error> error_type(m, "DpccError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = str(error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("LAPLACE", NoiseKind::kLaplace)
      .value("GAUSSIAN", NoiseKind::kGaussian);
  py::enum_<QueryKind>(m, "QueryKind")
      .value("IDENTITY", QueryKind::kIdentity)
      .value("SUM", QueryKind::kSum);
  py::enum_<ReformMode>(m, "ReformMode")
      .value("ANALYTIC", ReformMode::kAnalytic)
      .value("SCENARIO", ReformMode::kScenario);
  py::enum_<VarianceMode>(m, "VarianceMode")
      .value("NONE", VarianceMode::kNone)
      .value("COST_VARIANCE", VarianceMode::kCostVariance)
      .value("SOLUTION_VARIANCE", VarianceMode::kSolutionVariance);
  py::enum_<DistributionClass>(m, "DistributionClass")
      .value("SYMMETRIC_UNIMODAL", DistributionClass::kSymmetricUnimodal)
      .value("GAUSSIAN", DistributionClass::kGaussian);

  // problem
  py::class_<ConvexProgram>(m, "ConvexProgram")
      .def(py::init<>())
      .def(py::init([](Eigen::VectorXd c1, Eigen::VectorXd c2, Eigen::MatrixXd A,
                       Eigen::VectorXd b, Eigen::MatrixXd G, Eigen::VectorXd d) {
             return ConvexProgram{std::move(c1), std::move(c2), std::move(A),
                                  std::move(b),  std::move(G),  std::move(d)};
           }),
           py::arg("c1"), py::arg("c2"), py::arg("A"), py::arg("b"), py::arg("G"), py::arg("d"))
      .def_readwrite("c1", &ConvexProgram::c1)
      .def_readwrite("c2", &ConvexProgram::c2)
      .def_readwrite("A", &ConvexProgram::A)
      .def_readwrite("b", &ConvexProgram::b)
      .def_readwrite("G", &ConvexProgram::G)
      .def_readwrite("d", &ConvexProgram::d)
      .def_property_readonly("n", &ConvexProgram::n)
      .def_property_readonly("m", &ConvexProgram::m)
      .def_property_readonly("l", &ConvexProgram::l)
      .def("cost", &ConvexProgram::cost)
      .def("__repr__", [](const ConvexProgram& p) { return describe(p); });
  m.def("require_valid", &require_valid);
  m.def("describe", &describe, py::arg("prog"), py::arg("reveal_sensitive") = false);

  py::class_<QuerySpec>(m, "QuerySpec")
      .def_static("identity", &QuerySpec::identity)
      .def_static("sum", &QuerySpec::sum)
      .def_readonly("kind", &QuerySpec::kind)
      .def_readonly("released", &QuerySpec::released)
      .def_readonly("groups", &QuerySpec::groups)
      .def_property_readonly("noise_dim", &QuerySpec::noise_dim)
      .def("selector", &QuerySpec::selector);
  m.def("validate_query", &validate_query);
  m.def("check_implementable",
        [](const ConvexProgram& p, const QuerySpec& q) { return check_implementable(p, q); });

  py::class_<BaseSolution>(m, "BaseSolution")
      .def_property_readonly("status",
                             [](const BaseSolution& s) { return str(status_name(s.status)); })
      .def_readonly("z", &BaseSolution::z)
      .def_readonly("objective", &BaseSolution::objective)
      .def_readonly("multipliers", &BaseSolution::multipliers);
  m.def("solve_base", [](const ConvexProgram& p) { return solve_base(p); });

  // noise
  py::class_<PrivacyParams>(m, "PrivacyParams")
      .def(py::init([](double epsilon, double delta, double alpha, double sensitivity) {
             return PrivacyParams{epsilon, delta, alpha, sensitivity};
           }),
           py::arg("epsilon") = 1.0, py::arg("delta") = 0.0, py::arg("alpha") = 0.1,
           py::arg("sensitivity") = 0.0)
      .def_readwrite("epsilon", &PrivacyParams::epsilon)
      .def_readwrite("delta", &PrivacyParams::delta)
      .def_readwrite("alpha", &PrivacyParams::alpha)
      .def_readwrite("sensitivity", &PrivacyParams::sensitivity);

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def_readonly("kind", &NoiseSpec::kind)
      .def_readonly("scale", &NoiseSpec::scale)
      .def_readonly("dim", &NoiseSpec::dim)
      .def_readonly("zero_mask", &NoiseSpec::zero_mask)
      .def_readonly("covariance", &NoiseSpec::covariance)
      .def("compact", &NoiseSpec::compact);
  m.def("calibrate", &calibrate, py::arg("privacy"), py::arg("kind"), py::arg("dim"),
        py::arg("zero_indices") = std::vector<int>{});
  m.def("make_noise", &make_noise, py::arg("kind"), py::arg("scale"), py::arg("dim"),
        py::arg("zero_indices") = std::vector<int>{});
  m.def("sample", &sample, py::arg("spec"), py::arg("seed"));
  m.def("derive_seed", &derive_seed);
  m.def("query_noise", &query_noise, py::arg("privacy"), py::arg("kind"), py::arg("query"),
        py::arg("n"));

  // chance-constrained reformulation
  py::class_<FeasibilitySpec>(m, "FeasibilitySpec")
      .def(py::init([](double eta, ReformMode mode, double beta, std::uint64_t seed,
                       std::vector<double> eta_bar) {
             FeasibilitySpec f;
             f.eta = eta;
             f.mode = mode;
             f.beta = beta;
             f.seed = seed;
             f.eta_bar = std::move(eta_bar);
             return f;
           }),
           py::arg("eta") = 0.025, py::arg("mode") = ReformMode::kAnalytic,
           py::arg("beta") = 0.01, py::arg("seed") = 0,
           py::arg("eta_bar") = std::vector<double>{})
      .def_readwrite("eta", &FeasibilitySpec::eta)
      .def_readwrite("mode", &FeasibilitySpec::mode)
      .def_readwrite("eta_bar", &FeasibilitySpec::eta_bar)
      .def_readwrite("beta", &FeasibilitySpec::beta)
      .def_readwrite("seed", &FeasibilitySpec::seed);
  py::class_<VarianceSpec>(m, "VarianceSpec")
      .def(py::init([](VarianceMode mode, double phi) { return VarianceSpec{mode, phi}; }),
           py::arg("mode") = VarianceMode::kNone, py::arg("phi") = 0.0)
      .def_readwrite("mode", &VarianceSpec::mode)
      .def_readwrite("phi", &VarianceSpec::phi);
  m.def("safety_factor", &safety_factor);
  m.def("scenario_count", &scenario_count);

  py::class_<Recourse>(m, "Recourse")
      .def_readonly("z_tilde", &Recourse::z_tilde)
      .def_readonly("Z", &Recourse::Z)
      .def_readonly("query", &Recourse::query)
      .def_readonly("noise", &Recourse::noise)
      .def_readonly("objective", &Recourse::objective)
      .def("realize", &Recourse::realize);
  m.def(
      "solve_recourse",
      [](const ConvexProgram& p, const QuerySpec& q, const NoiseSpec& noise,
         const FeasibilitySpec& feas, const VarianceSpec& var) {
        return solve_recourse(p, q, noise, feas, var);
      },
      py::arg("prog"), py::arg("query"), py::arg("noise"), py::arg("feas") = FeasibilitySpec{},
      py::arg("var") = VarianceSpec{});

  // mechanisms
  py::class_<MechanismConfig>(m, "MechanismConfig")
      .def(py::init([](PrivacyParams privacy, NoiseKind noise, FeasibilitySpec feas,
                       VarianceSpec var) {
             MechanismConfig c;
             c.privacy = privacy;
             c.noise = noise;
             c.feas = std::move(feas);
             c.var = var;
             return c;
           }),
           py::arg("privacy") = PrivacyParams{}, py::arg("noise") = NoiseKind::kLaplace,
           py::arg("feas") = FeasibilitySpec{}, py::arg("var") = VarianceSpec{})
      .def_readwrite("privacy", &MechanismConfig::privacy)
      .def_readwrite("noise", &MechanismConfig::noise)
      .def_readwrite("feas", &MechanismConfig::feas)
      .def_readwrite("var", &MechanismConfig::var);

  py::class_<Provenance>(m, "Provenance")
      .def_readonly("mechanism", &Provenance::mechanism)
      .def_readonly("seed", &Provenance::seed)
      .def_readonly("scenario_seed", &Provenance::scenario_seed)
      .def_readonly("epsilon", &Provenance::epsilon)
      .def_readonly("delta", &Provenance::delta)
      .def_readonly("alpha", &Provenance::alpha)
      .def_readonly("eta", &Provenance::eta)
      .def_readonly("mu", &Provenance::mu);
  py::class_<Release>(m, "Release")
      .def_readonly("kind", &Release::kind)
      .def_readonly("values", &Release::values)
      .def_readonly("xi", &Release::xi)
      .def_readonly("z_hat", &Release::z_hat)
      .def_readonly("feasible", &Release::feasible)
      .def_readonly("max_violation", &Release::max_violation)
      .def_readonly("iterations", &Release::iterations)
      .def_readonly("provenance", &Release::provenance);

  m.def("sample_release", &sample_release, py::arg("recourse"), py::arg("prog"),
        py::arg("seed"));
  m.def("piq", &piq, py::arg("prog"), py::arg("released"), py::arg("config"), py::arg("seed"));
  m.def("psq", &psq, py::arg("prog"), py::arg("groups"), py::arg("config"), py::arg("seed"));
  m.def("private_query", &private_query, py::arg("prog"), py::arg("query"), py::arg("config"),
        py::arg("seed"));
  m.def("iterative", &iterative, py::arg("prog"), py::arg("query"), py::arg("config"),
        py::arg("mu"), py::arg("seed"));
  m.def("output_perturbation", &output_perturbation, py::arg("prog"), py::arg("query"),
        py::arg("config"), py::arg("seed"));
  m.def("composition_rounds", &composition_rounds);
  m.def("max_violation", &max_violation);

  py::class_<ParetoRow>(m, "ParetoRow")
      .def_readonly("phi", &ParetoRow::phi)
      .def_readonly("objective", &ParetoRow::objective)
      .def_readonly("expected_cost", &ParetoRow::expected_cost)
      .def_readonly("expected_loss", &ParetoRow::expected_loss)
      .def_readonly("cost_variance", &ParetoRow::cost_variance)
      .def_readonly("solution_variance", &ParetoRow::solution_variance);
  m.def("pareto_sweep", &pareto_sweep, py::arg("prog"), py::arg("query"), py::arg("config"),
        py::arg("mode"), py::arg("phi_grid"), py::arg("variance_rows") = std::vector<int>{});

  // network
  py::class_<NetworkCase>(m, "NetworkCase")
      .def_readonly("name", &NetworkCase::name)
      .def_readonly("nodes", &NetworkCase::nodes)
      .def_readonly("p_min", &NetworkCase::p_min)
      .def_readonly("p_max", &NetworkCase::p_max)
      .def_readonly("c1", &NetworkCase::c1)
      .def_readonly("c2", &NetworkCase::c2)
      .def_readonly("demand", &NetworkCase::demand)
      .def_property_readonly("edge_count",
                             [](const NetworkCase& c) { return c.edges.size(); })
      .def("supply_nodes", &NetworkCase::supply_nodes);
  m.def("load_case", py::overload_cast<const std::string&>(&load_case), py::arg("path"));
  m.def(
      "parse_case",
      [](const std::string& text, const std::string& format) {
        return parse_case(text, parse_case_format(format));
      },
      py::arg("text"), py::arg("format"));
  m.def("to_json", &to_json);
  m.def("laplacian", &laplacian);
  m.def("random_instance", &random_instance, py::arg("topology"), py::arg("seed"));

  py::class_<AllocationProgram>(m, "AllocationProgram")
      .def_readonly("program", &AllocationProgram::program)
      .def_readonly("nodes", &AllocationProgram::nodes)
      .def_readonly("reference", &AllocationProgram::reference)
      .def_readonly("supply", &AllocationProgram::supply);
  m.def("build_program", &build_program, py::arg("network"), py::arg("reference") = 0);

  py::class_<SensitivityReport>(m, "SensitivityReport")
      .def_readonly("alpha", &SensitivityReport::alpha)
      .def_readonly("max_observed", &SensitivityReport::max_observed)
      .def_readonly("observed", &SensitivityReport::observed)
      .def_readonly("exceedances", &SensitivityReport::exceedances)
      .def_readonly("skipped", &SensitivityReport::skipped)
      .def_readonly("histogram", &SensitivityReport::histogram);
  m.def(
      "sensitivity_probe",
      [](const NetworkCase& c, double alpha, int trials, std::uint64_t seed) {
        return sensitivity_probe(c, alpha, trials, seed);
      },
      py::arg("network"), py::arg("alpha"), py::arg("trials"), py::arg("seed"));

  // bench
  m.def("empirical_violation", &empirical_violation, py::arg("recourse"), py::arg("prog"),
        py::arg("n_samples"), py::arg("seed"));
  m.def(
      "optimality_loss",
      [](const Recourse& r, const ConvexProgram& p) { return optimality_loss(r, p); },
      py::arg("recourse"), py::arg("prog"));
  m.def("parse_query", [](const std::string& text) { return parse_query(text); });
  m.def("sample_subset", &sample_subset, py::arg("pool"), py::arg("fraction"), py::arg("seed"));
  m.def("partition", &partition, py::arg("indices"), py::arg("groups"));

  py::class_<BenchConfig>(m, "BenchConfig")
      .def_readwrite("case_path", &BenchConfig::case_path)
      .def_readwrite("runs", &BenchConfig::runs)
      .def_readwrite("oos_samples", &BenchConfig::oos_samples)
      .def_readwrite("seed", &BenchConfig::seed)
      .def_readwrite("run_op", &BenchConfig::run_op)
      .def_readwrite("run_analytic", &BenchConfig::run_analytic)
      .def_readwrite("run_scenario", &BenchConfig::run_scenario);
  m.def("parse_bench_config",
        [](const std::string& text) { return parse_bench_config(text); });

  py::class_<BenchRow>(m, "BenchRow")
      .def_readonly("mechanism", &BenchRow::mechanism)
      .def_readonly("completed", &BenchRow::completed)
      .def_readonly("failed", &BenchRow::failed)
      .def_readonly("violation_mean", &BenchRow::violation_mean)
      .def_readonly("violation_std", &BenchRow::violation_std)
      .def_readonly("loss_mean", &BenchRow::loss_mean)
      .def_readonly("loss_std", &BenchRow::loss_std);
  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("run", &RunRecord::run)
      .def_readonly("mechanism", &RunRecord::mechanism)
      .def_readonly("ok", &RunRecord::ok)
      .def_readonly("violation", &RunRecord::violation)
      .def_readonly("loss", &RunRecord::loss)
      .def_readonly("error", &RunRecord::error);
  py::class_<BenchResult>(m, "BenchResult")
      .def_readonly("rows", &BenchResult::rows)
      .def_readonly("records", &BenchResult::records);
  m.def("run_bench", py::overload_cast<const BenchConfig&>(&run_bench), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("bench_csv", &bench_csv);
  m.def("runs_csv", &runs_csv);
}
