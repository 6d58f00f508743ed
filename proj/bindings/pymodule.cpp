// Python bindings for the expanding-graph topology-learning core.
//
// Exposes the main operations: matrix primitives, the masked expanding
// covariance tracker and its baselines, the GMRF objective/solver, the
// online learner, ground-truth synthesis, error metrics, the experiment
// runner, and the two verification checks.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

#include "expgraph/covariance.hpp"
#include "expgraph/errors.hpp"
#include "expgraph/experiment.hpp"
#include "expgraph/gmrf.hpp"
#include "expgraph/matops.hpp"
#include "expgraph/metrics.hpp"
#include "expgraph/online.hpp"
#include "expgraph/synth.hpp"
#include "expgraph/verify.hpp"

namespace py = pybind11;
using namespace expgraph;

namespace {

const Matrix* opt_ptr(const std::optional<Matrix>& m) {
  return m.has_value() ? &*m : nullptr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Online topology learning for expanding graphs: masked covariance "
      "tracking plus projected proximal gradient estimation.";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  // ------------------------------------------------------------- primitives
  m.def("zero_pad", &zero_pad, py::arg("z"), py::arg("n"),
        "Embed square z as the top-left block of an n-by-n zero matrix.");
  m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("thr"),
        "Entry-wise sign(z) * max(|z| - thr, 0).");
  m.def("symmetrize", &symmetrize, py::arg("z"), "(z + z.T) / 2.");
  m.def("frob_dist", &frob_dist, py::arg("a"), py::arg("b"),
        "Frobenius distance between same-side matrices.");

  // ------------------------------------------------------------- covariance
  py::class_<CovarianceTracker>(m, "CovarianceTracker",
                                "Streaming state of the masked expanding covariance update.")
      .def(py::init<Index, double>(), py::arg("n0"), py::arg("gamma"))
      .def_readonly("C_hat", &CovarianceTracker::C_hat)
      .def_readonly("t", &CovarianceTracker::t)
      .def_readonly("tau", &CovarianceTracker::tau)
      .def_readonly("N_tau", &CovarianceTracker::N_tau)
      .def_readonly("gamma", &CovarianceTracker::gamma)
      .def("side", &CovarianceTracker::side);

  m.def(
      "expanding_update",
      [](CovarianceTracker& tracker, const Vector& x, Index n_new) -> Matrix {
        return expanding_update(tracker, x, n_new);
      },
      py::arg("tracker"), py::arg("x"), py::arg("n_new") = 0,
      "Absorb one sample (n_new trailing entries belong to newly arrived "
      "nodes); returns the updated covariance estimate.");
  m.def("stationary_update", &stationary_update, py::arg("c"), py::arg("x"), py::arg("t"),
        "Running-mean update ((t-1)/t) c + (1/t) x x^T.");
  m.def("dynamic_update", &dynamic_update, py::arg("c"), py::arg("x"), py::arg("gamma"),
        "Forgetting-factor update gamma c + (1-gamma) x x^T.");

  // ------------------------------------------------------------------- gmrf
  py::class_<GmrfParams>(m, "GmrfParams",
                         "Hyperparameters of the penalized Gaussian graphical objective.")
      .def(py::init([](double epsilon, double sigma, double alpha, double lambda) {
             GmrfParams p{epsilon, sigma, alpha, lambda};
             p.validate();
             return p;
           }),
           py::arg("epsilon") = 1.0, py::arg("sigma") = 25.0, py::arg("alpha") = 0.0,
           py::arg("lambda_") = 0.0)
      .def_readwrite("epsilon", &GmrfParams::epsilon)
      .def_readwrite("sigma", &GmrfParams::sigma)
      .def_readwrite("alpha", &GmrfParams::alpha)
      .def_readwrite("lambda_", &GmrfParams::lambda)
      .def("eta_max", &GmrfParams::eta_max)
      .def("validate", &GmrfParams::validate);

  m.def(
      "objective",
      [](const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
         const std::optional<Matrix>& S_prev) {
        return objective(S, C_hat, p, opt_ptr(S_prev));
      },
      py::arg("s"), py::arg("c_hat"), py::arg("params"), py::arg("s_prev") = py::none(),
      "Full objective value including the l1 term.");
  m.def(
      "smooth_grad",
      [](const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
         const std::optional<Matrix>& S_prev) {
        return smooth_grad(S, C_hat, p, opt_ptr(S_prev));
      },
      py::arg("s"), py::arg("c_hat"), py::arg("params"), py::arg("s_prev") = py::none(),
      "Gradient of the smooth part of the objective.");
  m.def("project_feasible", &project_feasible, py::arg("s"), py::arg("sigma"),
        "Project onto {S PSD, ||S||_2^2 <= sigma} by eigenvalue clipping.");

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("S", &SolveResult::S)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("residual", &SolveResult::residual)
      .def_readonly("converged", &SolveResult::converged);

  m.def(
      "offline_solve",
      [](const Matrix& C_hat, const std::optional<Matrix>& S_prev, const GmrfParams& p,
         double eta, double tol, int max_iter) {
        return offline_solve(C_hat, opt_ptr(S_prev), p, eta, tol, max_iter);
      },
      py::arg("c_hat"), py::arg("s_prev"), py::arg("params"), py::arg("eta"),
      py::arg("tol") = 1e-10, py::arg("max_iter") = 50000,
      "Iterate the projected proximal gradient map to a fixed point.");

  // ----------------------------------------------------------------- online
  py::class_<OnlineOptions>(m, "OnlineOptions", "Knobs of the per-timestep iteration.")
      .def(py::init([](double eta, double lambda, double h, std::optional<double> h_new,
                       int iters_per_step) {
             OnlineOptions o;
             o.eta = eta;
             o.lambda = lambda;
             o.h = h;
             o.h_new = h_new;
             o.iters_per_step = iters_per_step;
             return o;
           }),
           py::arg("eta"), py::arg("lambda_") = 0.0, py::arg("h") = 1.0,
           py::arg("h_new") = py::none(), py::arg("iters_per_step") = 1)
      .def_readwrite("eta", &OnlineOptions::eta)
      .def_readwrite("lambda_", &OnlineOptions::lambda)
      .def_readwrite("h", &OnlineOptions::h)
      .def_readwrite("h_new", &OnlineOptions::h_new)
      .def_readwrite("iters_per_step", &OnlineOptions::iters_per_step);

  m.def(
      "combine",
      [](const Matrix& S_check, const Matrix& S_prev, double h) {
        return combine(S_check, S_prev, h);
      },
      py::arg("s_check"), py::arg("s_prev"), py::arg("h"),
      "Convex combination h s_check + (1-h) s_prev.");
  m.def(
      "tracked_step",
      [](const GmrfParams& p, const Matrix& C_hat, const Matrix& S_prev,
         const OnlineOptions& opt) {
        const GmrfLoss loss(p);
        return tracked_step(loss, C_hat, S_prev, opt);
      },
      py::arg("params"), py::arg("c_hat"), py::arg("s_prev"), py::arg("options"),
      "Zero-pad the previous estimate to the side of c_hat, then run "
      "iters_per_step proximal-gradient/combine iterations.");

  py::class_<OnlineLearner>(m, "OnlineLearner",
                            "Per-timestep pipeline: masked covariance update + tracked step.")
      .def(py::init([](const GmrfParams& p, Index n0, double gamma, const OnlineOptions& opt,
                       std::optional<Matrix> S0) {
             return OnlineLearner(std::make_shared<GmrfLoss>(p), CovarianceTracker(n0, gamma),
                                  opt, std::move(S0));
           }),
           py::arg("params"), py::arg("n0"), py::arg("gamma"), py::arg("options"),
           py::arg("s0") = py::none())
      .def(
          "step",
          [](OnlineLearner& self, const Vector& x, Index n_new) -> Matrix {
            return self.step(x, n_new);
          },
          py::arg("x"), py::arg("n_new") = 0,
          "Absorb one sample and return the updated topology estimate.")
      .def_property_readonly("estimate", [](const OnlineLearner& self) { return self.estimate(); })
      .def_property_readonly("covariance",
                             [](const OnlineLearner& self) { return self.tracker().C_hat; });

  // ---------------------------------------------------------------- synth
  py::class_<ArrivalEvent>(m, "ArrivalEvent")
      .def(py::init([](long t, Index count) {
             return ArrivalEvent{t, count};
           }),
           py::arg("t"), py::arg("count"))
      .def_readwrite("t", &ArrivalEvent::t)
      .def_readwrite("count", &ArrivalEvent::count);

  py::class_<ArrivalSchedule>(m, "ArrivalSchedule",
                              "Growth plan of the node set over a finite horizon.")
      .def(py::init([](Index n0, long horizon, std::vector<ArrivalEvent> events) {
             ArrivalSchedule s{n0, horizon, std::move(events)};
             s.validate();
             return s;
           }),
           py::arg("n0"), py::arg("horizon"), py::arg("events") = std::vector<ArrivalEvent>{})
      .def_readwrite("n0", &ArrivalSchedule::n0)
      .def_readwrite("horizon", &ArrivalSchedule::horizon)
      .def_readwrite("events", &ArrivalSchedule::events)
      .def("nodes_at", &ArrivalSchedule::nodes_at, py::arg("t"))
      .def("arrivals_at", &ArrivalSchedule::arrivals_at, py::arg("t"))
      .def("final_nodes", &ArrivalSchedule::final_nodes);

  m.def("generate_er", &generate_er, py::arg("n"), py::arg("avg_degree"), py::arg("seed"),
        "Erdos-Renyi 0/1 adjacency with expected average degree.");
  m.def("attach_nodes", &attach_nodes, py::arg("a"), py::arg("k"), py::arg("avg_degree"),
        py::arg("seed"),
        "Append k nodes; the old block is preserved exactly and no arrival "
        "is isolated.");
  m.def("precision_from_adjacency", &precision_from_adjacency, py::arg("a"), py::arg("delta"),
        "Laplacian of a plus delta I.");
  m.def("sample_gmrf", &sample_gmrf, py::arg("s_true"), py::arg("seed"),
        "One zero-mean draw with the given precision matrix.");

  py::class_<GroundTruthSequence>(m, "GroundTruthSequence",
                                  "Piecewise-constant ground-truth topology sequence.")
      .def_readonly("schedule", &GroundTruthSequence::schedule)
      .def_readonly("delta", &GroundTruthSequence::delta)
      .def_readonly("epoch_start", &GroundTruthSequence::epoch_start)
      .def_readonly("adjacencies", &GroundTruthSequence::adjacencies)
      .def_readonly("gsos", &GroundTruthSequence::gsos)
      .def("gso_at", &GroundTruthSequence::gso_at, py::arg("t"),
           py::return_value_policy::copy)
      .def("adjacency_at", &GroundTruthSequence::adjacency_at, py::arg("t"),
           py::return_value_policy::copy);

  py::class_<Scenario>(m, "Scenario", "Ground truth plus one signal per timestep.")
      .def_readonly("truth", &Scenario::truth)
      .def_readonly("signals", &Scenario::signals);

  m.def("build_scenario", &build_scenario, py::arg("schedule"), py::arg("avg_degree"),
        py::arg("delta"), py::arg("seed"), py::arg("rewire_prob") = 0.0,
        "Deterministic scenario: topology sequence plus GMRF signals.");

  // ---------------------------------------------------------------- metrics
  m.def("nerr", &nerr, py::arg("s_hat"), py::arg("s_ref"),
        "Squared Frobenius error normalized by the reference.");
  m.def("avg_cum_regret", &avg_cum_regret, py::arg("errs"), "Prefix means of an error series.");
  m.def("path_length", &path_length, py::arg("opt_seq"),
        "Total drift of a sequence of per-step optima.");
  m.def("contraction_rho", &contraction_rho, py::arg("h"), py::arg("eta"), py::arg("sigma"),
        "Per-step contraction factor sqrt(1 - h eta / sigma).");
  m.def("regret_bound", &regret_bound, py::arg("err_first"), py::arg("err_last"), py::arg("rho"),
        py::arg("path_len"), "Cumulative tracking-error bound K1 + K2 path.");
  m.def("path_length_arrival_bound", &path_length_arrival_bound, py::arg("d_max"),
        py::arg("n_incoming"), "Adjacency drift bound sqrt(2 d_max n_incoming).");
  m.def("percentile", &percentile, py::arg("values"), py::arg("q"),
        "Linear-interpolation quantile of a sample.");

  // ------------------------------------------------------------- experiment
  m.def(
      "run_experiment_json",
      [](const std::string& config_text) {
        const ExperimentConfig cfg = parse_config_text(config_text);
        const ExperimentResult res = run_experiment(cfg);
        py::dict out;
        out["aggregate_path"] = res.aggregate_path;
        out["manifest_path"] = res.manifest_path;
        py::list failures;
        for (const auto& r : res.realizations) {
          if (!r.ok) failures.append(py::make_tuple(r.index, r.error));
        }
        out["failures"] = failures;
        return out;
      },
      py::arg("config_text"),
      "Run a full experiment from a JSON config string; returns output "
      "paths and any per-realization failures.");

  // ------------------------------------------------------------ verification
  py::class_<ContractionCheckOptions>(m, "ContractionCheckOptions")
      .def(py::init<>())
      .def_readwrite("n", &ContractionCheckOptions::n)
      .def_readwrite("horizon", &ContractionCheckOptions::horizon)
      .def_readwrite("seeds", &ContractionCheckOptions::seeds)
      .def_readwrite("epsilon", &ContractionCheckOptions::epsilon)
      .def_readwrite("sigma", &ContractionCheckOptions::sigma)
      .def_readwrite("lambda_", &ContractionCheckOptions::lambda)
      .def_readwrite("gamma", &ContractionCheckOptions::gamma)
      .def_readwrite("h", &ContractionCheckOptions::h)
      .def_readwrite("eta", &ContractionCheckOptions::eta)
      .def_readwrite("avg_degree", &ContractionCheckOptions::avg_degree)
      .def_readwrite("delta", &ContractionCheckOptions::delta)
      .def_readwrite("oracle_tol", &ContractionCheckOptions::oracle_tol)
      .def_readwrite("oracle_max_iter", &ContractionCheckOptions::oracle_max_iter)
      .def_readwrite("slack", &ContractionCheckOptions::slack)
      .def_readwrite("seed0", &ContractionCheckOptions::seed0);

  py::class_<ContractionCheckResult>(m, "ContractionCheckResult")
      .def_readonly("checked", &ContractionCheckResult::checked)
      .def_readonly("violations", &ContractionCheckResult::violations)
      .def_readonly("max_excess", &ContractionCheckResult::max_excess)
      .def_readonly("rho", &ContractionCheckResult::rho)
      .def("pass_fraction", &ContractionCheckResult::pass_fraction)
      .def("passed", &ContractionCheckResult::pass, py::arg("required_fraction") = 0.99);

  m.def("contraction_check", &contraction_check,
        py::arg("options") = ContractionCheckOptions{},
        "Audit the per-step contraction toward the per-step optimum.");

  py::class_<TrackingBoundOptions>(m, "TrackingBoundOptions")
      .def(py::init<>())
      .def_readwrite("n0", &TrackingBoundOptions::n0)
      .def_readwrite("horizon", &TrackingBoundOptions::horizon)
      .def_readwrite("seeds", &TrackingBoundOptions::seeds)
      .def_readwrite("arrival_t", &TrackingBoundOptions::arrival_t)
      .def_readwrite("arrival_count", &TrackingBoundOptions::arrival_count)
      .def_readwrite("epsilon", &TrackingBoundOptions::epsilon)
      .def_readwrite("sigma", &TrackingBoundOptions::sigma)
      .def_readwrite("lambda_", &TrackingBoundOptions::lambda)
      .def_readwrite("gamma", &TrackingBoundOptions::gamma)
      .def_readwrite("h", &TrackingBoundOptions::h)
      .def_readwrite("eta", &TrackingBoundOptions::eta)
      .def_readwrite("iters_per_step", &TrackingBoundOptions::iters_per_step)
      .def_readwrite("avg_degree", &TrackingBoundOptions::avg_degree)
      .def_readwrite("delta", &TrackingBoundOptions::delta)
      .def_readwrite("oracle_tol", &TrackingBoundOptions::oracle_tol)
      .def_readwrite("oracle_max_iter", &TrackingBoundOptions::oracle_max_iter)
      .def_readwrite("seed0", &TrackingBoundOptions::seed0);

  py::class_<TrackingBoundSeedResult>(m, "TrackingBoundSeedResult")
      .def_readonly("seed", &TrackingBoundSeedResult::seed)
      .def_readonly("measured", &TrackingBoundSeedResult::measured)
      .def_readonly("bound", &TrackingBoundSeedResult::bound)
      .def_readonly("err_first", &TrackingBoundSeedResult::err_first)
      .def_readonly("err_last", &TrackingBoundSeedResult::err_last)
      .def_readonly("path_length", &TrackingBoundSeedResult::path_length)
      .def_readonly("satisfied", &TrackingBoundSeedResult::satisfied);

  py::class_<TrackingBoundResult>(m, "TrackingBoundResult")
      .def_readonly("rho", &TrackingBoundResult::rho)
      .def_readonly("k2", &TrackingBoundResult::k2)
      .def_readonly("seeds", &TrackingBoundResult::seeds)
      .def("all_satisfied", &TrackingBoundResult::all_satisfied);

  m.def("tracking_bound_check", &tracking_bound_check,
        py::arg("options") = TrackingBoundOptions{},
        "Check the cumulative tracking error against its contraction bound.");
}
