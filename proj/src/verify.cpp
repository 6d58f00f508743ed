#include "expgraph/verify.hpp"

#include <algorithm>
#include <string>

#include "expgraph/covariance.hpp"
#include "expgraph/errors.hpp"
#include "expgraph/gmrf.hpp"
#include "expgraph/metrics.hpp"
#include "expgraph/online.hpp"
#include "expgraph/synth.hpp"

namespace expgraph {

namespace {

Matrix solve_reference(const Matrix& C, const Matrix* warm, const GmrfParams& gp, double eta,
                       double tol, int max_iter, long t) {
  SolveResult res = offline_solve(C, warm, gp, eta, tol, max_iter);
  if (!res.converged) {
    throw NumericalError("reference solve did not converge at t = " + std::to_string(t) +
                         " (residual " + std::to_string(res.residual) + ")");
  }
  return std::move(res.S);
}

}  // namespace

ContractionCheckResult contraction_check(const ContractionCheckOptions& opt) {
  const double eta = opt.eta > 0.0 ? opt.eta : opt.epsilon * opt.epsilon;

  GmrfParams gp;
  gp.epsilon = opt.epsilon;
  gp.sigma = opt.sigma;
  gp.alpha = 0.0;  // the per-step problem must not depend on the trajectory
  gp.lambda = opt.lambda;
  const GmrfLoss loss(gp);

  OnlineOptions oo;
  oo.eta = eta;
  oo.lambda = opt.lambda;
  oo.h = opt.h;
  oo.iters_per_step = 1;

  ContractionCheckResult result;
  result.rho = contraction_rho(opt.h, eta, opt.sigma);

  ArrivalSchedule schedule;
  schedule.n0 = opt.n;
  schedule.horizon = opt.horizon;
  schedule.validate();

  for (int s = 0; s < opt.seeds; ++s) {
    const Scenario scenario =
        build_scenario(schedule, opt.avg_degree, opt.delta, opt.seed0 + static_cast<std::uint64_t>(s));
    CovarianceTracker tracker(opt.n, opt.gamma);
    Matrix S_hat = Matrix::Zero(opt.n, opt.n);
    Matrix S_star;

    for (long t = 1; t <= opt.horizon; ++t) {
      const Vector& x = scenario.signals[static_cast<std::size_t>(t - 1)];
      const Matrix& C = expanding_update(tracker, x, 0);
      S_hat = tracked_step(loss, C, S_hat, oo);
      S_star = solve_reference(C, S_star.size() > 0 ? &S_star : nullptr, gp, eta, opt.oracle_tol,
                               opt.oracle_max_iter, t);

      const double dist_now = frob_dist(S_hat, S_star);
      const Matrix S_next = tracked_step(loss, C, S_hat, oo);  // covariance held fixed
      const double dist_next = frob_dist(S_next, S_star);

      result.checked += 1;
      const double excess = dist_next - (result.rho * dist_now + opt.slack);
      if (excess > 0.0) {
        result.violations += 1;
        result.max_excess = std::max(result.max_excess, excess);
      }
    }
  }
  return result;
}

TrackingBoundResult tracking_bound_check(const TrackingBoundOptions& opt) {
  const double eta = opt.eta > 0.0 ? opt.eta : opt.epsilon * opt.epsilon;

  GmrfParams gp;
  gp.epsilon = opt.epsilon;
  gp.sigma = opt.sigma;
  gp.alpha = 0.0;
  gp.lambda = opt.lambda;
  const GmrfLoss loss(gp);

  OnlineOptions oo;
  oo.eta = eta;
  oo.lambda = opt.lambda;
  oo.h = opt.h;
  oo.iters_per_step = opt.iters_per_step;

  TrackingBoundResult result;
  result.rho = contraction_rho(opt.h, eta, opt.sigma);
  result.k2 = 1.0 / (1.0 - result.rho);

  ArrivalSchedule schedule;
  schedule.n0 = opt.n0;
  schedule.horizon = opt.horizon;
  if (opt.arrival_t > 0) schedule.events.push_back({opt.arrival_t, opt.arrival_count});
  schedule.validate();

  for (int s = 0; s < opt.seeds; ++s) {
    TrackingBoundSeedResult seed_result;
    seed_result.seed = opt.seed0 + static_cast<std::uint64_t>(s);

    const Scenario scenario =
        build_scenario(schedule, opt.avg_degree, opt.delta, seed_result.seed);
    CovarianceTracker tracker(opt.n0, opt.gamma);
    Matrix S_hat = Matrix::Zero(opt.n0, opt.n0);
    Matrix S_star_prev;

    for (long t = 1; t <= opt.horizon; ++t) {
      const Vector& x = scenario.signals[static_cast<std::size_t>(t - 1)];
      const Matrix& C = expanding_update(tracker, x, schedule.arrivals_at(t));
      S_hat = tracked_step(loss, C, S_hat, oo);
      Matrix S_star = solve_reference(C, S_star_prev.size() > 0 ? &S_star_prev : nullptr, gp, eta,
                                      opt.oracle_tol, opt.oracle_max_iter, t);

      const double err = frob_dist(S_hat, S_star);
      seed_result.measured += err;
      if (t == 1) seed_result.err_first = err;
      if (t == opt.horizon) seed_result.err_last = err;
      if (t > 1) {
        seed_result.path_length += frob_dist(S_star, zero_pad(S_star_prev, S_star.rows()));
      }
      S_star_prev = std::move(S_star);
    }

    seed_result.bound = regret_bound(seed_result.err_first, seed_result.err_last, result.rho,
                                     seed_result.path_length);
    seed_result.satisfied = seed_result.measured <= seed_result.bound;
    result.seeds.push_back(seed_result);
  }
  return result;
}

}  // namespace expgraph
