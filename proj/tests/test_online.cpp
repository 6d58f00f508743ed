#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "expgraph/errors.hpp"
#include "expgraph/gmrf.hpp"
#include "expgraph/metrics.hpp"
#include "expgraph/online.hpp"
#include "expgraph/synth.hpp"
#include "expgraph/verify.hpp"
#include "test_helpers.hpp"

using expgraph::combine;
using expgraph::combine_blocked;
using expgraph::CovarianceTracker;
using expgraph::DimensionError;
using expgraph::frob_dist;
using expgraph::GmrfLoss;
using expgraph::GmrfParams;
using expgraph::Index;
using expgraph::Matrix;
using expgraph::nerr;
using expgraph::OnlineLearner;
using expgraph::OnlineOptions;
using expgraph::ParameterError;
using expgraph::ppg_step;
using expgraph::project_feasible;
using expgraph::soft_threshold;
using expgraph::tracked_step;
using expgraph::Vector;
using test_helpers::random_covariance;
using test_helpers::random_spectrum;
using test_helpers::random_symmetric;
using test_helpers::random_vector;

namespace {

GmrfLoss make_loss(double epsilon = 1.0, double sigma = 25.0, double lambda = 0.0,
                   double alpha = 0.0) {
  GmrfParams p;
  p.epsilon = epsilon;
  p.sigma = sigma;
  p.lambda = lambda;
  p.alpha = alpha;
  return GmrfLoss(p);
}

}  // namespace

TEST_CASE("ppg_step is shrink-then-project on the gradient step") {
  const GmrfLoss loss = make_loss();
  SUBCASE("zero gradient and zero shrinkage leave a feasible iterate alone") {
    const Matrix s = random_spectrum(4, 0.2, 4.5, 4000);
    CHECK(ppg_step(s, Matrix::Zero(4, 4), 1.0, 0.0, loss) == s);
  }
  SUBCASE("an overwhelming shrinkage weight zeroes the iterate") {
    const Matrix s = random_spectrum(4, 0.2, 4.5, 4001);
    const Matrix out = ppg_step(s, Matrix::Zero(4, 4), 1.0, 1e6, loss);
    CHECK(out.isZero(0.0));
  }
  SUBCASE("matches the composition written out by hand") {
    const Matrix s = random_symmetric(5, 4002);
    const Matrix g = random_symmetric(5, 4003);
    const double eta = 0.7;
    const double lambda = 0.3;
    const Matrix expected =
        project_feasible(soft_threshold(s - eta * g, eta * lambda), loss.params().sigma);
    CHECK(ppg_step(s, g, eta, lambda, loss) == expected);
  }
  SUBCASE("invalid arguments are rejected") {
    CHECK_THROWS_AS(ppg_step(Matrix::Zero(3, 3), Matrix::Zero(2, 2), 1.0, 0.0, loss),
                    DimensionError);
    CHECK_THROWS_AS(ppg_step(Matrix::Zero(3, 3), Matrix::Zero(3, 3), 0.0, 0.0, loss),
                    ParameterError);
    CHECK_THROWS_AS(ppg_step(Matrix::Zero(3, 3), Matrix::Zero(3, 3), 1.0, -0.5, loss),
                    ParameterError);
  }
}

TEST_CASE("combine takes an h-weighted convex combination") {
  const Matrix a = random_symmetric(3, 4100);
  const Matrix b = random_symmetric(3, 4101);
  SUBCASE("h = 1 returns the new iterate exactly") {
    CHECK(combine(a, b, 1.0) == a);
  }
  SUBCASE("identical operands are a fixed point up to one rounding step") {
    CHECK((combine(a, a, 0.3) - a).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("weight scales toward the new iterate") {
    const Matrix out = combine(Matrix::Identity(2, 2), Matrix::Zero(2, 2), 0.25);
    CHECK((out - 0.25 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("weights outside (0, 1] are rejected") {
    CHECK_THROWS_AS(combine(a, b, 0.0), ParameterError);
    CHECK_THROWS_AS(combine(a, b, 1.5), ParameterError);
    CHECK_THROWS_AS(combine(a, b, -0.2), ParameterError);
  }
  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(combine(a, random_symmetric(4, 4102), 0.5), DimensionError);
  }
}

TEST_CASE("combine_blocked applies distinct weights per node-age block") {
  const Matrix a = random_symmetric(3, 4200);
  const Matrix b = random_symmetric(3, 4201);
  SUBCASE("equal weights reduce to the flat combination") {
    CHECK(combine_blocked(a, b, 0.4, 0.4, 2) == combine(a, b, 0.4));
  }
  SUBCASE("hand-checked 3x3 with a 2x2 old block") {
    const double h_old = 0.5;
    const double h_new = 0.25;
    const Matrix out = combine_blocked(a, b, h_old, h_new, 2);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) {
        const double h = (i < 2 && j < 2) ? h_old : h_new;
        CHECK(out(i, j) == doctest::Approx(h * a(i, j) + (1 - h) * b(i, j)).epsilon(1e-15));
      }
    }
  }
  SUBCASE("old-block size is validated") {
    CHECK_THROWS_AS(combine_blocked(a, b, 0.5, 0.25, 4), DimensionError);
    CHECK_THROWS_AS(combine_blocked(a, b, 0.5, 0.25, -1), DimensionError);
  }
  SUBCASE("both weights are validated") {
    CHECK_THROWS_AS(combine_blocked(a, b, 0.0, 0.5, 2), ParameterError);
    CHECK_THROWS_AS(combine_blocked(a, b, 0.5, 1.5, 2), ParameterError);
  }
}

TEST_CASE("tracked_step runs pad, descend, shrink, project, mix") {
  const GmrfLoss loss = make_loss(1.0, 25.0, 0.05, 0.1);
  OnlineOptions opt;
  opt.eta = 1.0;
  opt.lambda = 0.05;
  opt.h = 0.8;

  SUBCASE("output side follows the covariance and stays feasible") {
    const Matrix s_prev = random_spectrum(4, 0.2, 4.0, 4300);
    for (Index n_new : {Index(0), Index(2)}) {
      const Index n = 4 + n_new;
      const Matrix c = random_covariance(n, 4301 + static_cast<uint64_t>(n_new));
      const Matrix out = tracked_step(loss, c, s_prev, opt);
      CHECK(out.rows() == n);
      CHECK(out.cols() == n);
      // Feasibility: projecting the output must be a no-op.
      CHECK(frob_dist(project_feasible(out, loss.params().sigma), out) <= 1e-9);
    }
  }
  SUBCASE("previous estimate larger than the covariance is rejected") {
    CHECK_THROWS_AS(
        tracked_step(loss, Matrix::Identity(3, 3), random_symmetric(4, 4302), opt),
        DimensionError);
  }
  SUBCASE("deterministic: identical inputs give bitwise-identical outputs") {
    const Matrix s_prev = random_spectrum(5, 0.2, 4.0, 4303);
    const Matrix c = random_covariance(5, 4304);
    const Matrix first = tracked_step(loss, c, s_prev, opt);
    const Matrix second = tracked_step(loss, c, s_prev, opt);
    CHECK(first == second);
  }
  SUBCASE("with h = 1 and one inner iteration it is exactly one solver sweep") {
    const GmrfLoss plain = make_loss(1.0, 25.0, 0.05, 0.0);
    OnlineOptions one;
    one.eta = 1.0;
    one.lambda = 0.05;
    one.h = 1.0;
    const Matrix s_prev = random_spectrum(5, 0.2, 4.0, 4305);
    const Matrix c = random_covariance(5, 4306);
    const Matrix grad = plain.gradient(s_prev, c, &s_prev);
    const Matrix expected = ppg_step(s_prev, grad, one.eta, one.lambda, plain);
    CHECK(tracked_step(plain, c, s_prev, one) == expected);
  }
}

TEST_CASE("the online estimate approaches the true topology over time") {
  expgraph::ArrivalSchedule schedule;
  schedule.n0 = 10;
  schedule.horizon = 1200;
  const expgraph::Scenario scenario = expgraph::build_scenario(schedule, 3.0, 0.1, 4400);
  const Matrix& truth = scenario.truth.gsos[0];

  GmrfParams p;
  p.epsilon = 1.0;
  // Gershgorin bound on the spectral norm of the true GSO keeps it feasible.
  const double spectral_bound = truth.cwiseAbs().rowwise().sum().maxCoeff();
  p.sigma = 1.2 * spectral_bound * spectral_bound;
  p.lambda = 0.01;
  auto loss = std::make_shared<GmrfLoss>(p);

  OnlineOptions opt;
  opt.eta = p.eta_max();
  opt.lambda = p.lambda;

  OnlineLearner learner(loss, CovarianceTracker(10, 0.995), opt);
  std::vector<double> errors;
  for (long t = 0; t < schedule.horizon; ++t) {
    const Matrix& s_hat = learner.step(scenario.signals[static_cast<std::size_t>(t)], 0);
    if ((t + 1) % 25 == 0) errors.push_back(nerr(s_hat, truth));
  }
  REQUIRE(errors.size() == 48);
  const double early = errors[0];
  const double late = errors[47];
  CHECK(late < 0.5 * early);
  CHECK(late < 0.25);
}

TEST_CASE("OnlineLearner leaves state untouched when a step is invalid") {
  auto loss = std::make_shared<GmrfLoss>(make_loss());
  OnlineOptions opt;
  opt.eta = 1.0;
  OnlineLearner learner(loss, CovarianceTracker(4, 0.9), opt);
  learner.step(random_vector(4, 4500), 0);

  const Matrix estimate_before = learner.estimate();
  const Matrix cov_before = learner.tracker().C_hat;
  CHECK_THROWS_AS(learner.step(random_vector(3, 4501), 0), DimensionError);
  CHECK(learner.estimate() == estimate_before);
  CHECK(learner.tracker().C_hat == cov_before);
  CHECK(learner.tracker().t == 1);
}

TEST_CASE("per-step error contraction holds on a small randomized protocol") {
  expgraph::ContractionCheckOptions opt;
  opt.n = 6;
  opt.horizon = 50;
  opt.seeds = 3;
  const expgraph::ContractionCheckResult res = expgraph::contraction_check(opt);
  CHECK(res.checked == 3 * 50);
  CHECK(res.pass(0.99));
  CHECK(res.rho == doctest::Approx(std::sqrt(1.0 - opt.h * opt.epsilon * opt.epsilon / opt.sigma))
                       .epsilon(1e-12));
}

TEST_CASE("the cumulative-error bound holds on a small randomized protocol") {
  expgraph::TrackingBoundOptions opt;
  opt.n0 = 8;
  opt.horizon = 80;
  opt.arrival_t = 40;
  opt.arrival_count = 2;
  opt.seeds = 2;
  const expgraph::TrackingBoundResult res = expgraph::tracking_bound_check(opt);
  REQUIRE(res.seeds.size() == 2);
  CHECK(res.all_satisfied());
  for (const auto& seed : res.seeds) {
    CHECK(seed.measured <= seed.bound);
    CHECK(seed.path_length > 0.0);
  }
}
