#include "doctest.h"

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "lncde/errors.hpp"
#include "lncde/solver.hpp"

using namespace lncde;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("step sizes clip the last step onto the end point") {
  const auto a = step_sizes(0.0, 1.0, 0.3);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == doctest::Approx(0.3));
  CHECK(a[3] == doctest::Approx(0.1));
  const auto b = step_sizes(0.0, 0.04, 0.01);
  CHECK(b.size() == 4);
  const auto c = step_sizes(0.2, 0.25, 0.5);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == doctest::Approx(0.05));
  CHECK_THROWS_AS(step_sizes(1.0, 0.0, 0.1), PreconditionError);
}

TEST_CASE("default step rule") {
  CHECK(SolverConfig::default_for(100, 4).step == doctest::Approx(1.0 / 500.0));
  CHECK(SolverConfig::default_for(4000, 1).step == doctest::Approx(1.0 / 4001.0));
  CHECK(SolverConfig::default_for(18000, 4).step == doctest::Approx(1.0 / 4501.0));
}

TEST_CASE("Heun is second order on exponential decay") {
  const StateField f = [](const VectorXd& h, double) { return VectorXd(-h); };
  const VectorXd h0 = VectorXd::Ones(1);
  const double exact = std::exp(-1.0);
  const double e1 = std::abs(heun_integrate(f, h0, 0.0, 1.0, 0.1)(0) - exact);
  const double e2 = std::abs(heun_integrate(f, h0, 0.0, 1.0, 0.05)(0) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  // One step of Heun on h' = -h: h1 = 1 - dt + dt^2/2.
  CHECK(heun_integrate(f, h0, 0.0, 0.1, 0.1)(0) == doctest::Approx(1.0 - 0.1 + 0.005));
}

TEST_CASE("Heun integrates time-dependent fields exactly when linear in s") {
  const StateField f = [](const VectorXd&, double s) { return VectorXd::Constant(1, 2.0 * s); };
  std::vector<VectorXd> traj;
  const VectorXd h = heun_integrate(f, VectorXd::Zero(1), 0.0, 1.0, 0.3, &traj);
  CHECK(h(0) == doctest::Approx(1.0));
  CHECK(traj.size() == 5);
}

TEST_CASE("divergence reports the failing step") {
  const StateField f = [](const VectorXd& h, double) { return VectorXd(h.array().square() * 1e200); };
  try {
    heun_integrate(f, VectorXd::Constant(1, 1e200), 0.0, 1.0, 0.1);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step_index() == 0);
  }
}

TEST_CASE("depth-1 Log-ODE with step 1 equals the linear-control CDE") {
  std::mt19937_64 rng(51);
  const auto path = oracle::random_path(rng, 3, 12);
  const auto spec = MlpSpec::for_family(Family::LogNCDE, 4, 3, 6, 2);
  const auto p = oracle::random_mlp(rng, spec);
  const VectorXd h0 = oracle::random_vector(rng, 4);
  const SolverConfig cfg{0.01};
  const LinearControl x(path);
  const VectorXd a = solve_ncde(p, spec, x, h0, cfg);
  const VectorXd b = solve_logode(p, spec, path, make_partition(path.size(), 1), 1, cfg, Family::LogNCDE, h0);
  CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("adjoint matches finite differences through the solve") {
  std::mt19937_64 rng(52);
  const auto path = oracle::random_path(rng, 2, 9, 0.5);
  const auto spec = MlpSpec::for_family(Family::LogNCDE, 3, 2, 5, 3);
  const auto p = oracle::random_mlp(rng, spec);
  const auto partition = make_partition(path.size(), 3);
  std::vector<std::vector<LogSignature>> ls(1);
  for (std::size_t i = 0; i < partition.num_intervals(); ++i) ls[0].push_back(log_signature(path, partition.interval(i), 2));
  const LogOdeSchedule sched(partition_boundaries(path, partition), ls, Family::LogNCDE);
  const HermiteControl hc(path);
  const ControlSchedule csched({&hc});
  const SolverConfig cfg{0.05};
  const MatrixXd h0 = oracle::random_vector(rng, 3);
  const MatrixXd wbar = oracle::random_vector(rng, 3);

  for (const DriveSchedule* s : {static_cast<const DriveSchedule*>(&sched), static_cast<const DriveSchedule*>(&csched)}) {
    auto objective = [&](const MlpParams& q, const MatrixXd& x0) {
      return (wbar.array() * integrate_field(q, spec, *s, x0, cfg).array()).sum();
    };
    SolveTape tape;
    integrate_field(p, spec, *s, h0, cfg, &tape);
    MlpParams grad = MlpParams::zeros(spec);
    const MatrixXd h0bar = integrate_field_adjoint(p, spec, *s, tape, wbar, grad);
    const double eps = 1e-6;
    for (Eigen::Index k = 0; k < 3; ++k) {
      MatrixXd hp = h0, hm = h0;
      hp(k) += eps;
      hm(k) -= eps;
      CHECK(h0bar(k) == doctest::Approx((objective(p, hp) - objective(p, hm)) / (2 * eps)).epsilon(1e-6));
    }
    for (std::size_t layer = 0; layer < p.weights.size(); ++layer) {
      for (Eigen::Index k = 0; k < p.weights[layer].size(); k += 3) {
        MlpParams pp = p, pm = p;
        pp.weights[layer].data()[k] += eps;
        pm.weights[layer].data()[k] -= eps;
        const double fd = (objective(pp, h0) - objective(pm, h0)) / (2 * eps);
        CHECK(grad.weights[layer].data()[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("schedules validate their inputs") {
  std::vector<std::vector<LogSignature>> ls(1);
  CHECK_THROWS_AS(LogOdeSchedule({0.0}, ls, Family::LogNCDE), PreconditionError);
  CHECK_THROWS_AS(LogOdeSchedule({0.0, 1.0}, ls, Family::NCDE), UnsupportedError);
  const PiecewiseLinearPath a({0.0, 1.0, 2.0}, {0, 1, 2}, 1);
  const PiecewiseLinearPath b({0.0, 1.5, 2.0}, {0, 1, 2}, 1);
  const LinearControl xa(a), xb(b);
  CHECK_THROWS_AS(ControlSchedule({&xa, &xb}), PreconditionError);
}
