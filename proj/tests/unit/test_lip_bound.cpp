#include "doctest.h"

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "lncde/errors.hpp"
#include "lncde/lip_bound.hpp"

using namespace lncde;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("power iteration agrees with the SVD") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd w = MatrixXd::Random(5 + trial % 4, 3 + trial % 5);
    const double want = Eigen::JacobiSVD<MatrixXd>(w).singularValues()(0);
    const SpectralNorm sn = spectral_norm(w, 500, 1e-14);
    CHECK(sn.value == doctest::Approx(want).epsilon(1e-8));
    CHECK((w * sn.right - sn.value * sn.left).norm() < 1e-5);
  }
  CHECK(spectral_norm(MatrixXd::Zero(3, 3)).value == 0.0);
}

TEST_CASE("layer bound takes the row-wise maximum of the three terms") {
  MatrixXd w(2, 2);
  w << 3.0, 4.0,   // |W_1| = 5: 0.5*25 = 12.5 dominates
      0.3, 0.4;    // |W_2| = 0.5: gamma*0.5 + |b| = 1 + 2 = 3 dominates
  VectorXd b(2);
  b << 0.0, -2.0;
  const double bound = lip2_layer_bound(w, b, 2.0);
  CHECK(bound == doctest::Approx(std::sqrt(12.5 * 12.5 + 3.0 * 3.0)));
  MatrixXd g(1, 1);
  g << 1.0;
  CHECK(lip2_layer_bound(g, VectorXd::Zero(1), 0.0) == doctest::Approx(1.1));
}

TEST_CASE("fold of unit layers is 5^(2^(m-1) - 1)") {
  for (std::size_t m = 1; m <= 7; ++m) {
    const double want = std::pow(5.0, std::pow(2.0, static_cast<double>(m - 1)) - 1.0);
    CHECK(fold_lip2(std::vector<double>(m, 1.0)) == doctest::Approx(want).epsilon(1e-15));
  }
  CHECK(fold_lip2({1.0, 1.0, 1.0}) == 125.0);
  CHECK(compose_lip2(2.0, 0.5) == 10.0);
}

TEST_CASE("network report gamma recursion") {
  MlpSpec s{2, 3, 1, 4, 3, {Activation::SiLU, Activation::SiLU, Activation::SiLU}};
  std::mt19937_64 rng(42);
  const MlpParams p = oracle::random_mlp(rng, s);
  const Lip2Report r = lip2_network_report(p, s);
  REQUIRE(r.gammas.size() == 3);
  CHECK(r.gammas[0] == doctest::Approx(std::sqrt(2.0)));
  const double s0 = Eigen::JacobiSVD<MatrixXd>(p.weights[0]).singularValues()(0);
  const double s1 = Eigen::JacobiSVD<MatrixXd>(p.weights[1]).singularValues()(0);
  CHECK(r.gammas[1] == doctest::Approx(std::sqrt(2.0) * s0 + p.biases[0].norm()).epsilon(1e-7));
  CHECK(r.gammas[2] == doctest::Approx(2.0 * s1 * r.gammas[1] + p.biases[1].norm()).epsilon(1e-7));
  CHECK(r.network_bound == doctest::Approx(fold_lip2(r.layer_bounds)));
}

TEST_CASE("report rejects non-SiLU networks unless folding the SiLU prefix") {
  const auto s = MlpSpec::for_family(Family::NCDE, 3, 2, 4, 3);
  std::mt19937_64 rng(43);
  const MlpParams p = oracle::random_mlp(rng, s);
  CHECK_THROWS_AS(lip2_network_report(p, s), UnsupportedError);
  const auto l = MlpSpec::for_family(Family::LogNCDE, 3, 2, 4, 3);
  const MlpParams q = oracle::random_mlp(rng, l);
  CHECK_THROWS_AS(lip2_network_bound(q, l), UnsupportedError);
  CHECK(lip2_network_report(q, l, true).layer_bounds.size() == 2);
}

TEST_CASE("scaling weights down lowers the bound") {
  MlpSpec s{3, 2, 1, 5, 3, {Activation::SiLU, Activation::SiLU, Activation::SiLU}};
  std::mt19937_64 rng(44);
  MlpParams p = oracle::random_mlp(rng, s);
  const double before = lip2_network_bound(p, s);
  p *= 1e-3;
  CHECK(lip2_network_bound(p, s) <= before);
}

TEST_CASE("spectral penalty value and gradient") {
  MlpSpec s{3, 2, 2, 4, 2, {Activation::SiLU, Activation::Tanh}};
  std::mt19937_64 rng(45);
  const MlpParams p = oracle::random_mlp(rng, s);
  CHECK(spectral_penalty(p, 0.0) == 0.0);
  CHECK_THROWS_AS(spectral_penalty(p, -1.0), PreconditionError);
  double want = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    want += Eigen::JacobiSVD<MatrixXd>(p.weights[i]).singularValues()(0) + p.biases[i].norm();
  }
  MlpParams g = MlpParams::zeros(s);
  CHECK(spectral_penalty(p, 0.1, &g) == doctest::Approx(0.1 * want).epsilon(1e-8));
  const double eps = 1e-6;
  for (std::size_t i = 0; i < 2; ++i) {
    for (Eigen::Index k = 0; k < p.weights[i].size(); ++k) {
      MlpParams pp = p, pm = p;
      pp.weights[i].data()[k] += eps;
      pm.weights[i].data()[k] -= eps;
      const double fd = (spectral_penalty(pp, 0.1) - spectral_penalty(pm, 0.1)) / (2 * eps);
      CHECK(g.weights[i].data()[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
    }
    for (Eigen::Index k = 0; k < p.biases[i].size(); ++k) {
      MlpParams pp = p, pm = p;
      pp.biases[i](k) += eps;
      pm.biases[i](k) -= eps;
      const double fd = (spectral_penalty(pp, 0.1) - spectral_penalty(pm, 0.1)) / (2 * eps);
      CHECK(g.biases[i](k) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("FLOP model") {
  CHECK(flop_model(64, 6, 128, 3, Family::NCDE) == 180224);
  CHECK(flop_model(64, 6, 128, 3, Family::LogNCDE) == 3244032);
  CHECK(flop_model(64, 6, 128, 3, Family::NRDE) == 2 * 64 * 128 + 2 * 2 * 128 * 128 + 64 * 30 * 128);
  CHECK(flop_model(4, 3, 8, 2, Family::LogNCDE) == 9 * flop_model(4, 3, 8, 2, Family::NCDE));
}
