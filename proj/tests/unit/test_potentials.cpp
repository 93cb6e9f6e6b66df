#include <cmath>
#include <numbers>
#include <random>

#include "banditscape/potentials.hpp"
#include "banditscape/quadrature.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace banditscape;

namespace {

std::vector<double> zeros(int k) { return std::vector<double>(k, 0.0); }

double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace

TEST_CASE("Gauss-Hermite moments") {
  const auto& rule = gauss_hermite(32);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double z = rule.nodes[q], w = rule.weights[q];
    m0 += w;
    m2 += w * z * z;
    m4 += w * z * z * z * z;
    m6 += w * std::pow(z, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("scrambled Sobol sample is standard normal") {
  const auto& z = sobol_normal_sample(3, 1 << 14, 7);
  for (int d = 0; d < 3; ++d) {
    double m1 = 0, m2 = 0;
    for (int p = 0; p < (1 << 14); ++p) {
      m1 += z[p * 3 + d];
      m2 += z[p * 3 + d] * z[p * 3 + d];
    }
    CHECK(std::abs(m1 / (1 << 14)) < 1e-3);
    CHECK(std::abs(m2 / (1 << 14) - 1.0) < 1e-2);
  }
  CHECK_THROWS_AS(sobol_normal_sample(3, 1000, 7), std::invalid_argument);
}

TEST_CASE("heat_phi terminal condition and closed form") {
  const std::vector<double> x{0.3, -1.2, 0.8};
  CHECK(heat_phi(1.0, x, 1.0) == 0.8);
  CHECK(heat_phi(0.0, zeros(2), 1.0) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(std::abs(heat_phi(0.0, zeros(2), 1.0) - 1.0 / std::sqrt(std::numbers::pi)) <= 1e-6);
  CHECK_THROWS_AS(heat_phi(-0.1, x, 1.0), std::domain_error);
  CHECK_THROWS_AS(heat_phi(1.1, x, 1.0), std::domain_error);
  CHECK_THROWS_AS(heat_phi(0.5, x, 0.0), std::invalid_argument);

  std::mt19937_64 g(21);
  for (int rep = 0; rep < 200; ++rep) {
    const double t = uniform(g, 0.0, 0.999), sigma = uniform(g, 0.2, 2.0);
    const double x1 = uniform(g, -2, 2), x2 = uniform(g, -2, 2);
    const std::vector<double> x2d{x1, x2};
    CHECK(heat_phi(t, x2d, sigma) == doctest::Approx(heat_phi_pair(t, x1, x2, sigma)).epsilon(1e-11));
    CHECK(heat_grad(t, x2d, sigma)[0] ==
          doctest::Approx(heat_grad_pair(t, x1, x2, sigma)).epsilon(1e-11));
    const auto h = heat_hessian(t, x2d, sigma);
    const double h11 = heat_hessian_pair(t, x1, x2, sigma);
    CHECK(h(0, 0) == doctest::Approx(h11).epsilon(1e-10));
    CHECK(h(0, 1) == doctest::Approx(-h11).epsilon(1e-10));
  }
}

TEST_CASE("heat_phi upper bound sqrt(2 log K)") {
  for (int k = 2; k <= 10; ++k) {
    const double phi = heat_phi(0.0, zeros(k), 1.0);
    CHECK(phi <= std::sqrt(2.0 * std::log(static_cast<double>(k))));
  }
  // Known expected maxima of K iid standard normals.
  CHECK(heat_phi(0.0, zeros(3), 1.0) == doctest::Approx(1.5 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  // 32 nodes leave a few 1e-9 of error once four CDF factors multiply.
  CHECK(std::abs(heat_phi(0.0, zeros(5), 1.0) - 1.1629644736405196) <= 1e-8);
  QuadratureSpec fine;
  fine.nodes = 64;
  CHECK(std::abs(heat_phi(0.0, zeros(5), 1.0, fine) - 1.1629644736405196) <= 1e-13);
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 g(22);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 4;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.99), lambda = uniform(g, -50, 50);
    auto shifted = x;
    for (double& v : shifted) v += lambda;
    CHECK(std::abs(heat_phi(t, shifted, 1.0) - heat_phi(t, x, 1.0) - lambda) <= 1e-10);
    const auto g0 = heat_grad(t, x, 1.0), g1 = heat_grad(t, shifted, 1.0);
    for (int i = 0; i < k; ++i) CHECK(std::abs(g0[i] - g1[i]) <= 1e-10);
    CHECK(std::abs(supersolution_residual(t, shifted, 1.0) -
                   supersolution_residual(t, x, 1.0)) <= 1e-9);
  }
}

TEST_CASE("heat_grad simplex, symmetry and finite differences") {
  for (int k = 2; k <= 6; ++k) {
    const auto p = heat_grad(0.4, std::vector<double>(k, 2.5), 1.0);
    for (int i = 0; i < k; ++i) CHECK(p[i] == doctest::Approx(1.0 / k).epsilon(1e-12));
  }
  CHECK_THROWS_AS(heat_grad(1.0, std::vector<double>{1.0, 1.0}, 1.0), std::domain_error);
  CHECK(heat_grad(1.0, std::vector<double>{1.0, 0.5}, 1.0)[0] == 1.0);

  std::mt19937_64 g(23);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 3;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.95), sigma = uniform(g, 0.3, 1.5);
    const auto p = heat_grad(t, x, sigma);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      CHECK(p[i] >= 0.0);
      total += p[i];
      const double h = 1e-5;
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (heat_phi(t, xp, sigma) - heat_phi(t, xm, sigma)) / (2 * h);
      CHECK(std::abs(fd - p[i]) <= 1e-5);
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("heat_hessian structure") {
  const auto h = heat_hessian(0.0, zeros(2), 1.0);
  // 2 n(0) / sqrt(2) = 1 / sqrt(pi).
  CHECK(h.trace() == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK_THROWS_AS(heat_hessian(1.0, zeros(2), 1.0), std::domain_error);

  std::mt19937_64 g(24);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 4;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.99);
    const auto hh = heat_hessian(t, x, 1.0);
    CHECK((hh - hh.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    for (int i = 0; i < k; ++i) {
      CHECK(std::abs(hh.row(i).sum()) <= 1e-7);
      CHECK(hh(i, i) >= 0.0);
      for (int j = 0; j < k; ++j)
        if (j != i) CHECK(hh(i, j) <= 0.0);
    }
    // Against central differences of the gradient.
    for (int j = 0; j < k; ++j) {
      const double step = 1e-5;
      auto xp = x, xm = x;
      xp[j] += step;
      xm[j] -= step;
      const auto gp = heat_grad(t, xp, 1.0), gm = heat_grad(t, xm, 1.0);
      for (int i = 0; i < k; ++i)
        CHECK(std::abs((gp[i] - gm[i]) / (2 * step) - hh(i, j)) <= 1e-5 * (1 + std::abs(hh(i, j))));
    }
  }
}

TEST_CASE("heat equation: time derivative matches -sigma^2/2 Laplacian") {
  std::mt19937_64 g(25);
  for (int rep = 0; rep < 60; ++rep) {
    const int k = 2 + rep % 3;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.9), sigma = uniform(g, 0.3, 1.5);
    const double lap = heat_hessian(t, x, sigma).trace();
    const double dt = heat_dt(t, x, sigma);
    CHECK(std::abs(dt + 0.5 * sigma * sigma * lap) <= 1e-8);
    const double h = 1e-5;
    const double fd = (heat_phi(t + h, x, sigma) - heat_phi(t - h < 0 ? t : t - h, x, sigma)) /
                      (t - h < 0 ? h : 2 * h);
    const double tol = t - h < 0 ? 1e-4 : 1e-6;
    CHECK(std::abs(fd - dt) <= tol);
  }
}

TEST_CASE("quadrature versus scrambled quasi-Monte Carlo") {
  std::mt19937_64 g(26);
  QuadratureSpec qmc;
  qmc.kind = QuadratureKind::kQuasiMonteCarlo;
  for (int k : {3, 4}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto x = testgen::random_point(g, k, 0.7);
      const double t = uniform(g, 0, 0.9);
      CHECK(std::abs(heat_phi(t, x, 1.0) - heat_phi(t, x, 1.0, qmc)) <= 1e-4);
      const auto pq = heat_grad(t, x, 1.0), pm = heat_grad(t, x, 1.0, qmc);
      for (int i = 0; i < k; ++i) CHECK(std::abs(pq[i] - pm[i]) <= 5e-3);
    }
  }
}

TEST_CASE("semigroup consistency") {
  // phi(t, x) = E phi(t2, x + sigma sqrt(t2 - t) Z), K = 2, outer expectation
  // over Z in R^2 by tensor Gauss-Hermite on the smooth inner potential.
  std::mt19937_64 g(27);
  const auto& rule = gauss_hermite(40);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = testgen::random_point(g, 2, 1.0);
    const double t = uniform(g, 0, 0.5), t2 = uniform(g, 0.6, 0.9), sigma = 1.0;
    const double r = sigma * std::sqrt(t2 - t);
    double acc = 0.0;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a)
      for (std::size_t b = 0; b < rule.nodes.size(); ++b)
        acc += rule.weights[a] * rule.weights[b] *
               heat_phi_pair(t2, x[0] + r * rule.nodes[a], x[1] + r * rule.nodes[b], sigma);
    CHECK(std::abs(acc - heat_phi(t, x, sigma)) <= 1e-5);
  }
  // K = 3 through the quasi-MC sample.
  QuadratureSpec qmc;
  qmc.kind = QuadratureKind::kQuasiMonteCarlo;
  qmc.samples = 1 << 12;
  const auto& z = sobol_normal_sample(3, qmc.samples, qmc.seed);
  const std::vector<double> x{0.2, -0.1, 0.4};
  const double t = 0.1, t2 = 0.7, r = std::sqrt(t2 - t);
  double acc = 0.0;
  for (int p = 0; p < qmc.samples; ++p) {
    std::vector<double> y{x[0] + r * z[3 * p], x[1] + r * z[3 * p + 1], x[2] + r * z[3 * p + 2]};
    acc += heat_phi(t2, y, 1.0);
  }
  CHECK(std::abs(acc / qmc.samples - heat_phi(t, x, 1.0)) <= 1e-3);
}

TEST_CASE("direction matrix") {
  for (int k = 2; k <= 5; ++k) {
    const auto a = SubsetMix::uniform(k);
    for (int i = 0; i < k; ++i) {
      const auto m = direction_matrix(i, a);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(m.minCoeff() >= 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= -1e-12);
      // Row and column i vanish; the rest is (11^T + I)/4.
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
          const double expected = (r == i || c == i) ? 0.0 : 0.25 + (r == c ? 0.25 : 0.0);
          CHECK(m(r, c) == doctest::Approx(expected).epsilon(1e-15));
        }
      // Against any row-sum-zero symmetric H the trace equals Tr(H (11^T + I)/4).
      std::mt19937_64 g(28 + k);
      const auto x = testgen::random_point(g, k, 1.0);
      const auto h = heat_hessian(0.3, x, 1.0);
      const Eigen::MatrixXd quarter =
          0.25 * Eigen::MatrixXd::Ones(k, k) + 0.25 * Eigen::MatrixXd::Identity(k, k);
      CHECK(h.cwiseProduct(m).sum() == doctest::Approx(h.cwiseProduct(quarter).sum()).epsilon(1e-9));
      CHECK(h.cwiseProduct(m).sum() == doctest::Approx(0.25 * h.trace()).epsilon(1e-9));
    }
  }
  CHECK(direction_matrix(0, SubsetMix::vertex(3, 0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(direction_matrix(1, SubsetMix::vertex(3, 7)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(direction_matrix(3, SubsetMix::uniform(3)), std::invalid_argument);
}

TEST_CASE("supersolution residual, sigma = 1") {
  std::mt19937_64 g(29);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 3;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.99);
    CHECK(supersolution_residual(t, x, 1.0) <= 1e-7);
  }
}

TEST_CASE("subsolution residual, sigma = 1/2, uniform adversary") {
  std::mt19937_64 g(30);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 3;
    const auto x = testgen::random_point(g, k, 1.0);
    const double t = uniform(g, 0, 0.99);
    const double r = subsolution_residual(t, x, SubsetMix::uniform(k), 0.5);
    CHECK(r >= -1e-7);
    // dphi/dt = -Laplacian/8 and the trace term is Laplacian/4 at every i,
    // so the residual vanishes identically.
    CHECK(std::abs(r) <= 1e-6);
  }
  std::vector<double> p(4, 0.0);
  p[0] = p[3] = 0.5;
  CHECK(std::abs(subsolution_residual(0.2, std::vector<double>{0.1, -0.3}, SubsetMix(2, p), 0.5)) <
        1.0);
  CHECK_THROWS_AS(subsolution_residual(0.2, zeros(2), SubsetMix::vertex(2, 1), 0.5),
                  std::invalid_argument);
}

TEST_CASE("derivative growth probe") {
  std::vector<double> t_grid;
  for (double gap : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) t_grid.push_back(1.0 - gap);
  std::vector<std::vector<double>> samples{{0.0, 0.0}, {0.5, -0.5}, {1.0, 0.0}, {-0.7, 0.7},
                                           {2.0, 0.0}, {0.25, 0.0}};
  const auto probe = derivative_growth_probe(1.0, 2, t_grid, samples);
  CHECK(probe.bounded);
  CHECK(probe.slope_xxx_raw == doctest::Approx(-1.0).epsilon(0.1));
  for (const auto& row : probe.rows) {
    CHECK(std::isfinite(row.tt));
    CHECK(std::isfinite(row.xxx));
    CHECK(std::isfinite(row.tx));
  }
  // Translation along the diagonal leaves every probe unchanged.
  auto shifted = samples;
  for (auto& sample : shifted)
    for (double& v : sample) v += 3.0;
  const auto moved = derivative_growth_probe(1.0, 2, t_grid, shifted);
  for (std::size_t r = 0; r < probe.rows.size(); ++r) {
    CHECK(moved.rows[r].xxx == doctest::Approx(probe.rows[r].xxx).epsilon(1e-6));
    CHECK(moved.rows[r].tx == doctest::Approx(probe.rows[r].tx).epsilon(1e-6));
    CHECK(moved.rows[r].tt == doctest::Approx(probe.rows[r].tt).epsilon(1e-6));
  }
  CHECK(moved.constant == doctest::Approx(probe.constant).epsilon(1e-6));
  CHECK_THROWS_AS(derivative_growth_probe(1.0, 2, std::vector<double>{1.0}, samples),
                  std::domain_error);
}
