#include "banditscape/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace banditscape {

namespace {

GaussHermiteRule build_gauss_hermite(int n) {
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[k] = v0 * v0;
  }
  // Enforce exact symmetry so odd moments vanish identically.
  for (int k = 0; k < n / 2; ++k) {
    const int m = n - 1 - k;
    const double node = 0.5 * (rule.nodes[m] - rule.nodes[k]);
    const double weight = 0.5 * (rule.weights[m] + rule.weights[k]);
    rule.nodes[k] = -node;
    rule.nodes[m] = node;
    rule.weights[k] = rule.weights[m] = weight;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0F0F0F0Fu) | ((x & 0x0F0F0F0Fu) << 4);
  x = ((x >> 8) & 0x00FF00FFu) | ((x & 0x00FF00FFu) << 8);
  return (x >> 16) | (x << 16);
}

// Nested uniform scramble via the Laine-Karras hash on bit-reversed input.
std::uint32_t owen_scramble(std::uint32_t v, std::uint32_t seed) {
  std::uint32_t x = reverse_bits(v);
  x += seed;
  x ^= x * 0x6c50b47cu;
  x ^= x * 0xb82f1e52u;
  x ^= x * 0xc7afe638u;
  x ^= x * 0x8d22f6e6u;
  return reverse_bits(x);
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<double> build_sobol_normal(int dim, int points,
                                       std::uint64_t seed) {
  std::vector<std::uint32_t> seeds(dim);
  for (int d = 0; d < dim; ++d)
    seeds[d] = static_cast<std::uint32_t>(
        mix64(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(d + 1)) >>
        32);
  std::vector<double> out(static_cast<std::size_t>(points) * dim);
  // Boost starts at index 1; index 0 is the origin.
  boost::random::sobol_engine<std::uint32_t, 32> gen(dim);
  for (int p = 0; p < points; ++p)
    for (int d = 0; d < dim; ++d) {
      const std::uint32_t raw = p == 0 ? 0u : gen();
      const std::uint32_t s = owen_scramble(raw, seeds[d]);
      const double u = (static_cast<double>(s) + 0.5) * 0x1p-32;
      out[static_cast<std::size_t>(p) * dim + d] =
          -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
    }
  return out;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1 || n > 200)
    throw std::invalid_argument("Gauss-Hermite node count must be in [1, 200]");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_gauss_hermite(n));
  return *slot;
}

const std::vector<double>& sobol_normal_sample(int dim, int points,
                                               std::uint64_t seed) {
  if (dim < 1 || dim > 64)
    throw std::invalid_argument("quasi-MC dimension must be in [1, 64]");
  if (points < 1 || (points & (points - 1)) != 0)
    throw std::invalid_argument("quasi-MC point count must be a power of two");
  static std::mutex mu;
  static std::map<std::tuple<int, int, std::uint64_t>,
                  std::unique_ptr<std::vector<double>>>
      cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{dim, points, seed}];
  if (!slot)
    slot = std::make_unique<std::vector<double>>(
        build_sobol_normal(dim, points, seed));
  return *slot;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace banditscape
