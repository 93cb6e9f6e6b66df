#pragma once

#include <cstdint>
#include <vector>

namespace banditscape {

// Gauss-Hermite rule for E f(Z), Z ~ N(0, 1): nodes symmetric about 0 and
// weights summing to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch; cached per n, safe to call concurrently.
const GaussHermiteRule& gauss_hermite(int n);

// points x dim standard normal draws (row-major) from an Owen-scrambled Sobol
// sequence. Cached per (dim, points, seed). points must be a power of two.
const std::vector<double>& sobol_normal_sample(int dim, int points,
                                               std::uint64_t seed);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace banditscape
