#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "banditscape/game.hpp"

namespace banditscape {

enum class QuadratureKind { kGaussHermite, kQuasiMonteCarlo };

// How the Gaussian expectation is evaluated. The Gauss-Hermite path conditions
// on which coordinate attains the max, which leaves a one-dimensional smooth
// integrand per coordinate, so `nodes` is the total node count for any K.
// Quasi-MC averages the max over an Owen-scrambled Sobol sample and is used as
// an independent cross-check. Hessian and time derivative always use
// Gauss-Hermite.
struct QuadratureSpec {
  QuadratureKind kind = QuadratureKind::kGaussHermite;
  int nodes = 32;
  int samples = 1 << 16;
  std::uint64_t seed = 0x5eedULL;
};

// phi(t, x) = E max_i (x_i + sigma sqrt(1 - t) Z_i).
struct HeatPotential {
  int num_actions = 2;
  double sigma = 1.0;
  QuadratureSpec quadrature;

  double phi(double t, std::span<const double> x) const;
  ActionMix grad(double t, std::span<const double> x) const;
};

// t outside [0, 1] -> std::domain_error; sigma <= 0 -> std::invalid_argument.
double heat_phi(double t, std::span<const double> x, double sigma,
                const QuadratureSpec& q = {});

// P(i = argmax of x + sigma sqrt(1 - t) Z). At t = 1 the one-hot argmax, or
// std::domain_error when the max is tied.
ActionMix heat_grad(double t, std::span<const double> x, double sigma,
                    const QuadratureSpec& q = {});

// Requires t in [0, 1). Symmetric, rows sum to zero.
Eigen::MatrixXd heat_hessian(double t, std::span<const double> x, double sigma,
                             int nodes = 32);

// d phi / dt from the Gaussian representation (not from the heat equation).
double heat_dt(double t, std::span<const double> x, double sigma,
               int nodes = 32);

// K = 2 closed forms in d = x1 - x2, s = sigma sqrt(2 (1 - t)).
double heat_phi_pair(double t, double x1, double x2, double sigma);
double heat_grad_pair(double t, double x1, double x2, double sigma);  // b(1)
double heat_hessian_pair(double t, double x1, double x2, double sigma);  // H11

// M(i, a) = sum_j a(j) (1{i in j} e_{j^c} e_{j^c}^T + 1{i not in j} e_j e_j^T).
Eigen::MatrixXd direction_matrix(int action, const SubsetMix& a);

// dphi/dt + 1/2 max over actions i and vertex mixes delta_j of
// Tr(D^2 phi M(i, delta_j)).
double supersolution_residual(double t, std::span<const double> x,
                              double sigma, int nodes = 32);

// dphi/dt + 1/2 min_i Tr(D^2 phi M(i, a)). Throws std::invalid_argument unless
// a is balanced.
double subsolution_residual(double t, std::span<const double> x,
                            const SubsetMix& a, double sigma, int nodes = 32);

struct GrowthProbeRow {
  double t = 0.0;
  // sup over probe points of the derivative magnitudes, unscaled
  double tt = 0.0, xxx = 0.0, tx = 0.0;
  // scaled by (1-t)^{3/2}, (1-t), (1-t)
  double tt_scaled = 0.0, xxx_scaled = 0.0, tx_scaled = 0.0;
};

struct GrowthProbe {
  std::vector<GrowthProbeRow> rows;
  double constant = 0.0;  // max of the scaled sups
  // log-log slopes of the scaled sups against (1 - t)
  double slope_tt = 0.0, slope_xxx = 0.0, slope_tx = 0.0;
  // log-log slope of the unscaled third-derivative sup
  double slope_xxx_raw = 0.0;
  bool bounded = false;  // every scaled slope has magnitude < 0.1
};

// Finite-difference estimates of the derivative-growth quantities. Each
// sample xi is probed both as x = xi and contracted toward its diagonal
// projection by sigma sqrt(1 - t); the derivatives concentrate at the
// smoothing scale, so the contracted family is what attains the sup as t -> 1.
// Requires every t in [0, 1).
GrowthProbe derivative_growth_probe(double sigma, int num_actions,
                                    std::span<const double> t_grid,
                                    const std::vector<std::vector<double>>& samples);

}  // namespace banditscape
