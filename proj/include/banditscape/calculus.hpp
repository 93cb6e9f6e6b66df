#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "banditscape/game.hpp"
#include "json.hpp"

namespace banditscape {

enum class FunctionalKind {
  kLinear,       // u(m) = ∫ w.x dm
  kQuadraticX,   // u(m) = ∫ x^T M x dm
  kSquaredMean,  // u(m) = (∫ g.x dm)^2
};

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::kLinear;
  Eigen::VectorXd w;
  Eigen::MatrixXd M;  // always symmetric
  Eigen::VectorXd g;

  static FunctionalSpec linear(std::vector<double> w);
  static FunctionalSpec quadratic_x(const Eigen::MatrixXd& M);  // symmetrized
  static FunctionalSpec squared_mean(std::vector<double> g);

  int dim() const;
  double value(const DiscreteMeasure& m) const;
};

FunctionalSpec functional_from_json(const nlohmann::json& j);

// Derivatives of u at m. `flat` holds δu/δm(m, x) at each atom of m; the other
// members are integrated against m (the [m] pairing).
struct FlatDerivatives {
  std::vector<double> flat;
  Eigen::VectorXd dm;    // ∫ D_m u(m, x) dm(x)
  Eigen::MatrixXd dxdm;  // ∫ D_x D_m u(m, x) dm(x)
  Eigen::MatrixXd dmm;   // ∫∫ D^2_mm u(m, x, y) dm(x) dm(y)
};

FlatDerivatives flat_derivatives(const FunctionalSpec& spec, const DiscreteMeasure& m);

// A^{a,m}_{y,sqrt(T)}: the Bayes mixture of shifts by the game increments
// divided by sqrt(T). m must be representable on the lattice Z^K / sqrt(T)
// (std::invalid_argument otherwise). Throws std::domain_error when
// hat_a(y) = 0.
DiscreteMeasure a_measure(const SubsetMix& a, const DiscreteMeasure& m, Signal y,
                          int horizon);

struct ExpansionRow {
  int horizon = 0;
  double measured = 0.0;
  double predicted = 0.0;
  double error = 0.0;
};

struct ExpansionReport {
  std::vector<ExpansionRow> rows;
  // Least-squares slope of log error against log T over the rows whose
  // error exceeds the exactness threshold; empty when fewer than two remain.
  std::optional<double> slope;
  double max_error = 0.0;
  bool exact = false;  // every error at most the threshold
};

// Errors at or below this are treated as exact (machine-level) in fits.
constexpr double kExactnessThreshold = 1e-12;

// Measured sqrt(T) (u(A) - u(m)) against the limit -+ V_{a,y} . D_m u(m, [m]).
ExpansionReport first_order_check(const FunctionalSpec& spec, const SubsetMix& a,
                                  const DiscreteMeasure& m, Signal y,
                                  const std::vector<int>& horizons);

// Measured T (u(A) - u(m) +- V . D_m u / sqrt(T)) against
//   1/2 sum_j a(j)/hat_a e^T D_x D_m u e
//   + 1/2 sum_{j,k} a(j) a(k)/hat_a^2 e_j^T D^2_mm u e_k,
// with e = e_{j^c} for y = +i and e = e_j for y = -i.
ExpansionReport second_order_check(const FunctionalSpec& spec, const SubsetMix& a,
                                   const DiscreteMeasure& m, Signal y,
                                   const std::vector<int>& horizons);

struct ErrorBudgetTerms {
  double curvature = 0.0;  // ∫_0^{1/T} (1/T - s) / (1 - t_n - s)^{3/2} ds
  double drift = 0.0;      // sqrt(T) ∫_0^{1/T} (1/T - s) / (1 - t_n - s) ds
  double tail = 0.0;       // 1 / (T^{3/2} (1 - t_n))
  double total(double c) const { return c * (curvature + drift + tail); }
};

// Closed forms. Requires 0 <= n < T and C > 0.
ErrorBudgetTerms error_budget_terms(int horizon, int round);
double error_budget(int horizon, int round, double c);
// Same integrals by tanh-sinh quadrature.
ErrorBudgetTerms error_budget_terms_quadrature(int horizon, int round);
// sum_{n < T} O(T, n).
double error_budget_sum(int horizon, double c);

}  // namespace banditscape
