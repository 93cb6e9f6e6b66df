#include "banditscape/calculus.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <stdexcept>

#include "banditscape/fit.hpp"
#include "banditscape/strategies.hpp"

namespace banditscape {

FunctionalSpec FunctionalSpec::linear(std::vector<double> w) {
  if (w.size() < 2) throw std::invalid_argument("functional needs K >= 2");
  FunctionalSpec s;
  s.kind = FunctionalKind::kLinear;
  s.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return s;
}

FunctionalSpec FunctionalSpec::quadratic_x(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() < 2)
    throw std::invalid_argument("quadratic functional needs a square K x K matrix, K >= 2");
  FunctionalSpec s;
  s.kind = FunctionalKind::kQuadraticX;
  s.M = 0.5 * (M + M.transpose());
  return s;
}

FunctionalSpec FunctionalSpec::squared_mean(std::vector<double> g) {
  if (g.size() < 2) throw std::invalid_argument("functional needs K >= 2");
  FunctionalSpec s;
  s.kind = FunctionalKind::kSquaredMean;
  s.g = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  return s;
}

int FunctionalSpec::dim() const {
  switch (kind) {
    case FunctionalKind::kLinear: return static_cast<int>(w.size());
    case FunctionalKind::kQuadraticX: return static_cast<int>(M.rows());
    case FunctionalKind::kSquaredMean: return static_cast<int>(g.size());
  }
  return 0;
}

namespace {

Eigen::VectorXd mean_vector(const DiscreteMeasure& m) {
  const auto mu = mean(m);
  return Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
}

void check_dim(const FunctionalSpec& spec, int dim) {
  if (spec.dim() != dim)
    throw std::invalid_argument("functional dimension does not match the measure");
}

}  // namespace

double FunctionalSpec::value(const DiscreteMeasure& m) const {
  check_dim(*this, m.dim());
  switch (kind) {
    case FunctionalKind::kLinear:
      return w.dot(mean_vector(m));
    case FunctionalKind::kQuadraticX: {
      double acc = 0.0;
      for (std::size_t a = 0; a < m.size(); ++a) {
        const auto p = m.point(a);
        const Eigen::Map<const Eigen::VectorXd> x(p.data(), static_cast<Eigen::Index>(p.size()));
        acc += m.weight(a) * x.dot(M * x);
      }
      return acc;
    }
    case FunctionalKind::kSquaredMean: {
      const double gm = g.dot(mean_vector(m));
      return gm * gm;
    }
  }
  return 0.0;
}

FunctionalSpec functional_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") return FunctionalSpec::linear(j.at("w").get<std::vector<double>>());
  if (kind == "squared_mean")
    return FunctionalSpec::squared_mean(j.at("g").get<std::vector<double>>());
  if (kind == "quadratic_x") {
    const auto rows = j.at("M").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd M(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size())
        throw std::invalid_argument("quadratic_x needs a square matrix");
      for (std::size_t c = 0; c < rows.size(); ++c) M(r, c) = rows[r][c];
    }
    return FunctionalSpec::quadratic_x(M);
  }
  throw std::invalid_argument("unknown functional kind '" + kind +
                              "'; valid kinds: linear, quadratic_x, squared_mean");
}

FlatDerivatives flat_derivatives(const FunctionalSpec& spec, const DiscreteMeasure& m) {
  check_dim(spec, m.dim());
  const int k = m.dim();
  FlatDerivatives d;
  d.dm = Eigen::VectorXd::Zero(k);
  d.dxdm = Eigen::MatrixXd::Zero(k, k);
  d.dmm = Eigen::MatrixXd::Zero(k, k);
  const Eigen::VectorXd mu = mean_vector(m);
  for (std::size_t a = 0; a < m.size(); ++a) {
    const auto p = m.point(a);
    const Eigen::Map<const Eigen::VectorXd> x(p.data(), k);
    switch (spec.kind) {
      case FunctionalKind::kLinear: d.flat.push_back(spec.w.dot(x)); break;
      case FunctionalKind::kQuadraticX: d.flat.push_back(x.dot(spec.M * x)); break;
      case FunctionalKind::kSquaredMean:
        d.flat.push_back(2.0 * spec.g.dot(mu) * spec.g.dot(x));
        break;
    }
  }
  switch (spec.kind) {
    case FunctionalKind::kLinear:
      d.dm = spec.w;
      break;
    case FunctionalKind::kQuadraticX:
      d.dm = 2.0 * spec.M * mu;
      d.dxdm = 2.0 * spec.M;
      break;
    case FunctionalKind::kSquaredMean:
      d.dm = 2.0 * spec.g.dot(mu) * spec.g;
      d.dmm = 2.0 * spec.g * spec.g.transpose();
      break;
  }
  return d;
}

DiscreteMeasure a_measure(const SubsetMix& a, const DiscreteMeasure& m, Signal y,
                          int horizon) {
  if (horizon < 1) throw std::invalid_argument("T must be >= 1");
  if (a.num_actions() != m.dim())
    throw std::invalid_argument("adversary mix does not match measure dimension");
  if (!(hat_a(a, y) > 0.0))
    throw std::domain_error("update measure undefined when hat_a(y) = 0");
  const DiscreteMeasure fine = relattice(m, 1.0 / std::sqrt(static_cast<double>(horizon)));
  // Shifts act in lattice units, i.e. by e / sqrt(T) in real coordinates.
  return belief_update(fine, a, y);
}

namespace {

struct ExpansionTerms {
  Eigen::VectorXd v;
  double sign;  // -1 for +i, +1 for -i
  double second;
};

ExpansionTerms expansion_terms(const FunctionalSpec& spec, const SubsetMix& a,
                               const DiscreteMeasure& m, Signal y) {
  const int k = m.dim();
  const auto v = v_vector(a, y);
  ExpansionTerms terms;
  terms.v = Eigen::Map<const Eigen::VectorXd>(v.data(), k);
  terms.sign = y.rewarded ? -1.0 : 1.0;
  const auto d = flat_derivatives(spec, m);
  const double total = hat_a(a, y);
  const Subset full = full_subset(k);
  double local = 0.0;
  for (Subset j = 0; j <= full; ++j) {
    if (a[j] == 0.0 || contains(j, y.action) != y.rewarded) continue;
    const Subset dir = y.rewarded ? (full & ~j) : j;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i)
      if (contains(dir, i)) e(i) = 1.0;
    local += a[j] / total * e.dot(d.dxdm * e);
  }
  // The double sum over (j, k) factors through the mean drift V.
  terms.second = 0.5 * local + 0.5 * terms.v.dot(d.dmm * terms.v);
  return terms;
}

ExpansionReport finish(std::vector<ExpansionRow> rows) {
  ExpansionReport report;
  report.rows = std::move(rows);
  std::vector<double> ts, errs;
  report.exact = true;
  for (const auto& r : report.rows) {
    report.max_error = std::max(report.max_error, r.error);
    if (r.error > kExactnessThreshold) {
      report.exact = false;
      ts.push_back(r.horizon);
      errs.push_back(r.error);
    }
  }
  if (ts.size() >= 2) report.slope = loglog_slope(ts, errs);
  return report;
}

void check_horizons(const std::vector<int>& horizons) {
  if (horizons.empty()) throw std::invalid_argument("need at least one T");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw std::invalid_argument("T must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw std::invalid_argument("T list must be strictly increasing");
  }
}

}  // namespace

ExpansionReport first_order_check(const FunctionalSpec& spec, const SubsetMix& a,
                                  const DiscreteMeasure& m, Signal y,
                                  const std::vector<int>& horizons) {
  check_horizons(horizons);
  const auto terms = expansion_terms(spec, a, m, y);
  const double predicted = terms.sign * terms.v.dot(flat_derivatives(spec, m).dm);
  const double base = spec.value(m);
  std::vector<ExpansionRow> rows;
  for (int t : horizons) {
    const double root = std::sqrt(static_cast<double>(t));
    const double measured = root * (spec.value(a_measure(a, m, y, t)) - base);
    rows.push_back({t, measured, predicted, std::abs(measured - predicted)});
  }
  return finish(std::move(rows));
}

ExpansionReport second_order_check(const FunctionalSpec& spec, const SubsetMix& a,
                                   const DiscreteMeasure& m, Signal y,
                                   const std::vector<int>& horizons) {
  check_horizons(horizons);
  const auto terms = expansion_terms(spec, a, m, y);
  const double first = terms.sign * terms.v.dot(flat_derivatives(spec, m).dm);
  const double base = spec.value(m);
  std::vector<ExpansionRow> rows;
  for (int t : horizons) {
    const double root = std::sqrt(static_cast<double>(t));
    const double delta = spec.value(a_measure(a, m, y, t)) - base;
    const double measured = t * (delta - first / root);
    rows.push_back({t, measured, terms.second, std::abs(measured - terms.second)});
  }
  return finish(std::move(rows));
}

namespace {

void check_budget_args(int horizon, int round) {
  if (horizon < 1) throw std::invalid_argument("T must be >= 1");
  if (round < 0 || round >= horizon)
    throw std::invalid_argument("error budget needs 0 <= n < T");
}

}  // namespace

ErrorBudgetTerms error_budget_terms(int horizon, int round) {
  check_budget_args(horizon, round);
  const double big_t = horizon;
  const double h = 1.0 / big_t;
  const double a = static_cast<double>(horizon - round) / big_t;        // 1 - t_n
  const double c = static_cast<double>(horizon - round - 1) / big_t;    // 1 - t_{n+1}
  ErrorBudgetTerms terms;
  // ∫_c^a (u - c) u^{-3/2} du = 2 (sqrt a - sqrt c)^2 / sqrt a, written without
  // the cancellation.
  const double root_sum = std::sqrt(a) + std::sqrt(c);
  terms.curvature = 2.0 * h * h / (root_sum * root_sum * std::sqrt(a));
  // ∫_c^a (u - c) / u du = h - c log(1 + h / c).
  terms.drift = c == 0.0 ? std::sqrt(big_t) * h
                         : std::sqrt(big_t) * c * (h / c - std::log1p(h / c));
  terms.tail = 1.0 / (std::pow(big_t, 1.5) * a);
  return terms;
}

double error_budget(int horizon, int round, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("C must be positive");
  return error_budget_terms(horizon, round).total(c);
}

ErrorBudgetTerms error_budget_terms_quadrature(int horizon, int round) {
  check_budget_args(horizon, round);
  const double big_t = horizon;
  const double h = 1.0 / big_t;
  const double a = static_cast<double>(horizon - round) / big_t;
  const double c = static_cast<double>(horizon - round - 1) / big_t;
  boost::math::quadrature::tanh_sinh<double> integrator;
  // Substituting s = 1/T - w^2 removes the integrable singularity at the
  // last round, where 1 - t_n - s vanishes at s = 1/T.
  const double top = std::sqrt(h);
  const double root_c = std::sqrt(c);
  ErrorBudgetTerms terms;
  terms.curvature = integrator.integrate(
      [&](double w) {
        if (w == 0.0) return 0.0;
        const double r = w / std::hypot(root_c, w);
        return 2.0 * r * r * r;
      },
      0.0, top, 1e-14);
  terms.drift = std::sqrt(big_t) * integrator.integrate(
                                       [&](double w) {
                                         if (w == 0.0) return 0.0;
                                         const double r = w / std::hypot(root_c, w);
                                         return 2.0 * w * r * r;
                                       },
                                       0.0, top, 1e-14);
  terms.tail = 1.0 / (std::pow(big_t, 1.5) * a);
  return terms;
}

double error_budget_sum(int horizon, double c) {
  double acc = 0.0;
  for (int n = 0; n < horizon; ++n) acc += error_budget(horizon, n, c);
  return acc;
}

}  // namespace banditscape
