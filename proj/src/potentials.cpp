#include "banditscape/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "banditscape/fit.hpp"
#include "banditscape/quadrature.hpp"

namespace banditscape {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("time must lie in [0, 1]");
}

void check_open_time(double t) {
  if (!(t >= 0.0 && t < 1.0))
    throw std::domain_error("derivatives need t in [0, 1)");
}

void check_inputs(std::span<const double> x, double sigma) {
  if (x.empty()) throw std::invalid_argument("empty state vector");
  if (static_cast<int>(x.size()) > kMaxActions)
    throw std::invalid_argument("too many actions");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("sigma must be positive");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite state");
}

// Coordinates shifted so the max is 0; the 1-direction factors out exactly.
std::vector<double> centered(std::span<const double> x, double& shift) {
  shift = *std::max_element(x.begin(), x.end());
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v -= shift;
  return y;
}

// P[i][q] = prod_{k != i} Phi((y_i - y_k)/s + z_q).
std::vector<double> argmax_table(const std::vector<double>& y, double s,
                                 const GaussHermiteRule& rule) {
  const std::size_t k_dim = y.size(), n = rule.nodes.size();
  std::vector<double> table(k_dim * n, 1.0);
  for (std::size_t i = 0; i < k_dim; ++i)
    for (std::size_t k = 0; k < k_dim; ++k) {
      if (k == i) continue;
      const double c = (y[i] - y[k]) / s;
      for (std::size_t q = 0; q < n; ++q)
        table[i * n + q] *= normal_cdf(c + rule.nodes[q]);
    }
  return table;
}

std::vector<double> gradient_at_terminal(std::span<const double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<double> p(x.size(), 0.0);
  int hits = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] == top) {
      p[i] = 1.0;
      ++hits;
    }
  if (hits > 1)
    throw std::domain_error("gradient undefined at a tied maximum when t = 1");
  return p;
}

}  // namespace

double HeatPotential::phi(double t, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_actions)
    throw std::invalid_argument("state dimension does not match potential");
  return heat_phi(t, x, sigma, quadrature);
}

ActionMix HeatPotential::grad(double t, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_actions)
    throw std::invalid_argument("state dimension does not match potential");
  return heat_grad(t, x, sigma, quadrature);
}

double heat_phi(double t, std::span<const double> x, double sigma,
                const QuadratureSpec& q) {
  check_time(t);
  check_inputs(x, sigma);
  if (t == 1.0) return *std::max_element(x.begin(), x.end());
  const double s = sigma * std::sqrt(1.0 - t);
  double shift = 0.0;
  const auto y = centered(x, shift);
  const std::size_t k_dim = y.size();

  if (q.kind == QuadratureKind::kQuasiMonteCarlo) {
    const auto& z = sobol_normal_sample(static_cast<int>(k_dim), q.samples, q.seed);
    double acc = 0.0;
    for (int p = 0; p < q.samples; ++p) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < k_dim; ++i)
        best = std::max(best, y[i] + s * z[p * k_dim + i]);
      acc += best;
    }
    return shift + acc / q.samples;
  }

  const auto& rule = gauss_hermite(q.nodes);
  const auto table = argmax_table(y, s, rule);
  const std::size_t n = rule.nodes.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < k_dim; ++i)
    for (std::size_t j = 0; j < n; ++j)
      acc += rule.weights[j] * (y[i] + s * rule.nodes[j]) * table[i * n + j];
  return shift + acc;
}

ActionMix heat_grad(double t, std::span<const double> x, double sigma,
                    const QuadratureSpec& q) {
  check_time(t);
  check_inputs(x, sigma);
  if (t == 1.0) return ActionMix(gradient_at_terminal(x));
  const double s = sigma * std::sqrt(1.0 - t);
  double shift = 0.0;
  const auto y = centered(x, shift);
  const std::size_t k_dim = y.size();
  std::vector<double> p(k_dim, 0.0);

  if (q.kind == QuadratureKind::kQuasiMonteCarlo) {
    const auto& z = sobol_normal_sample(static_cast<int>(k_dim), q.samples, q.seed);
    for (int r = 0; r < q.samples; ++r) {
      std::size_t arg = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < k_dim; ++i) {
        const double v = y[i] + s * z[r * k_dim + i];
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      p[arg] += 1.0;
    }
  } else {
    const auto& rule = gauss_hermite(q.nodes);
    const auto table = argmax_table(y, s, rule);
    const std::size_t n = rule.nodes.size();
    for (std::size_t i = 0; i < k_dim; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i] += rule.weights[j] * table[i * n + j];
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return ActionMix(std::move(p));
}

Eigen::MatrixXd heat_hessian(double t, std::span<const double> x, double sigma,
                             int nodes) {
  check_open_time(t);
  check_inputs(x, sigma);
  const double s = sigma * std::sqrt(1.0 - t);
  const int k_dim = static_cast<int>(x.size());
  const auto& rule = gauss_hermite(nodes);
  const std::size_t n = rule.nodes.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k_dim, k_dim);
  std::vector<double> prod(n);
  for (int i = 0; i < k_dim; ++i)
    for (int k = 0; k < k_dim; ++k) {
      if (k == i) continue;
      // Density of x_k + sZ_k meeting x_i + sZ_i while the rest stay below.
      std::fill(prod.begin(), prod.end(), 1.0);
      for (int l = 0; l < k_dim; ++l) {
        if (l == i || l == k) continue;
        const double c = (x[i] - x[l]) / s;
        for (std::size_t q = 0; q < n; ++q) prod[q] *= normal_cdf(c + rule.nodes[q]);
      }
      const double c = (x[i] - x[k]) / s;
      double acc = 0.0;
      for (std::size_t q = 0; q < n; ++q)
        acc += rule.weights[q] * normal_pdf(c + rule.nodes[q]) * prod[q];
      h(i, k) = -acc / s;
    }
  h = 0.5 * (h + h.transpose()).eval();
  for (int i = 0; i < k_dim; ++i) h(i, i) = -h.row(i).sum();
  return h;
}

double heat_dt(double t, std::span<const double> x, double sigma, int nodes) {
  check_open_time(t);
  check_inputs(x, sigma);
  const double s = sigma * std::sqrt(1.0 - t);
  double shift = 0.0;
  const auto y = centered(x, shift);
  const auto& rule = gauss_hermite(nodes);
  const auto table = argmax_table(y, s, rule);
  const std::size_t n = rule.nodes.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t q = 0; q < n; ++q)
      acc += rule.weights[q] * rule.nodes[q] * table[i * n + q];
  return -sigma / (2.0 * std::sqrt(1.0 - t)) * acc;
}

double heat_phi_pair(double t, double x1, double x2, double sigma) {
  check_time(t);
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (t == 1.0) return std::max(x1, x2);
  const double s = sigma * std::sqrt(2.0 * (1.0 - t));
  const double d = x1 - x2;
  return x2 + d * normal_cdf(d / s) + s * normal_pdf(d / s);
}

double heat_grad_pair(double t, double x1, double x2, double sigma) {
  check_time(t);
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (t == 1.0) {
    if (x1 == x2)
      throw std::domain_error("gradient undefined at a tied maximum when t = 1");
    return x1 > x2 ? 1.0 : 0.0;
  }
  const double s = sigma * std::sqrt(2.0 * (1.0 - t));
  return normal_cdf((x1 - x2) / s);
}

double heat_hessian_pair(double t, double x1, double x2, double sigma) {
  check_open_time(t);
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double s = sigma * std::sqrt(2.0 * (1.0 - t));
  return normal_pdf((x1 - x2) / s) / s;
}

namespace {

// e_j when action is not in j, e_{j^c} when it is.
Eigen::VectorXd direction(int num_actions, int action, Subset j) {
  const Subset s = contains(j, action) ? (full_subset(num_actions) & ~j) : j;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(num_actions);
  for (int k = 0; k < num_actions; ++k)
    if (contains(s, k)) e(k) = 1.0;
  return e;
}

}  // namespace

Eigen::MatrixXd direction_matrix(int action, const SubsetMix& a) {
  const int k_dim = a.num_actions();
  if (action < 0 || action >= k_dim)
    throw std::invalid_argument("action index out of range");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k_dim, k_dim);
  for (Subset j = 0; j <= full_subset(k_dim); ++j) {
    if (a[j] == 0.0) continue;
    const Eigen::VectorXd e = direction(k_dim, action, j);
    m.noalias() += a[j] * e * e.transpose();
  }
  return m;
}

double supersolution_residual(double t, std::span<const double> x,
                              double sigma, int nodes) {
  const Eigen::MatrixXd h = heat_hessian(t, x, sigma, nodes);
  const int k_dim = static_cast<int>(x.size());
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k_dim; ++i)
    for (Subset j = 0; j <= full_subset(k_dim); ++j) {
      const Eigen::VectorXd e = direction(k_dim, i, j);
      best = std::max(best, e.dot(h * e));
    }
  return heat_dt(t, x, sigma, nodes) + 0.5 * best;
}

double subsolution_residual(double t, std::span<const double> x,
                            const SubsetMix& a, double sigma, int nodes) {
  if (a.num_actions() != static_cast<int>(x.size()))
    throw std::invalid_argument("adversary mix does not match state dimension");
  if (!is_balanced(a))
    throw std::invalid_argument("subsolution residual needs a balanced adversary mix");
  const Eigen::MatrixXd h = heat_hessian(t, x, sigma, nodes);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.num_actions(); ++i)
    worst = std::min(worst, h.cwiseProduct(direction_matrix(i, a)).sum());
  return heat_dt(t, x, sigma, nodes) + 0.5 * worst;
}

namespace {

double dt_derivative(double t, std::span<const double> x, double sigma) {
  const double h = 1e-3 * (1.0 - t);
  if (t >= h)
    return (heat_dt(t + h, x, sigma) - heat_dt(t - h, x, sigma)) / (2.0 * h);
  return (-3.0 * heat_dt(t, x, sigma) + 4.0 * heat_dt(t + h, x, sigma) -
          heat_dt(t + 2.0 * h, x, sigma)) /
         (2.0 * h);
}

double tx_derivative(double t, std::span<const double> x, double sigma) {
  const double h = 1e-3 * (1.0 - t);
  const auto g0 = heat_grad(t, x, sigma).probs();
  const auto g1 = heat_grad(t + h, x, sigma).probs();
  const auto g2 = heat_grad(t + 2.0 * h, x, sigma).probs();
  double best = 0.0;
  if (t >= h) {
    const auto gm = heat_grad(t - h, x, sigma).probs();
    for (std::size_t i = 0; i < x.size(); ++i)
      best = std::max(best, std::abs(g1[i] - gm[i]) / (2.0 * h));
  } else {
    for (std::size_t i = 0; i < x.size(); ++i)
      best = std::max(best, std::abs(-3.0 * g0[i] + 4.0 * g1[i] - g2[i]) / (2.0 * h));
  }
  return best;
}

double xxx_derivative(double t, std::span<const double> x, double sigma) {
  const double h = 1e-3 * sigma * std::sqrt(1.0 - t);
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  double best = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    const Eigen::MatrixXd d =
        (heat_hessian(t, xp, sigma) - heat_hessian(t, xm, sigma)) / (2.0 * h);
    best = std::max(best, d.cwiseAbs().maxCoeff());
    xp[k] = xm[k] = x[k];
  }
  return best;
}

}  // namespace

GrowthProbe derivative_growth_probe(double sigma, int num_actions,
                                    std::span<const double> t_grid,
                                    const std::vector<std::vector<double>>& samples) {
  if (t_grid.empty()) throw std::invalid_argument("empty t grid");
  if (samples.empty()) throw std::invalid_argument("no probe samples");
  for (const auto& xi : samples)
    if (static_cast<int>(xi.size()) != num_actions)
      throw std::invalid_argument("probe sample has wrong dimension");
  GrowthProbe probe;
  std::vector<double> gaps, tt, xxx, tx, xxx_raw;
  for (double t : t_grid) {
    check_open_time(t);
    const double s = sigma * std::sqrt(1.0 - t);
    GrowthProbeRow row;
    row.t = t;
    for (const auto& xi : samples) {
      // Contract toward the diagonal so probes commute with translations.
      double centre = 0.0;
      for (double v : xi) centre += v;
      centre /= static_cast<double>(xi.size());
      std::vector<double> scaled(xi);
      for (double& v : scaled) v = centre + s * (v - centre);
      const std::array<const std::vector<double>*, 2> points{&xi, &scaled};
      for (const auto* x : points) {
        row.tt = std::max(row.tt, std::abs(dt_derivative(t, *x, sigma)));
        row.tx = std::max(row.tx, tx_derivative(t, *x, sigma));
        row.xxx = std::max(row.xxx, xxx_derivative(t, *x, sigma));
      }
    }
    const double gap = 1.0 - t;
    row.tt_scaled = row.tt * gap * std::sqrt(gap);
    row.xxx_scaled = row.xxx * gap;
    row.tx_scaled = row.tx * gap;
    probe.constant = std::max({probe.constant, row.tt_scaled, row.xxx_scaled,
                               row.tx_scaled});
    gaps.push_back(gap);
    tt.push_back(row.tt_scaled);
    xxx.push_back(row.xxx_scaled);
    tx.push_back(row.tx_scaled);
    xxx_raw.push_back(row.xxx);
    probe.rows.push_back(row);
  }
  if (gaps.size() >= 2) {
    probe.slope_tt = loglog_slope(gaps, tt);
    probe.slope_xxx = loglog_slope(gaps, xxx);
    probe.slope_tx = loglog_slope(gaps, tx);
    probe.slope_xxx_raw = loglog_slope(gaps, xxx_raw);
  }
  probe.bounded = std::abs(probe.slope_tt) < 0.1 &&
                  std::abs(probe.slope_xxx) < 0.1 &&
                  std::abs(probe.slope_tx) < 0.1;
  return probe;
}

}  // namespace banditscape
