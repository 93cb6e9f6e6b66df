#include "banditscape/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace banditscape {

namespace {

int compare_keys(const std::int64_t* a, const std::int64_t* b, int dim) {
  for (int k = 0; k < dim; ++k) {
    if (a[k] < b[k]) return -1;
    if (a[k] > b[k]) return 1;
  }
  return 0;
}

bool same_scale(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(int dim, double scale,
                                 std::vector<std::int64_t> keys,
                                 std::vector<double> weights)
    : dim_(dim), scale_(scale) {
  if (dim < 1) throw std::invalid_argument("measure dimension must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("measure scale must be positive and finite");
  if (keys.size() != weights.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("key array does not match weight count");

  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return compare_keys(&keys[a * dim], &keys[b * dim], dim) < 0;
  });

  double total = 0.0;
  for (std::size_t idx : order) {
    const double w = weights[idx];
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("measure weights must be finite and >= 0");
    if (w == 0.0) continue;
    const std::int64_t* z = &keys[idx * dim];
    if (!weights_.empty() &&
        compare_keys(&keys_[keys_.size() - dim], z, dim) == 0) {
      weights_.back() += w;
    } else {
      keys_.insert(keys_.end(), z, z + dim);
      weights_.push_back(w);
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("measure has zero total mass");
  for (double& w : weights_) w /= total;
}

DiscreteMeasure::DiscreteMeasure(Sorted, int dim, double scale,
                                 std::vector<std::int64_t> keys,
                                 std::vector<double> weights)
    : dim_(dim),
      scale_(scale),
      keys_(std::move(keys)),
      weights_(std::move(weights)) {}

DiscreteMeasure DiscreteMeasure::point_mass(std::span<const std::int64_t> z,
                                            double scale) {
  return DiscreteMeasure(static_cast<int>(z.size()), scale,
                         std::vector<std::int64_t>(z.begin(), z.end()), {1.0});
}

DiscreteMeasure DiscreteMeasure::point_mass_at_origin(int dim, double scale) {
  return DiscreteMeasure(dim, scale, std::vector<std::int64_t>(dim, 0), {1.0});
}

std::vector<double> DiscreteMeasure::point(std::size_t atom) const {
  std::vector<double> x(dim_);
  for (int k = 0; k < dim_; ++k)
    x[k] = scale_ * static_cast<double>(keys_[atom * dim_ + k]);
  return x;
}

double DiscreteMeasure::weight_at(std::span<const std::int64_t> z) const {
  if (static_cast<int>(z.size()) != dim_) return 0.0;
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const int c = compare_keys(&keys_[mid * dim_], z.data(), dim_);
    if (c == 0) return weights_[mid];
    if (c < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return 0.0;
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DiscreteMeasure pushforward_shift(const DiscreteMeasure& m,
                                  std::span<const std::int64_t> v) {
  if (static_cast<int>(v.size()) != m.dim())
    throw std::invalid_argument("shift dimension does not match measure");
  std::vector<std::int64_t> keys(m.keys_);
  const int dim = m.dim();
  for (std::size_t a = 0; a < m.size(); ++a)
    for (int k = 0; k < dim; ++k) keys[a * dim + k] += v[k];
  // Translation preserves lexicographic order.
  return DiscreteMeasure(DiscreteMeasure::Sorted{}, dim, m.scale(),
                         std::move(keys), m.weights_);
}

DiscreteMeasure scale(const DiscreteMeasure& m, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("scaling factor must be positive");
  return DiscreteMeasure(DiscreteMeasure::Sorted{}, m.dim(),
                         m.scale() * lambda, m.keys_, m.weights_);
}

DiscreteMeasure relattice(const DiscreteMeasure& m, double new_scale) {
  if (!(new_scale > 0.0)) throw std::invalid_argument("scale must be positive");
  const double ratio = m.scale() / new_scale;
  std::vector<std::int64_t> keys(m.keys().size());
  for (std::size_t idx = 0; idx < keys.size(); ++idx) {
    const double target = static_cast<double>(m.keys()[idx]) * ratio;
    const double rounded = std::round(target);
    if (std::abs(target - rounded) > 1e-9)
      throw std::invalid_argument(
          "measure support is not representable on the requested lattice");
    keys[idx] = static_cast<std::int64_t>(rounded);
  }
  return DiscreteMeasure(m.dim(), new_scale, std::move(keys),
                         std::vector<double>(m.weights().begin(),
                                             m.weights().end()));
}

DiscreteMeasure mix(
    std::span<const std::pair<double, DiscreteMeasure>> parts) {
  if (parts.empty()) throw std::invalid_argument("mix of zero components");
  const int dim = parts.front().second.dim();
  const double sc = parts.front().second.scale();
  double total = 0.0;
  for (const auto& [w, m] : parts) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("mixture weights must be finite and >= 0");
    if (m.dim() != dim)
      throw std::invalid_argument("mixture components differ in dimension");
    if (!same_scale(m.scale(), sc))
      throw std::invalid_argument(
          "mixture components differ in scale; rescale first");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights sum to 0");

  // Pairwise merge of sorted atom lists.
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  for (const auto& [w, m] : parts) {
    if (w == 0.0) continue;
    const double f = w / total;
    std::vector<std::int64_t> out_keys;
    std::vector<double> out_w;
    out_keys.reserve(keys.size() + m.keys_.size());
    out_w.reserve(weights.size() + m.size());
    std::size_t p = 0, q = 0;
    const std::size_t np = weights.size(), nq = m.size();
    while (p < np || q < nq) {
      int c;
      if (p == np)
        c = 1;
      else if (q == nq)
        c = -1;
      else
        c = compare_keys(&keys[p * dim], &m.keys_[q * dim], dim);
      if (c < 0) {
        out_keys.insert(out_keys.end(), &keys[p * dim], &keys[p * dim] + dim);
        out_w.push_back(weights[p]);
        ++p;
      } else if (c > 0) {
        out_keys.insert(out_keys.end(), &m.keys_[q * dim],
                        &m.keys_[q * dim] + dim);
        out_w.push_back(f * m.weights_[q]);
        ++q;
      } else {
        out_keys.insert(out_keys.end(), &keys[p * dim], &keys[p * dim] + dim);
        out_w.push_back(weights[p] + f * m.weights_[q]);
        ++p;
        ++q;
      }
    }
    keys = std::move(out_keys);
    weights = std::move(out_w);
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return DiscreteMeasure(DiscreteMeasure::Sorted{}, dim, sc, std::move(keys),
                         std::move(weights));
}

DiscreteMeasure mix(
    const std::vector<std::pair<double, DiscreteMeasure>>& parts) {
  return mix(std::span<const std::pair<double, DiscreteMeasure>>(parts));
}

std::vector<double> mean(const DiscreteMeasure& m) {
  std::vector<double> mu(m.dim(), 0.0);
  for (std::size_t a = 0; a < m.size(); ++a) {
    const auto z = m.key(a);
    for (int k = 0; k < m.dim(); ++k)
      mu[k] += m.weight(a) * static_cast<double>(z[k]);
  }
  for (double& v : mu) v *= m.scale();
  return mu;
}

double integrate(const DiscreteMeasure& m, const RealFunction& f) {
  double acc = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a) acc += m.weight(a) * f(m.point(a));
  return acc;
}

double max_coordinate(std::span<const double> x) {
  return *std::max_element(x.begin(), x.end());
}

PruneResult prune(const DiscreteMeasure& m, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("prune threshold must be >= 0");
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  double removed = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m.weight(a) < eps) {
      removed += m.weight(a);
      continue;
    }
    const auto z = m.key(a);
    keys.insert(keys.end(), z.begin(), z.end());
    weights.push_back(m.weight(a));
  }
  if (weights.empty())
    throw std::domain_error("prune threshold removes every atom");
  return {DiscreteMeasure(m.dim(), m.scale(), std::move(keys),
                          std::move(weights)),
          removed};
}

double support_diameter(const DiscreteMeasure& m) {
  double best = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      double d2 = 0.0;
      for (int k = 0; k < m.dim(); ++k) {
        const double d = m.scale() * static_cast<double>(m.key(a)[k] -
                                                         m.key(b)[k]);
        d2 += d * d;
      }
      best = std::max(best, std::sqrt(d2));
    }
  return best;
}

double max_weight_difference(const DiscreteMeasure& a,
                             const DiscreteMeasure& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cannot compare measures of different dims");
  if (!same_scale(a.scale(), b.scale()))
    throw std::invalid_argument("cannot compare measures on different scales");
  const int dim = a.dim();
  double worst = 0.0;
  std::size_t p = 0, q = 0;
  while (p < a.size() || q < b.size()) {
    int c;
    if (p == a.size())
      c = 1;
    else if (q == b.size())
      c = -1;
    else
      c = compare_keys(a.key(p).data(), b.key(q).data(), dim);
    if (c < 0) {
      worst = std::max(worst, a.weight(p++));
    } else if (c > 0) {
      worst = std::max(worst, b.weight(q++));
    } else {
      worst = std::max(worst, std::abs(a.weight(p++) - b.weight(q++)));
    }
  }
  return worst;
}

nlohmann::json to_json(const DiscreteMeasure& m) {
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t a = 0; a < m.size(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::int64_t z : m.key(a)) row.push_back(z);
    row.push_back(m.weight(a));
    atoms.push_back(std::move(row));
  }
  return {{"k", m.dim()}, {"scale", m.scale()}, {"atoms", std::move(atoms)}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  const int dim = j.at("k").get<int>();
  const double sc = j.value("scale", 1.0);
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  for (const auto& row : j.at("atoms")) {
    if (row.size() != static_cast<std::size_t>(dim) + 1)
      throw std::invalid_argument("atom row must hold K coordinates and a weight");
    for (int k = 0; k < dim; ++k) keys.push_back(row[k].get<std::int64_t>());
    weights.push_back(row[dim].get<double>());
  }
  return DiscreteMeasure(dim, sc, std::move(keys), std::move(weights));
}

}  // namespace banditscape
