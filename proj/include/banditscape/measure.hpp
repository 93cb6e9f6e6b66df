#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace banditscape {

using LatticePoint = std::vector<std::int64_t>;

// Finitely supported probability measure on the lattice scale * Z^K.
//
// Atoms are stored as a flat row-major key array (stride dim) and a parallel
// weight array, sorted lexicographically by key. Keys are unique and every
// stored weight is strictly positive. Real coordinates of an atom are
// scale * key.
class DiscreteMeasure {
 public:
  // Builds a measure from unsorted atoms. Duplicate keys are merged, zero
  // weights dropped and the result renormalized. Throws std::invalid_argument
  // on negative weights, zero total mass, dim < 1 or scale <= 0.
  DiscreteMeasure(int dim, double scale, std::vector<std::int64_t> keys,
                  std::vector<double> weights);

  static DiscreteMeasure point_mass(std::span<const std::int64_t> z,
                                    double scale = 1.0);
  static DiscreteMeasure point_mass_at_origin(int dim, double scale = 1.0);

  int dim() const { return dim_; }
  double scale() const { return scale_; }
  std::size_t size() const { return weights_.size(); }

  std::span<const std::int64_t> keys() const { return keys_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const std::int64_t> key(std::size_t atom) const {
    return std::span<const std::int64_t>(keys_).subspan(atom * dim_, dim_);
  }
  double weight(std::size_t atom) const { return weights_[atom]; }

  // Real coordinates scale * key of one atom.
  std::vector<double> point(std::size_t atom) const;

  // Weight at a lattice key, 0 if absent.
  double weight_at(std::span<const std::int64_t> z) const;

  double total_mass() const;

 private:
  struct Sorted {};
  // Trusted constructor: atoms already sorted, unique, positive.
  DiscreteMeasure(Sorted, int dim, double scale,
                  std::vector<std::int64_t> keys, std::vector<double> weights);

  friend DiscreteMeasure pushforward_shift(const DiscreteMeasure&,
                                           std::span<const std::int64_t>);
  friend DiscreteMeasure scale(const DiscreteMeasure&, double);
  friend DiscreteMeasure mix(
      std::span<const std::pair<double, DiscreteMeasure>>);

  int dim_ = 0;
  double scale_ = 1.0;
  std::vector<std::int64_t> keys_;
  std::vector<double> weights_;
};

// Translation by the lattice vector v (real shift scale * v).
DiscreteMeasure pushforward_shift(const DiscreteMeasure& m,
                                  std::span<const std::int64_t> v);

// Dilation of the support by lambda > 0; only the scale field changes.
DiscreteMeasure scale(const DiscreteMeasure& m, double lambda);

// Re-expresses m on the lattice new_scale * Z^K. Throws if some atom does not
// land on that lattice (within 1e-9 lattice units).
DiscreteMeasure relattice(const DiscreteMeasure& m, double new_scale);

// Weighted mixture, renormalized. All components must share dim and scale
// (relative 1e-12); otherwise std::invalid_argument.
DiscreteMeasure mix(std::span<const std::pair<double, DiscreteMeasure>> parts);
DiscreteMeasure mix(const std::vector<std::pair<double, DiscreteMeasure>>& parts);

std::vector<double> mean(const DiscreteMeasure& m);

using RealFunction = std::function<double(std::span<const double>)>;
double integrate(const DiscreteMeasure& m, const RealFunction& f);

// max_i x^i, the terminal payoff.
double max_coordinate(std::span<const double> x);

struct PruneResult {
  DiscreteMeasure measure;
  double removed_mass;
};

// Drops atoms with weight < eps and renormalizes. Throws std::domain_error when
// every atom would be removed.
PruneResult prune(const DiscreteMeasure& m, double eps = 1e-12);

// Largest Euclidean distance between two atoms (real coordinates).
double support_diameter(const DiscreteMeasure& m);

// Atomwise sup-distance between weights; keys missing on one side count with
// weight 0. Scales must agree.
double max_weight_difference(const DiscreteMeasure& a, const DiscreteMeasure& b);

// {"k": K, "scale": s, "atoms": [[z1..zK, w], ...]} with atoms in
// lexicographic order.
nlohmann::json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

}  // namespace banditscape
