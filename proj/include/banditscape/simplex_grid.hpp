#pragma once

#include <span>
#include <vector>

namespace banditscape {

// All points k / r of the (dim-1)-simplex with nonnegative integers k summing
// to r, in lexicographic order of k (descending first coordinate). Vertices
// are always present.
class SimplexGrid {
 public:
  SimplexGrid(int dim, int resolution);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return counts_.size() / dim_; }

  // Integer composition of the resolution; sums to resolution exactly.
  std::span<const int> counts(std::size_t index) const {
    return std::span<const int>(counts_).subspan(index * dim_, dim_);
  }
  std::span<const double> point(std::size_t index) const {
    return std::span<const double>(points_).subspan(index * dim_, dim_);
  }
  double spacing() const { return 1.0 / resolution_; }

 private:
  int dim_;
  int resolution_;
  std::vector<int> counts_;
  std::vector<double> points_;
};

// Number of grid points, C(r + d - 1, d - 1).
std::size_t simplex_grid_size(int dim, int resolution);

// Local refinement candidates around p: p + s * step * (e_i - e_k) for
// s = 1..multiples and ordered pairs i != k, kept when inside the simplex.
std::vector<std::vector<double>> refinement_candidates(std::span<const double> p,
                                                       double step,
                                                       int multiples = 4);

}  // namespace banditscape
