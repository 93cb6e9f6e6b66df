#include "banditscape/simplex_grid.hpp"

#include <stdexcept>

namespace banditscape {

std::size_t simplex_grid_size(int dim, int resolution) {
  // C(r + d - 1, d - 1) computed incrementally; exact for the sizes used here.
  std::size_t n = 1;
  for (int k = 1; k < dim; ++k)
    n = n * static_cast<std::size_t>(resolution + k) / static_cast<std::size_t>(k);
  return n;
}

SimplexGrid::SimplexGrid(int dim, int resolution)
    : dim_(dim), resolution_(resolution) {
  if (dim < 1) throw std::invalid_argument("simplex dimension must be >= 1");
  if (resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
  const std::size_t n = simplex_grid_size(dim, resolution);
  if (n > 50'000'000)
    throw std::invalid_argument("simplex grid too large");
  counts_.reserve(n * dim);
  std::vector<int> k(dim, 0);
  // Depth-first over compositions, first coordinate descending.
  auto fill = [&](auto&& self, int pos, int left) -> void {
    if (pos == dim - 1) {
      k[pos] = left;
      counts_.insert(counts_.end(), k.begin(), k.end());
      return;
    }
    for (int v = left; v >= 0; --v) {
      k[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  fill(fill, 0, resolution);
  points_.resize(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i)
    points_[i] = static_cast<double>(counts_[i]) / resolution;
}

std::vector<std::vector<double>> refinement_candidates(std::span<const double> p,
                                                       double step, int multiples) {
  std::vector<std::vector<double>> out;
  const std::size_t d = p.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      if (i == k) continue;
      for (int s = 1; s <= multiples; ++s) {
        const double delta = s * step;
        if (p[k] - delta < -1e-15) break;
        std::vector<double> q(p.begin(), p.end());
        q[i] += delta;
        q[k] -= delta;
        if (q[k] < 0.0) q[k] = 0.0;
        if (q[i] > 1.0) break;
        out.push_back(std::move(q));
      }
    }
  return out;
}

}  // namespace banditscape
