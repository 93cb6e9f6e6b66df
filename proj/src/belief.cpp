#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "banditscape/game.hpp"

namespace banditscape {

namespace {
constexpr double kReducedFloor = 1e-18;
}  // namespace

Belief Belief::exact(DiscreteMeasure m0) {
  Belief b;
  b.mode_ = Mode::kExact;
  b.dim_ = m0.dim();
  b.scale_ = m0.scale();
  b.mean_ = banditscape::mean(m0);
  b.exact_ = std::move(m0);
  return b;
}

Belief Belief::reduced(const DiscreteMeasure& m0) {
  if (m0.dim() < 2)
    throw std::invalid_argument("reduced beliefs need at least two actions");
  Belief b;
  b.mode_ = Mode::kReduced;
  b.dim_ = m0.dim();
  b.scale_ = m0.scale();
  b.mean_ = banditscape::mean(m0);
  const int axes = b.dim_ - 1;
  b.lo_.assign(axes, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(axes, std::numeric_limits<std::int64_t>::min());
  for (std::size_t atom = 0; atom < m0.size(); ++atom) {
    const auto z = m0.key(atom);
    for (int k = 0; k < axes; ++k) {
      const std::int64_t d = z[k] - z[axes];
      b.lo_[k] = std::min(b.lo_[k], d);
      hi[k] = std::max(hi[k], d);
    }
  }
  b.extent_.resize(axes);
  std::size_t cells = 1;
  for (int k = 0; k < axes; ++k) {
    b.extent_[k] = hi[k] - b.lo_[k] + 1;
    cells *= static_cast<std::size_t>(b.extent_[k]);
  }
  b.dense_.assign(cells, 0.0);
  for (std::size_t atom = 0; atom < m0.size(); ++atom) {
    const auto z = m0.key(atom);
    std::size_t flat = 0;
    for (int k = 0; k < axes; ++k)
      flat = flat * b.extent_[k] + static_cast<std::size_t>(z[k] - z[axes] - b.lo_[k]);
    b.dense_[flat] += m0.weight(atom);
  }
  return b;
}

std::span<const std::int64_t> Belief::keys() const {
  if (is_exact()) return exact_->keys();
  ensure_reduced_keys();
  return dense_keys_;
}

std::span<const double> Belief::weights() const {
  return is_exact() ? exact_->weights() : std::span<const double>(dense_);
}

double Belief::level() const { return is_exact() ? 0.0 : mean_[dim_ - 1]; }

void Belief::ensure_reduced_keys() const {
  if (keys_ready_) return;
  keys_ready_ = true;
  const int axes = dim_ - 1;
  dense_keys_.assign(dense_.size() * dim_, 0);
  std::vector<std::int64_t> idx(axes, 0);
  for (std::size_t cell = 0; cell < dense_.size(); ++cell) {
    for (int k = 0; k < axes; ++k) dense_keys_[cell * dim_ + k] = lo_[k] + idx[k];
    for (int k = axes - 1; k >= 0; --k) {
      if (++idx[k] < extent_[k]) break;
      idx[k] = 0;
    }
  }
}

DiscreteMeasure Belief::measure() const {
  if (is_exact()) return *exact_;
  ensure_reduced_keys();
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  for (std::size_t cell = 0; cell < dense_.size(); ++cell) {
    if (dense_[cell] == 0.0) continue;
    keys.insert(keys.end(), dense_keys_.begin() + cell * dim_,
                dense_keys_.begin() + (cell + 1) * dim_);
    weights.push_back(dense_[cell]);
  }
  return DiscreteMeasure(dim_, scale_, std::move(keys), std::move(weights));
}

Belief Belief::updated(const SubsetMix& a, Signal y) const {
  if (a.num_actions() != dim_)
    throw std::invalid_argument("adversary mix does not match belief dimension");
  if (is_exact()) return exact(belief_update(*exact_, a, y));

  const auto parts = conditional_shifts(a, y);
  if (parts.empty())
    return reduced(DiscreteMeasure::point_mass_at_origin(dim_, scale_));

  const int axes = dim_ - 1;
  std::vector<std::int64_t> min_shift(axes, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> max_shift(axes, std::numeric_limits<std::int64_t>::min());
  for (const auto& c : parts)
    for (int k = 0; k < axes; ++k) {
      const std::int64_t d = c.shift[k] - c.shift[axes];
      min_shift[k] = std::min(min_shift[k], d);
      max_shift[k] = std::max(max_shift[k], d);
    }

  Belief next;
  next.mode_ = Mode::kReduced;
  next.dim_ = dim_;
  next.scale_ = scale_;
  next.mean_ = mean_;
  for (const auto& c : parts)
    for (int k = 0; k < dim_; ++k)
      next.mean_[k] += c.weight * scale_ * static_cast<double>(c.shift[k]);

  next.lo_.resize(axes);
  next.extent_.resize(axes);
  std::size_t cells = 1;
  for (int k = 0; k < axes; ++k) {
    next.lo_[k] = lo_[k] + min_shift[k];
    next.extent_[k] = extent_[k] + max_shift[k] - min_shift[k];
    cells *= static_cast<std::size_t>(next.extent_[k]);
  }
  next.dense_.assign(cells, 0.0);

  // Row-wise accumulation; rows run along the last difference axis.
  const std::size_t row_len = static_cast<std::size_t>(extent_[axes - 1]);
  const std::size_t rows = dense_.size() / row_len;
  std::vector<std::int64_t> row_idx(std::max(axes - 1, 0), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (const auto& c : parts) {
      std::size_t base = 0;
      for (int k = 0; k < axes - 1; ++k) {
        const std::int64_t off = c.shift[k] - c.shift[axes] - min_shift[k];
        base = base * next.extent_[k] + static_cast<std::size_t>(row_idx[k] + off);
      }
      const std::int64_t last_off =
          c.shift[axes - 1] - c.shift[axes] - min_shift[axes - 1];
      base = base * next.extent_[axes - 1] + static_cast<std::size_t>(last_off);
      const double w = c.weight;
      const double* src = &dense_[r * row_len];
      double* dst = &next.dense_[base];
      for (std::size_t i = 0; i < row_len; ++i) dst[i] += w * src[i];
    }
    for (int k = axes - 2; k >= 0; --k) {
      if (++row_idx[k] < extent_[k]) break;
      row_idx[k] = 0;
    }
  }

  // Cells whose weight falls below kReducedFloor are set to zero before
  // renormalizing and zero margins are cropped. Only a few edge cells drop per
  // round, so the mass moved over a T-round episode stays near T * 1e-18.
  double total = 0.0;
  for (double& w : next.dense_) {
    if (w < kReducedFloor) w = 0.0;
    total += w;
  }
  if (!(total > 0.0)) throw std::runtime_error("belief lost all mass during update");
  const double inv = 1.0 / total;
  for (double& w : next.dense_) w *= inv;

  std::vector<std::int64_t> first(axes), last(axes);
  if (axes == 1) {
    std::int64_t f = 0, l = next.extent_[0] - 1;
    while (next.dense_[f] == 0.0) ++f;
    while (next.dense_[l] == 0.0) --l;
    first[0] = f;
    last[0] = l;
  } else {
    std::fill(first.begin(), first.end(), std::numeric_limits<std::int64_t>::max());
    std::fill(last.begin(), last.end(), -1);
    std::vector<std::int64_t> idx(axes, 0);
    for (std::size_t cell = 0; cell < next.dense_.size(); ++cell) {
      if (next.dense_[cell] != 0.0)
        for (int k = 0; k < axes; ++k) {
          first[k] = std::min(first[k], idx[k]);
          last[k] = std::max(last[k], idx[k]);
        }
      for (int k = axes - 1; k >= 0; --k) {
        if (++idx[k] < next.extent_[k]) break;
        idx[k] = 0;
      }
    }
  }
  bool crop = false;
  for (int k = 0; k < axes; ++k)
    crop |= first[k] != 0 || last[k] != next.extent_[k] - 1;
  if (crop) {
    std::vector<std::int64_t> ext(axes);
    std::size_t n = 1;
    for (int k = 0; k < axes; ++k) {
      ext[k] = last[k] - first[k] + 1;
      n *= static_cast<std::size_t>(ext[k]);
    }
    std::vector<double> cropped(n);
    if (axes == 1) {
      std::copy_n(next.dense_.begin() + first[0], n, cropped.begin());
    } else {
      std::vector<std::int64_t> idx(axes, 0);
      for (std::size_t cell = 0; cell < n; ++cell) {
        std::size_t src = 0;
        for (int k = 0; k < axes; ++k)
          src = src * next.extent_[k] + static_cast<std::size_t>(idx[k] + first[k]);
        cropped[cell] = next.dense_[src];
        for (int k = axes - 1; k >= 0; --k) {
          if (++idx[k] < ext[k]) break;
          idx[k] = 0;
        }
      }
    }
    for (int k = 0; k < axes; ++k) next.lo_[k] += first[k];
    next.extent_ = std::move(ext);
    next.dense_ = std::move(cropped);
  }
  return next;
}

}  // namespace banditscape
