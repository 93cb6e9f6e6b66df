#pragma once

#include <span>

namespace banditscape {

// Ordinary least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

// Slope of log y against log x. Pairs with a non-positive entry are skipped;
// std::invalid_argument when fewer than two pairs remain.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace banditscape
