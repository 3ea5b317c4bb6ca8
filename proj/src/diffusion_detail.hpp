#pragma once

#include <array>

#include "impact/tim.hpp"

namespace impact::detail {

/// Constant-gap diffusion with explicit gaps per price-changing type.
DiffusionCurve constant_gap_curve(const EventStats& stats, const CorrelationSet& C, const NoiseModel& noise,
                                  std::size_t ell_max, const std::array<double, kNumPriceChanging>& gaps);

}  // namespace impact::detail
