#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impact/estimators.hpp"
#include "impact/event_model.hpp"
#include "impact/hdim.hpp"
#include "impact/tim.hpp"

namespace impact {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

void write_events_csv(std::ostream& os, const EventStream& stream);
EventStream read_events_csv(std::istream& is, double tick_size = 1.0);

struct BookFeed {
  std::string instrument;
  std::vector<BookUpdate> updates;
};

void write_book_updates_csv(std::ostream& os, const BookFeed& feed);
BookFeed read_book_updates_csv(std::istream& is);

void write_stats_csv(std::ostream& os, const EventStats& stats);
EventStats read_stats_csv(std::istream& is);

/// C, Pi, R and S in one long table: kind,pi1,pi2,lag,value,count.
void write_curves_csv(std::ostream& os, const CorrelationSet& C, const ResponseSet& R, const ReturnResponseSet& S);

struct CurveBundle {
  CorrelationSet C;
  ResponseSet R;
  ReturnResponseSet S;
};

/// Rebuilds the curves; probabilities come from `stats`.
CurveBundle read_curves_csv(std::istream& is, const EventStats& stats);

void write_tim_kernels_csv(std::ostream& os, const TimKernels& kernels);
TimKernels read_tim_kernels_csv(std::istream& is);

/// Unscaled kappa entries. The gaps and scale live in the calibration manifest.
void write_kappa_csv(std::ostream& os, const HdimKernels& kernels);
HdimKernels read_kappa_csv(std::istream& is, const std::array<double, kNumPriceChanging>& delta_R, double scale);

void write_delta_g_star_csv(std::ostream& os, const DeltaGStar& curves);
DeltaGStar read_delta_g_star_csv(std::istream& is);

void write_diffusion_csv(std::ostream& os, std::span<const DiffusionCurve> curves);
std::vector<DiffusionCurve> read_diffusion_csv(std::istream& is);

void write_path_csv(std::ostream& os, const EventStream& path);
EventStream read_path_csv(std::istream& is);

}  // namespace impact
