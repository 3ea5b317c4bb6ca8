#include "impact/compare.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "impact/summation.hpp"

namespace impact {

namespace {

struct Accumulator {
  CompensatedSum diff;
  CompensatedSum ref;
  double max_abs = 0.0;
  std::size_t points = 0;

  void add(double a, double b, double w) {
    const double d = a - b;
    diff.add(w * d * d);
    ref.add(w * b * b);
    max_abs = std::max(max_abs, std::abs(d));
    ++points;
  }

  [[nodiscard]] double relative() const {
    const double r = ref.value();
    return r > 0.0 ? std::sqrt(diff.value() / r) : std::sqrt(diff.value());
  }
};

double weight_at(std::span<const double> weights, std::size_t lag) {
  if (weights.empty()) return 1.0;
  if (lag >= weights.size()) throw GridMismatch("weights shorter than the compared grid");
  if (!(weights[lag] >= 0.0)) throw Error("weights must be nonnegative");
  return weights[lag];
}

}  // namespace

ComparisonReport compare_curves(const DiffusionCurve& a, const DiffusionCurve& b, std::span<const double> weights) {
  if (a.ell_max() != b.ell_max()) throw GridMismatch("diffusion curves have different lag grids");
  Accumulator acc;
  for (std::size_t l = 1; l <= a.ell_max(); ++l) acc.add(a.at(l), b.at(l), weight_at(weights, l));
  ComparisonReport report;
  report.curves.push_back({"D", acc.points, acc.relative(), acc.max_abs});
  report.relative_l2 = acc.relative();
  report.max_abs = acc.max_abs;
  return report;
}

ComparisonReport compare_curves(const ResponseSet& a, const ResponseSet& b, std::span<const double> weights) {
  if (a.grid.ell_max != b.grid.ell_max) throw GridMismatch("response curves have different lag grids");
  Accumulator pooled;
  ComparisonReport report;
  for (EventType t : kAllTypes) {
    if (!a.available(t) || !b.available(t)) continue;
    Accumulator acc;
    for (std::size_t l = 1; l <= a.grid.ell_max; ++l) {
      const double w = weight_at(weights, l);
      acc.add(a.at(t, l), b.at(t, l), w);
      pooled.add(a.at(t, l), b.at(t, l), w);
    }
    report.curves.push_back({"R_" + std::string(to_string(t)), acc.points, acc.relative(), acc.max_abs});
  }
  report.relative_l2 = pooled.relative();
  report.max_abs = pooled.max_abs;
  return report;
}

std::string to_json(const ComparisonReport& report) {
  nlohmann::json j;
  j["relative_l2"] = report.relative_l2;
  j["max_abs"] = report.max_abs;
  j["curves"] = nlohmann::json::array();
  for (const auto& c : report.curves) {
    j["curves"].push_back({{"label", c.label}, {"points", c.points}, {"relative_l2", c.relative_l2},
                           {"max_abs", c.max_abs}});
  }
  return j.dump(2);
}

}  // namespace impact
