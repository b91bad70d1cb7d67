#pragma once

#include "nhpp/core.hpp"

#include <span>
#include <vector>

namespace nhpp {

struct FitConfig {
  int degree = 3;
  bool clamp = true;
  /// Distinct sample times a bin needs for a full-degree fit; below this the
  /// degree drops to (distinct times - 1).
  int min_points = 0;

  void validate() const;
};

struct BinFit {
  Eigen::VectorXd coefficients;  // local coordinate, length degree + 1
  int effective_degree = 0;
  double risk = 0.0;  // mean squared residual over the bin's points
  double size = 0.0;  // number of points
};

/// Least-squares polynomial through (t, y) points of the bin [lower, upper).
BinFit fit_bin(std::span<const TimePoint> points, double lower, double upper,
               const FitConfig& config);

/// Column summaries of a CountTable: every cell is observed once per day, so
/// a fit over cells only needs per-cell means and within-cell sums of squares.
struct CellStats {
  TimeWindow window;
  double resolution = 60.0;
  std::size_t days = 0;
  Eigen::VectorXd midpoint;
  Eigen::VectorXd mean;
  Eigen::VectorXd within;  // sum over days of (y - mean)^2

  std::size_t num_cells() const { return static_cast<std::size_t>(mean.size()); }
};

CellStats summarize(const CountTable& counts);

/// Fit over cells [first, last) that belong to the bin [lower, upper).
BinFit fit_cells(const CellStats& stats, std::size_t first, std::size_t last, double lower,
                 double upper, const FitConfig& config);

struct PartitionFit {
  RateModel model;
  std::vector<double> risks;
  std::vector<double> sizes;

  double binned_risk() const;
};

PartitionFit fit_partition(const CellStats& stats, const Partition& partition,
                           const FitConfig& config);
PartitionFit fit_partition(const CountTable& counts, const Partition& partition,
                           const FitConfig& config);

/// First and one-past-last cell whose midpoint lies in [lower, upper).
std::pair<std::size_t, std::size_t> cell_range(const CellStats& stats, double lower, double upper,
                                               bool last_bin);

/// RMSE of the model over every (day, cell) point, evaluated at cell midpoints.
double evaluate(const RateModel& model, const CountTable& counts);

}  // namespace nhpp
