#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nhpp {

inline constexpr double kSecondsPerDay = 86400.0;

/// Half-open interval [start, end) of seconds-of-day.
struct TimeWindow {
  double start = 0.0;
  double end = kSecondsPerDay;

  TimeWindow() = default;
  TimeWindow(double start, double end);

  double length() const { return end - start; }
  bool contains(double t) const { return t >= start && t < end; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Arrivals of one observed day, ascending.
struct DayArrivals {
  int day = 0;
  std::vector<double> times;
};

/// Repeated daily realizations of a temporal point process on a common window.
struct EventSeries {
  TimeWindow window;
  std::vector<DayArrivals> days;

  EventSeries() = default;
  EventSeries(TimeWindow window, std::vector<DayArrivals> days);

  std::size_t num_days() const { return days.size(); }
  std::size_t total_events() const;
};

/// Per-(day, cell) arrival counts. Cells have width `resolution` seconds;
/// the last cell is truncated at window.end when the width does not divide
/// the window.
struct CountTable {
  TimeWindow window;
  double resolution = 60.0;
  Eigen::MatrixXd counts;  // rows = days, cols = cells

  std::size_t num_days() const { return static_cast<std::size_t>(counts.rows()); }
  std::size_t num_cells() const { return static_cast<std::size_t>(counts.cols()); }
  std::size_t num_points() const { return num_days() * num_cells(); }

  double cell_lower(std::size_t c) const;
  double cell_upper(std::size_t c) const;
  double cell_midpoint(std::size_t c) const;
};

std::size_t cell_count(const TimeWindow& window, double resolution);

CountTable count_events(const EventSeries& events, double resolution = 60.0);

/// Ordered interior knots splitting a window into half-open bins
/// [b_{k-1}, b_k); the last bin also owns window.end.
class Partition {
 public:
  explicit Partition(TimeWindow window, std::vector<double> knots = {});

  static Partition equal_length(TimeWindow window, std::size_t bins);

  const TimeWindow& window() const { return window_; }
  const std::vector<double>& knots() const { return knots_; }
  std::size_t num_bins() const { return knots_.size() + 1; }

  double lower(std::size_t k) const;
  double upper(std::size_t k) const;
  double length(std::size_t k) const { return upper(k) - lower(k); }

  /// Bin index of t; t == window.end maps to the last bin.
  std::size_t bin_of(double t) const;

  /// Copy with `knot` inserted. Throws if it is not strictly inside a bin.
  Partition with_knot(double knot) const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  TimeWindow window_;
  std::vector<double> knots_;
};

/// Piecewise polynomial rate. Bin k's coefficients are monomials in the
/// bin-local coordinate x = (2t - lower - upper) / (upper - lower), x in [-1, 1].
struct RateModel {
  Partition partition;
  int degree = 0;
  std::vector<Eigen::VectorXd> coefficients;
  bool clamp = true;

  RateModel(Partition partition, int degree, std::vector<Eigen::VectorXd> coefficients,
            bool clamp = true);

  double operator()(double t) const;
  double evaluate_bin(std::size_t k, double t) const;
};

/// Monomial coefficients in raw time t of a polynomial given in the local
/// coordinate of [lower, upper).
Eigen::VectorXd to_time_monomials(const Eigen::VectorXd& local, double lower, double upper);

struct TimePoint {
  double t = 0.0;
  double y = 0.0;
};

using BinIndexSets = std::vector<std::vector<std::size_t>>;

BinIndexSets assign_bins(std::span<const double> times, const Partition& partition);

/// Cell indices per bin (cells are placed by their midpoint).
BinIndexSets assign_bins(const CountTable& counts, const Partition& partition);

/// Arrival counts per bin, pooled over days.
std::vector<std::size_t> bin_event_counts(const EventSeries& events, const Partition& partition);

double empirical_risk(const RateModel& model, std::span<const TimePoint> points);

double binned_risk(std::span<const double> risks, std::span<const double> sizes);

/// Binned risk plus gamma * sum_{k < n-1} m_k R_k / |bin k|, bin lengths
/// measured in multiples of `length_unit`. The last bin carries no penalty term.
double penalized_risk(std::span<const double> risks, std::span<const double> sizes,
                      const Partition& partition, double gamma, double length_unit = 1.0);

/// Sample-complexity term of the VC risk bound.
double vc_bound_xi(double m, double h, double eta);

/// Right-hand side of the VC risk bound for losses bounded by `bound`.
double vc_risk_bound(double empirical_risk, double bound, double xi);

struct BaselineScores {
  double rmse_train = 0.0;
  double rmse_test = 0.0;
};

struct FitReport {
  std::string method;
  Partition partition;
  RateModel model;
  double rmse_train = 0.0;
  double rmse_test = 0.0;
  double binned_risk = 0.0;
  std::optional<double> penalized_risk;
  std::optional<double> gamma;
  std::size_t bins = 1;
  std::uint64_t seed = 0;
  std::vector<double> bin_sizes;
  std::optional<BaselineScores> equal_length;

  /// Improvement in percent of test RMSE over the equal-length baseline.
  std::optional<double> rho() const;
};

}  // namespace nhpp
