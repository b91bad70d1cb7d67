#include "nhpp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nhpp {

TimeWindow::TimeWindow(double s, double e) : start(s), end(e) {
  if (!(std::isfinite(s) && std::isfinite(e)))
    throw std::invalid_argument("time window bounds must be finite");
  if (!(e > s)) throw std::invalid_argument("time window end must exceed start");
  if (s < 0.0 || e > kSecondsPerDay)
    throw std::invalid_argument("time window must lie within one day [0, 86400]");
}

EventSeries::EventSeries(TimeWindow w, std::vector<DayArrivals> d)
    : window(w), days(std::move(d)) {
  for (const auto& day : days) {
    if (!std::is_sorted(day.times.begin(), day.times.end()))
      throw std::invalid_argument("arrivals of day " + std::to_string(day.day) +
                                  " are not sorted");
    if (!day.times.empty() &&
        (day.times.front() < window.start || day.times.back() >= window.end))
      throw std::invalid_argument("arrival of day " + std::to_string(day.day) +
                                  " lies outside the window");
  }
}

std::size_t EventSeries::total_events() const {
  return std::accumulate(days.begin(), days.end(), std::size_t{0},
                         [](std::size_t acc, const DayArrivals& d) { return acc + d.times.size(); });
}

std::size_t cell_count(const TimeWindow& window, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  // Guard against 86400/60 landing a hair above an integer.
  const double cells = window.length() / resolution;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) < 1e-9 * std::max(1.0, cells))
    return static_cast<std::size_t>(rounded);
  return static_cast<std::size_t>(std::ceil(cells));
}

double CountTable::cell_lower(std::size_t c) const {
  return window.start + static_cast<double>(c) * resolution;
}

double CountTable::cell_upper(std::size_t c) const {
  return std::min(window.end, window.start + static_cast<double>(c + 1) * resolution);
}

double CountTable::cell_midpoint(std::size_t c) const {
  return 0.5 * (cell_lower(c) + cell_upper(c));
}

CountTable count_events(const EventSeries& events, double resolution) {
  CountTable table;
  table.window = events.window;
  table.resolution = resolution;
  const std::size_t cells = cell_count(events.window, resolution);
  table.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(events.num_days()),
                                       static_cast<Eigen::Index>(cells));
  for (std::size_t d = 0; d < events.num_days(); ++d) {
    for (double t : events.days[d].times) {
      auto c = static_cast<std::size_t>((t - events.window.start) / resolution);
      c = std::min(c, cells - 1);
      table.counts(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) += 1.0;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

Partition::Partition(TimeWindow window, std::vector<double> knots)
    : window_(window), knots_(std::move(knots)) {
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const double b = knots_[i];
    if (!(b > window_.start && b < window_.end))
      throw std::invalid_argument("knot " + std::to_string(b) + " is not strictly inside the window");
    if (i > 0 && !(b > knots_[i - 1]))
      throw std::invalid_argument("knots must be strictly ascending");
  }
}

Partition Partition::equal_length(TimeWindow window, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("a partition needs at least one bin");
  std::vector<double> knots;
  knots.reserve(bins - 1);
  for (std::size_t k = 1; k < bins; ++k)
    knots.push_back(window.start + window.length() * static_cast<double>(k) /
                                       static_cast<double>(bins));
  return Partition(window, std::move(knots));
}

double Partition::lower(std::size_t k) const { return k == 0 ? window_.start : knots_[k - 1]; }

double Partition::upper(std::size_t k) const {
  return k == knots_.size() ? window_.end : knots_[k];
}

std::size_t Partition::bin_of(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return static_cast<std::size_t>(it - knots_.begin());
}

Partition Partition::with_knot(double knot) const {
  std::vector<double> knots = knots_;
  knots.insert(std::upper_bound(knots.begin(), knots.end(), knot), knot);
  return Partition(window_, std::move(knots));
}

// ---------------------------------------------------------------------------

RateModel::RateModel(Partition p, int d, std::vector<Eigen::VectorXd> c, bool cl)
    : partition(std::move(p)), degree(d), coefficients(std::move(c)), clamp(cl) {
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (coefficients.size() != partition.num_bins())
    throw std::invalid_argument("need one coefficient vector per bin");
  for (const auto& v : coefficients)
    if (v.size() != degree + 1)
      throw std::invalid_argument("coefficient vector length must equal degree + 1");
}

double RateModel::evaluate_bin(std::size_t k, double t) const {
  const double lo = partition.lower(k);
  const double hi = partition.upper(k);
  const double x = (2.0 * t - lo - hi) / (hi - lo);
  const Eigen::VectorXd& c = coefficients[k];
  double value = 0.0;
  for (Eigen::Index j = c.size() - 1; j >= 0; --j) value = value * x + c[j];
  return clamp ? std::max(0.0, value) : value;
}

double RateModel::operator()(double t) const { return evaluate_bin(partition.bin_of(t), t); }

Eigen::VectorXd to_time_monomials(const Eigen::VectorXd& local, double lower, double upper) {
  // x = a t + b; expand sum_j c_j (a t + b)^j with binomial coefficients.
  const double a = 2.0 / (upper - lower);
  const double b = -(lower + upper) / (upper - lower);
  const Eigen::Index n = local.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double binom = 1.0;
    for (Eigen::Index i = 0; i <= j; ++i) {
      out[i] += local[j] * binom * std::pow(a, static_cast<double>(i)) *
                std::pow(b, static_cast<double>(j - i));
      binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

BinIndexSets assign_bins(std::span<const double> times, const Partition& partition) {
  BinIndexSets sets(partition.num_bins());
  const TimeWindow& w = partition.window();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < w.start || t > w.end)
      throw std::invalid_argument("point " + std::to_string(t) + " lies outside the partition window");
    sets[partition.bin_of(t)].push_back(i);
  }
  return sets;
}

BinIndexSets assign_bins(const CountTable& counts, const Partition& partition) {
  if (!(counts.window == partition.window()))
    throw std::invalid_argument("count table window does not match partition window");
  BinIndexSets sets(partition.num_bins());
  for (std::size_t c = 0; c < counts.num_cells(); ++c)
    sets[partition.bin_of(counts.cell_midpoint(c))].push_back(c);
  return sets;
}

std::vector<std::size_t> bin_event_counts(const EventSeries& events, const Partition& partition) {
  if (!(events.window == partition.window()))
    throw std::invalid_argument("event window does not match partition window");
  std::vector<std::size_t> m(partition.num_bins(), 0);
  for (const auto& day : events.days)
    for (double t : day.times) ++m[partition.bin_of(t)];
  return m;
}

double empirical_risk(const RateModel& model, std::span<const TimePoint> points) {
  if (points.empty()) throw std::invalid_argument("empirical risk of an empty sample is undefined");
  double sum = 0.0;
  for (const auto& p : points) {
    const double r = p.y - model(p.t);
    sum += r * r;
  }
  return sum / static_cast<double>(points.size());
}

double binned_risk(std::span<const double> risks, std::span<const double> sizes) {
  if (risks.size() != sizes.size())
    throw std::invalid_argument("per-bin risks and sizes differ in length");
  double m = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < risks.size(); ++k) {
    m += sizes[k];
    weighted += sizes[k] * risks[k];
  }
  if (!(m > 0.0)) throw std::invalid_argument("binned risk needs at least one sample");
  return weighted / m;
}

double penalized_risk(std::span<const double> risks, std::span<const double> sizes,
                      const Partition& partition, double gamma, double length_unit) {
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (!(length_unit > 0.0)) throw std::invalid_argument("length unit must be positive");
  if (risks.size() != partition.num_bins())
    throw std::invalid_argument("per-bin risks do not match the partition");
  const double base = binned_risk(risks, sizes);
  double penalty = 0.0;
  for (std::size_t k = 0; k + 1 < risks.size(); ++k) {
    const double len = partition.length(k) / length_unit;
    if (!(len > 0.0)) throw std::invalid_argument("zero-length bin in penalized risk");
    penalty += sizes[k] * risks[k] / len;
  }
  return base + gamma * penalty;
}

double vc_bound_xi(double m, double h, double eta) {
  if (!(h >= 1.0)) throw std::invalid_argument("VC dimension must be at least 1");
  if (!(m > h)) throw std::invalid_argument("sample count must exceed the VC dimension");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  return (h * (std::log(2.0 * m / h) + 1.0) - std::log(eta / 4.0)) / m;
}

double vc_risk_bound(double empirical, double bound, double xi) {
  if (!(bound > 0.0)) throw std::invalid_argument("loss bound must be positive");
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
  if (empirical < 0.0) throw std::invalid_argument("empirical risk must be nonnegative");
  return empirical + 2.0 * bound * xi * (1.0 + std::sqrt(1.0 + empirical / (bound * xi)));
}

std::optional<double> FitReport::rho() const {
  if (!equal_length || !(equal_length->rmse_test > 0.0)) return std::nullopt;
  return (equal_length->rmse_test - rmse_test) * 100.0 / equal_length->rmse_test;
}

}  // namespace nhpp
