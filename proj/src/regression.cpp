#include "nhpp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nhpp {

void FitConfig::validate() const {
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (min_points != 0 && min_points < degree + 1)
    throw std::invalid_argument("minimum points per bin must be at least degree + 1");
}

namespace {

double local_x(double t, double lower, double upper) {
  return (2.0 * t - lower - upper) / (upper - lower);
}

int effective_degree(std::size_t distinct, const FitConfig& config) {
  const auto need = static_cast<std::size_t>(std::max(config.min_points, config.degree + 1));
  if (distinct >= need) return config.degree;
  return std::min(config.degree, static_cast<int>(distinct) - 1);
}

Eigen::MatrixXd vandermonde(const Eigen::VectorXd& x, int degree) {
  Eigen::MatrixXd v(x.size(), degree + 1);
  v.col(0).setOnes();
  for (int j = 1; j <= degree; ++j) v.col(j) = v.col(j - 1).cwiseProduct(x);
  return v;
}

// Weighted least squares; returns coefficients padded to the full degree.
Eigen::VectorXd solve(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                      int degree, int full_degree) {
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(full_degree + 1);
  if (degree < 0) return coef;
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd a = sw.asDiagonal() * vandermonde(x, degree);
  const Eigen::VectorXd b = sw.cwiseProduct(y);
  coef.head(degree + 1) = a.colPivHouseholderQr().solve(b);
  return coef;
}

double horner(const Eigen::VectorXd& c, double x) {
  double v = 0.0;
  for (Eigen::Index j = c.size() - 1; j >= 0; --j) v = v * x + c[j];
  return v;
}

}  // namespace

BinFit fit_bin(std::span<const TimePoint> points, double lower, double upper,
               const FitConfig& config) {
  config.validate();
  if (!(upper > lower)) throw std::invalid_argument("bin needs upper > lower");
  BinFit fit;
  fit.size = static_cast<double>(points.size());
  fit.coefficients = Eigen::VectorXd::Zero(config.degree + 1);
  if (points.empty()) return fit;

  std::vector<double> times;
  times.reserve(points.size());
  for (const auto& p : points) times.push_back(p.t);
  std::sort(times.begin(), times.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(times.begin(), times.end()) - times.begin());

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = local_x(points[i].t, lower, upper);
    y[i] = points[i].y;
  }
  fit.effective_degree = effective_degree(distinct, config);
  fit.coefficients = solve(x, y, Eigen::VectorXd::Ones(n), fit.effective_degree, config.degree);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = y[i] - horner(fit.coefficients, x[i]);
    ss += r * r;
  }
  fit.risk = ss / fit.size;
  return fit;
}

CellStats summarize(const CountTable& counts) {
  CellStats s;
  s.window = counts.window;
  s.resolution = counts.resolution;
  s.days = counts.num_days();
  const auto cells = static_cast<Eigen::Index>(counts.num_cells());
  s.midpoint.resize(cells);
  for (Eigen::Index c = 0; c < cells; ++c)
    s.midpoint[c] = counts.cell_midpoint(static_cast<std::size_t>(c));
  if (s.days == 0) {
    s.mean = Eigen::VectorXd::Zero(cells);
    s.within = Eigen::VectorXd::Zero(cells);
    return s;
  }
  s.mean = counts.counts.colwise().mean().transpose();
  s.within = (counts.counts.rowwise() - s.mean.transpose()).colwise().squaredNorm().transpose();
  return s;
}

BinFit fit_cells(const CellStats& stats, std::size_t first, std::size_t last, double lower,
                 double upper, const FitConfig& config) {
  BinFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(config.degree + 1);
  const auto n = static_cast<Eigen::Index>(last - first);
  if (n <= 0 || stats.days == 0) return fit;
  const auto f = static_cast<Eigen::Index>(first);
  const double days = static_cast<double>(stats.days);

  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = local_x(stats.midpoint[f + i], lower, upper);
  const auto y = stats.mean.segment(f, n);
  fit.effective_degree = effective_degree(static_cast<std::size_t>(n), config);
  fit.coefficients = solve(x, y, Eigen::VectorXd::Constant(n, days), fit.effective_degree,
                           config.degree);
  double between = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = y[i] - horner(fit.coefficients, x[i]);
    between += r * r;
  }
  fit.size = days * static_cast<double>(n);
  fit.risk = (stats.within.segment(f, n).sum() + days * between) / fit.size;
  return fit;
}

std::pair<std::size_t, std::size_t> cell_range(const CellStats& stats, double lower, double upper,
                                               bool last_bin) {
  const double* begin = stats.midpoint.data();
  const double* end = begin + stats.midpoint.size();
  const auto first = static_cast<std::size_t>(std::lower_bound(begin, end, lower) - begin);
  const auto last = last_bin ? stats.num_cells()
                             : static_cast<std::size_t>(std::lower_bound(begin, end, upper) - begin);
  return {first, std::max(first, last)};
}

double PartitionFit::binned_risk() const { return nhpp::binned_risk(risks, sizes); }

PartitionFit fit_partition(const CellStats& stats, const Partition& partition,
                           const FitConfig& config) {
  config.validate();
  if (!(stats.window == partition.window()))
    throw std::invalid_argument("count table window does not match partition window");
  const std::size_t bins = partition.num_bins();
  std::vector<Eigen::VectorXd> coefs;
  std::vector<double> risks, sizes;
  coefs.reserve(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double lo = partition.lower(k), hi = partition.upper(k);
    const auto [first, last] = cell_range(stats, lo, hi, k + 1 == bins);
    BinFit fit = fit_cells(stats, first, last, lo, hi, config);
    coefs.push_back(std::move(fit.coefficients));
    risks.push_back(fit.risk);
    sizes.push_back(fit.size);
  }
  return {RateModel(partition, config.degree, std::move(coefs), config.clamp), std::move(risks),
          std::move(sizes)};
}

PartitionFit fit_partition(const CountTable& counts, const Partition& partition,
                           const FitConfig& config) {
  return fit_partition(summarize(counts), partition, config);
}

double evaluate(const RateModel& model, const CountTable& counts) {
  const TimeWindow& w = model.partition.window();
  if (counts.window.start < w.start || counts.window.end > w.end)
    throw std::invalid_argument("count table window is not inside the model window");
  if (counts.num_points() == 0) throw std::invalid_argument("cannot evaluate on an empty table");
  Eigen::RowVectorXd f(static_cast<Eigen::Index>(counts.num_cells()));
  for (Eigen::Index c = 0; c < f.size(); ++c)
    f[c] = model(counts.cell_midpoint(static_cast<std::size_t>(c)));
  const double ss = (counts.counts.rowwise() - f).squaredNorm();
  return std::sqrt(ss / static_cast<double>(counts.num_points()));
}

}  // namespace nhpp
