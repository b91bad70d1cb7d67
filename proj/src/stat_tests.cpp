#include "nhpp/stat_tests.hpp"

#include <cmath>

namespace nhpp {

double ks_critical(std::size_t m, double epsilon) {
  if (m < 1) throw std::invalid_argument("KS critical value needs m >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return std::sqrt(-0.5 * std::log(epsilon / 2.0) / static_cast<double>(m));
}

std::vector<double> log_transform(std::span<const double> arrivals, double l, double u) {
  if (!(u > l)) throw std::invalid_argument("log transform needs u > l");
  const double len = u - l;
  const std::size_t m = arrivals.size();
  std::vector<double> x(m);
  double prev = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = arrivals[i] - l;
    if (t < 0.0 || t >= len)
      throw std::invalid_argument("arrival " + std::to_string(arrivals[i]) +
                                  " lies outside [" + std::to_string(l) + ", " +
                                  std::to_string(u) + ")");
    if (t < prev) throw std::invalid_argument("arrivals must be ascending");
    x[i] = -static_cast<double>(m - i) * std::log1p(-(t - prev) / (len - prev));
    prev = t;
  }
  return x;
}

namespace {

TestOutcome trivial_outcome(std::size_t m, double epsilon, double statistic) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  TestOutcome out;
  out.m = m;
  out.epsilon = epsilon;
  out.statistic = statistic;
  out.critical = m == 0 ? 1.0 : std::max(1.0, ks_critical(m, epsilon));
  out.passed = true;
  return out;
}

TestOutcome finish(double d, std::size_t m, double epsilon) {
  TestOutcome out;
  out.statistic = d;
  out.m = m;
  out.epsilon = epsilon;
  out.critical = ks_critical(m, epsilon);
  out.passed = d <= out.critical;
  return out;
}

double exp_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

}  // namespace

TestOutcome log_test(std::span<const double> arrivals, double l, double u, double epsilon) {
  std::vector<double> x = log_transform(arrivals, l, u);
  if (x.empty()) return trivial_outcome(0, epsilon, 0.0);
  std::sort(x.begin(), x.end());
  const double d = ks_statistic_sorted(x, exp_cdf);
  if (x.size() == 1) return trivial_outcome(1, epsilon, d);
  return finish(d, x.size(), epsilon);
}

TestOutcome ks_uniform_test(std::span<const double> arrivals, double l, double u, double epsilon) {
  if (!(u > l)) throw std::invalid_argument("uniform test needs u > l");
  for (double t : arrivals)
    if (t < l || t >= u)
      throw std::invalid_argument("arrival " + std::to_string(t) + " lies outside the interval");
  if (arrivals.empty()) return trivial_outcome(0, epsilon, 0.0);
  std::vector<double> s(arrivals.begin(), arrivals.end());
  std::sort(s.begin(), s.end());
  const double d = ks_statistic_sorted(s, [l, u](double t) { return (t - l) / (u - l); });
  if (s.size() == 1) return trivial_outcome(1, epsilon, d);
  return finish(d, s.size(), epsilon);
}

TestMethod parse_test_method(const std::string& name) {
  if (name == "log") return TestMethod::log;
  if (name == "ks-uniform") return TestMethod::ks_uniform;
  throw std::invalid_argument("unknown test method '" + name + "' (expected log or ks-uniform)");
}

std::string to_string(TestMethod method) {
  return method == TestMethod::log ? "log" : "ks-uniform";
}

TestOutcome poisson_property_test(std::span<const double> arrivals, double l, double u,
                                  double epsilon, TestMethod method) {
  switch (method) {
    case TestMethod::log:
      return log_test(arrivals, l, u, epsilon);
    case TestMethod::ks_uniform:
      return ks_uniform_test(arrivals, l, u, epsilon);
  }
  throw std::invalid_argument("unknown test method");
}

Pooling parse_pooling(const std::string& name) {
  if (name == "per-day") return Pooling::per_day;
  if (name == "pooled") return Pooling::pooled;
  throw std::invalid_argument("unknown pooling '" + name + "' (expected per-day or pooled)");
}

std::string to_string(Pooling pooling) {
  return pooling == Pooling::per_day ? "per-day" : "pooled";
}

namespace {

// Arrivals of one day inside [l, u), mapped through the transform.
void collect(const std::vector<double>& times, double l, double u, const TimeTransform& transform,
             std::vector<double>& out) {
  auto first = std::lower_bound(times.begin(), times.end(), l);
  auto last = std::lower_bound(first, times.end(), u);
  if (transform)
    for (auto it = first; it != last; ++it) out.push_back(transform(*it));
  else
    out.insert(out.end(), first, last);
}

}  // namespace

TestOutcome test_interval(const std::vector<DayArrivals>& days, double l, double u,
                          const PoissonTestConfig& config, const TimeTransform& transform) {
  if (!(u > l)) throw std::invalid_argument("test interval needs u > l");
  const double tl = transform ? transform(l) : l;
  double tu = transform ? transform(u) : u;
  std::vector<double> buf;

  if (config.pooling == Pooling::pooled || days.empty()) {
    for (const auto& d : days) collect(d.times, l, u, transform, buf);
    std::sort(buf.begin(), buf.end());
    if (!buf.empty() && buf.back() >= tu) tu = std::nextafter(buf.back(), INFINITY);
    return poisson_property_test(buf, tl, tu, config.epsilon, config.method);
  }

  const double n = static_cast<double>(days.size());
  const auto allowed = static_cast<std::size_t>(std::floor(2.0 * config.epsilon * n + 1e-9));
  const std::size_t needed = days.size() - std::min(allowed, days.size());
  std::size_t failures = 0, passes = 0;
  for (const auto& d : days) {
    buf.clear();
    collect(d.times, l, u, transform, buf);
    double hi = tu;
    if (!buf.empty() && buf.back() >= hi) hi = std::nextafter(buf.back(), INFINITY);
    if (poisson_property_test(buf, tl, hi, config.epsilon, config.method).passed)
      ++passes;
    else
      ++failures;
    if (failures > allowed || passes >= needed) break;
  }
  TestOutcome out;
  out.m = days.size();
  out.epsilon = config.epsilon;
  out.statistic = static_cast<double>(failures) / n;
  out.critical = std::max(2.0 * config.epsilon, static_cast<double>(allowed) / n);
  out.passed = failures <= allowed;
  return out;
}

}  // namespace nhpp
