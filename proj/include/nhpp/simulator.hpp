#pragma once

#include "nhpp/core.hpp"
#include "nhpp/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nhpp {

/// Clamped piecewise-linear rate. On segment k the rate is
/// max(0, slope_k * t / scale + intercept_k), counted per `scale` seconds.
class PiecewiseLinearRate {
 public:
  PiecewiseLinearRate(std::vector<double> breakpoints, std::vector<double> slopes,
                      std::vector<double> intercepts, double scale);

  static PiecewiseLinearRate constant(TimeWindow window, double level, double scale = 1.0);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& intercepts() const { return intercepts_; }
  double scale() const { return scale_; }
  std::size_t num_segments() const { return slopes_.size(); }
  TimeWindow domain() const { return {breakpoints_.front(), breakpoints_.back()}; }

  double operator()(double t) const;
  double segment_value(std::size_t k, double t) const;

  /// Expected number of arrivals on [a, b].
  double integral(double a, double b) const;
  double max_value(double a, double b) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
  double scale_;
};

PiecewiseLinearRate af_rate();

/// Inverse-CDF sampler for arrivals on a window with density proportional to
/// a piecewise-linear rate.
class ArrivalSampler {
 public:
  ArrivalSampler(const PiecewiseLinearRate& rate, TimeWindow window);

  double total() const { return cumulative_.back(); }
  /// Normalized cumulative rate at t, in [0, 1].
  double cdf(double t) const;
  double quantile(double p) const;

 private:
  // Linear pieces on which the clamped rate is a single affine function.
  std::vector<double> lo_, hi_, r_lo_, r_hi_;
  std::vector<double> cumulative_;
  double last_ = 0.0;  // largest representable time before window.end
};

std::vector<double> simulate_thinning(const PiecewiseLinearRate& rate, TimeWindow window,
                                      double rate_upper_bound, Rng& rng);
std::vector<double> simulate_thinning(const PiecewiseLinearRate& rate, TimeWindow window,
                                      double rate_upper_bound, std::uint64_t seed);

std::vector<double> simulate_conditioned(const ArrivalSampler& sampler,
                                         std::pair<std::int64_t, std::int64_t> count_range,
                                         Rng& rng);
std::vector<double> simulate_conditioned(const PiecewiseLinearRate& rate, TimeWindow window,
                                         std::pair<std::int64_t, std::int64_t> count_range,
                                         std::uint64_t seed);

enum class GenerationMode { conditioned, thinning };

GenerationMode parse_generation_mode(const std::string& name);
std::string to_string(GenerationMode mode);

struct GenerationConfig {
  GenerationMode mode = GenerationMode::conditioned;
  std::pair<std::int64_t, std::int64_t> count_range{7000, 8000};
  /// Thinning bound; 0 means the rate maximum over the window.
  double rate_upper_bound = 0.0;
};

struct Dataset {
  EventSeries train;
  EventSeries test;
};

/// Train days are labelled 0..n_train-1 and test days continue the numbering;
/// day d is simulated from substream d of `seed`.
Dataset make_dataset(const PiecewiseLinearRate& rate, TimeWindow window, std::size_t n_train_days,
                     std::size_t n_test_days, const GenerationConfig& config, std::uint64_t seed);

}  // namespace nhpp
