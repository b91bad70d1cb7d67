#include "nhpp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace nhpp {

PiecewiseLinearRate::PiecewiseLinearRate(std::vector<double> breakpoints, std::vector<double> slopes,
                                         std::vector<double> intercepts, double scale)
    : breakpoints_(std::move(breakpoints)),
      slopes_(std::move(slopes)),
      intercepts_(std::move(intercepts)),
      scale_(scale) {
  if (breakpoints_.size() < 2) throw std::invalid_argument("rate needs at least two breakpoints");
  if (slopes_.size() + 1 != breakpoints_.size() || intercepts_.size() != slopes_.size())
    throw std::invalid_argument("rate needs one slope and one intercept per segment");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw std::invalid_argument("rate breakpoints must be strictly ascending");
  if (!(scale_ > 0.0)) throw std::invalid_argument("rate scale must be positive");
  for (std::size_t k = 0; k < slopes_.size(); ++k)
    if (!std::isfinite(slopes_[k]) || !std::isfinite(intercepts_[k]))
      throw std::invalid_argument("rate coefficients must be finite");
}

PiecewiseLinearRate PiecewiseLinearRate::constant(TimeWindow window, double level, double scale) {
  return PiecewiseLinearRate({window.start, window.end}, {0.0}, {level}, scale);
}

double PiecewiseLinearRate::segment_value(std::size_t k, double t) const {
  return std::max(0.0, slopes_[k] * t / scale_ + intercepts_[k]);
}

double PiecewiseLinearRate::operator()(double t) const {
  if (t < breakpoints_.front() || t > breakpoints_.back())
    throw std::out_of_range("time " + std::to_string(t) + " outside the rate's domain");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto k = static_cast<std::size_t>(it - breakpoints_.begin());
  k = std::min(k == 0 ? 0 : k - 1, slopes_.size() - 1);
  return segment_value(k, t);
}

namespace {

struct Piece {
  double lo, hi, r_lo, r_hi;  // rate per scale unit at the ends
};

// Pieces of [a, b] on which the clamped rate is affine, zero parts dropped.
std::vector<Piece> affine_pieces(const PiecewiseLinearRate& rate, double a, double b) {
  const auto& bp = rate.breakpoints();
  if (a < bp.front() || b > bp.back() || !(b >= a))
    throw std::invalid_argument("interval outside the rate's domain");
  std::vector<Piece> pieces;
  for (std::size_t k = 0; k < rate.num_segments(); ++k) {
    const double lo = std::max(a, bp[k]);
    const double hi = std::min(b, bp[k + 1]);
    if (!(hi > lo)) continue;
    const double s = rate.slopes()[k] / rate.scale();
    const double c = rate.intercepts()[k];
    const double v_lo = s * lo + c;
    const double v_hi = s * hi + c;
    if (v_lo <= 0.0 && v_hi <= 0.0) continue;
    if (v_lo >= 0.0 && v_hi >= 0.0) {
      pieces.push_back({lo, hi, v_lo, v_hi});
      continue;
    }
    const double root = -c / s;
    if (v_lo > 0.0)
      pieces.push_back({lo, root, v_lo, 0.0});
    else
      pieces.push_back({root, hi, 0.0, v_hi});
  }
  return pieces;
}

}  // namespace

double PiecewiseLinearRate::integral(double a, double b) const {
  double total = 0.0;
  for (const auto& p : affine_pieces(*this, a, b))
    total += 0.5 * (p.r_lo + p.r_hi) * (p.hi - p.lo);
  return total / scale_;
}

double PiecewiseLinearRate::max_value(double a, double b) const {
  double best = 0.0;
  for (const auto& p : affine_pieces(*this, a, b)) best = std::max({best, p.r_lo, p.r_hi});
  return best;
}

PiecewiseLinearRate af_rate() {
  std::vector<double> bp;
  for (int i = 0; i <= 8; ++i) bp.push_back(10800.0 * i);
  return PiecewiseLinearRate(std::move(bp),
                             {13.0 / 36.0, 5.0 / 36.0, 25.0 / 36.0, -1.0 / 2.0, -1.0 / 18.0,
                              1.0 / 3.0, -4.0 / 9.0, -5.0 / 9.0},
                             {7.0, 15.0, -25.0, 104.0, 40.0, -30.0, 138.0, 166.0}, 300.0);
}

// ---------------------------------------------------------------------------

ArrivalSampler::ArrivalSampler(const PiecewiseLinearRate& rate, TimeWindow window) {
  cumulative_.push_back(0.0);
  for (const auto& p : affine_pieces(rate, window.start, window.end)) {
    lo_.push_back(p.lo);
    hi_.push_back(p.hi);
    r_lo_.push_back(p.r_lo);
    r_hi_.push_back(p.r_hi);
    cumulative_.push_back(cumulative_.back() + 0.5 * (p.r_lo + p.r_hi) * (p.hi - p.lo));
  }
  last_ = std::nextafter(window.end, window.start);
  if (!(cumulative_.back() > 0.0))
    throw std::invalid_argument("rate integrates to zero over the window");
}

double ArrivalSampler::cdf(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (t >= hi_[i]) {
      acc = cumulative_[i + 1];
      continue;
    }
    if (t > lo_[i]) {
      const double x = t - lo_[i];
      const double k = (r_hi_[i] - r_lo_[i]) / (hi_[i] - lo_[i]);
      acc = cumulative_[i] + r_lo_[i] * x + 0.5 * k * x * x;
    }
    break;
  }
  return std::clamp(acc / total(), 0.0, 1.0);
}

double ArrivalSampler::quantile(double p) const {
  const double target = std::clamp(p, 0.0, 1.0) * total();
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end() - 1, target);
  const auto i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  const double w = target - cumulative_[i];
  const double k = (r_hi_[i] - r_lo_[i]) / (hi_[i] - lo_[i]);
  // Root of r_lo x + k x^2 / 2 = w in the cancellation-free form.
  const double disc = std::max(0.0, r_lo_[i] * r_lo_[i] + 2.0 * k * w);
  const double denom = r_lo_[i] + std::sqrt(disc);
  const double x = denom > 0.0 ? 2.0 * w / denom : 0.0;
  return std::min(std::clamp(lo_[i] + x, lo_[i], hi_[i]), last_);
}

// ---------------------------------------------------------------------------

std::vector<double> simulate_thinning(const PiecewiseLinearRate& rate, TimeWindow window,
                                      double rate_upper_bound, Rng& rng) {
  const double peak = rate.max_value(window.start, window.end);
  if (rate_upper_bound < peak)
    throw std::invalid_argument("rate upper bound " + std::to_string(rate_upper_bound) +
                                " is below the rate maximum " + std::to_string(peak));
  std::vector<double> out;
  if (!(rate_upper_bound > 0.0)) return out;
  std::exponential_distribution<double> gap(rate_upper_bound / rate.scale());
  std::uniform_real_distribution<double> accept(0.0, 1.0);
  double t = window.start;
  for (;;) {
    t += gap(rng);
    if (t >= window.end) break;
    if (accept(rng) * rate_upper_bound < rate(t)) out.push_back(t);
  }
  return out;
}

std::vector<double> simulate_thinning(const PiecewiseLinearRate& rate, TimeWindow window,
                                      double rate_upper_bound, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_thinning(rate, window, rate_upper_bound, rng);
}

std::vector<double> simulate_conditioned(const ArrivalSampler& sampler,
                                         std::pair<std::int64_t, std::int64_t> count_range,
                                         Rng& rng) {
  if (count_range.first < 0 || count_range.second < count_range.first)
    throw std::invalid_argument("count range must satisfy 0 <= low <= high");
  const auto n = std::uniform_int_distribution<std::int64_t>(count_range.first,
                                                             count_range.second)(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& t : out) t = sampler.quantile(u(rng));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> simulate_conditioned(const PiecewiseLinearRate& rate, TimeWindow window,
                                         std::pair<std::int64_t, std::int64_t> count_range,
                                         std::uint64_t seed) {
  Rng rng(seed);
  if (count_range.second == 0) return {};
  return simulate_conditioned(ArrivalSampler(rate, window), count_range, rng);
}

GenerationMode parse_generation_mode(const std::string& name) {
  if (name == "conditioned") return GenerationMode::conditioned;
  if (name == "thinning") return GenerationMode::thinning;
  throw std::invalid_argument("unknown generation mode '" + name +
                              "' (expected conditioned or thinning)");
}

std::string to_string(GenerationMode mode) {
  return mode == GenerationMode::conditioned ? "conditioned" : "thinning";
}

Dataset make_dataset(const PiecewiseLinearRate& rate, TimeWindow window, std::size_t n_train_days,
                     std::size_t n_test_days, const GenerationConfig& config, std::uint64_t seed) {
  if (n_train_days < 1 || n_test_days < 1)
    throw std::invalid_argument("train and test day counts must be at least 1");
  std::optional<ArrivalSampler> sampler;
  double bound = config.rate_upper_bound;
  if (config.mode == GenerationMode::conditioned)
    sampler.emplace(rate, window);
  else if (bound <= 0.0)
    bound = rate.max_value(window.start, window.end);

  std::vector<DayArrivals> train, test;
  for (std::size_t d = 0; d < n_train_days + n_test_days; ++d) {
    Rng rng = make_rng(seed, d);
    DayArrivals day{static_cast<int>(d), {}};
    day.times = sampler ? simulate_conditioned(*sampler, config.count_range, rng)
                        : simulate_thinning(rate, window, bound, rng);
    (d < n_train_days ? train : test).push_back(std::move(day));
  }
  return {EventSeries(window, std::move(train)), EventSeries(window, std::move(test))};
}

}  // namespace nhpp
