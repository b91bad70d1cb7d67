#include "nhpp/binning.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace nhpp {

TestNull parse_test_null(const std::string& name) {
  if (name == "homogeneous") return TestNull::homogeneous;
  if (name == "fitted") return TestNull::fitted;
  throw std::invalid_argument("unknown test null '" + name + "' (expected homogeneous or fitted)");
}

std::string to_string(TestNull null) {
  return null == TestNull::homogeneous ? "homogeneous" : "fitted";
}

IvanovMode parse_ivanov_mode(const std::string& name) {
  if (name == "strict") return IvanovMode::strict;
  if (name == "refine") return IvanovMode::refine;
  throw std::invalid_argument("unknown ivanov mode '" + name + "' (expected strict or refine)");
}

std::string to_string(IvanovMode mode) { return mode == IvanovMode::strict ? "strict" : "refine"; }

void SearchConfig::validate() const {
  if (max_depth < 1) throw std::invalid_argument("max depth must be at least 1");
  if (max_bins < 1) throw std::invalid_argument("max bins must be at least 1");
  if (max_restarts < 1) throw std::invalid_argument("max restarts must be at least 1");
  if (max_retries < 0) throw std::invalid_argument("max retries must be nonnegative");
  if (gamma && *gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (!gamma && gamma_grid.empty()) throw std::invalid_argument("gamma grid is empty");
  for (double g : gamma_grid)
    if (g < 0.0) throw std::invalid_argument("gamma grid values must be nonnegative");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  if (!(penalty_length_unit > 0.0)) throw std::invalid_argument("penalty length unit must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(test.epsilon > 0.0 && test.epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1)");
}

std::size_t relaxed_bin_cap(const TimeWindow& window, double eta, std::size_t max_bins) {
  const double cap = std::ceil(window.length() / (2.0 * eta) - 1e-9) + 1.0;
  return std::min(max_bins, static_cast<std::size_t>(std::max(1.0, cap)));
}

namespace {

// Cumulative fitted rate of [a, b), tabulated on a grid with a small positive
// floor so the map stays strictly increasing.
TimeTransform fitted_transform(const CellStats& cells, double a, double b, const FitConfig& fit) {
  const auto [first, last] = cell_range(cells, a, b, b >= cells.window.end);
  const BinFit bf = fit_cells(cells, first, last, a, b, fit);
  if (bf.size == 0.0) return nullptr;
  constexpr int grid = 64;
  const double h = (b - a) / grid;
  std::vector<double> v(grid + 1);
  double mean = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double x = -1.0 + 2.0 * i / grid;
    double y = 0.0;
    for (Eigen::Index j = bf.coefficients.size() - 1; j >= 0; --j) y = y * x + bf.coefficients[j];
    v[i] = y;
    mean += std::max(0.0, y) / (grid + 1);
  }
  if (!(mean > 0.0)) return nullptr;
  for (double& y : v) y = std::max(y, 1e-3 * mean);
  std::vector<double> c(grid + 1, 0.0);
  for (int i = 0; i < grid; ++i) c[i + 1] = c[i] + 0.5 * (v[i] + v[i + 1]) * h;
  return [a, h, v = std::move(v), c = std::move(c)](double t) {
    const double s = (t - a) / h;
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, grid - 1);
    const double dx = t - (a + i * h);
    return c[i] + v[i] * dx + 0.5 * (v[i + 1] - v[i]) / h * dx * dx;
  };
}

enum class Objective { binned, penalized };

struct Interval {
  double l, u;
  int depth;
};

class Divider {
 public:
  Divider(const TrainingData& data, const FitConfig& fit, const SearchConfig& config,
          Objective objective, std::size_t max_bins)
      : data_(data), fit_(fit), config_(config), objective_(objective), max_bins_(max_bins) {
    config_.validate();
    fit_.validate();
    if (objective_ == Objective::penalized && !config_.gamma)
      throw std::invalid_argument("penalized search needs gamma");
    TraceEntry first;
    score(first);
    push(std::move(first));
  }

  bool full() const { return knots_.size() + 1 >= max_bins_; }
  const SearchConfig& config() const { return config_; }
  const TimeWindow& window() const { return data_.cells.window; }

  TestOutcome test(double a, double b) const {
    if (!data_.events) throw std::invalid_argument("test-constrained binning needs arrival data");
    TimeTransform transform;
    if (config_.null == TestNull::fitted) transform = fitted_transform(data_.cells, a, b, fit_);
    return test_interval(data_.events->days, a, b, config_.test, transform);
  }

  // Records the partition with `p` added.
  void record(const Interval& in, double p, bool accepted, std::optional<TestOutcome> left,
              std::optional<TestOutcome> right, bool forced = false) {
    TraceEntry e;
    e.forced = forced;
    e.knots = knots_;
    e.knots.insert(std::upper_bound(e.knots.begin(), e.knots.end(), p), p);
    e.accepted = accepted;
    e.lower = in.l;
    e.upper = in.u;
    e.split = p;
    e.left_test = std::move(left);
    e.right_test = std::move(right);
    score(e);
    if (accepted) knots_ = e.knots;
    push(std::move(e));
  }

  double candidate_risk(double p) const {
    std::vector<double> k = knots_;
    k.insert(std::upper_bound(k.begin(), k.end(), p), p);
    return fit_partition(data_.cells, Partition(window(), std::move(k)), fit_).binned_risk();
  }

  SearchTrace finish() { return std::move(trace_); }

 private:
  void score(TraceEntry& e) const {
    const Partition part(window(), e.knots);
    const PartitionFit pf = fit_partition(data_.cells, part, fit_);
    e.binned_risk = pf.binned_risk();
    if (config_.gamma) e.penalized_risk = penalized_risk(pf.risks, pf.sizes, part, *config_.gamma, config_.penalty_length_unit);
  }

  void push(TraceEntry e) {
    if (e.accepted) {
      const double r = objective_ == Objective::penalized ? *e.penalized_risk : e.binned_risk;
      if (trace_.entries.empty() || r < trace_.min_risk) {
        trace_.min_risk = r;
        trace_.best_index = trace_.entries.size();
      }
    }
    trace_.entries.push_back(std::move(e));
  }

  const TrainingData& data_;
  FitConfig fit_;
  SearchConfig config_;
  Objective objective_;
  std::size_t max_bins_;
  std::vector<double> knots_;
  SearchTrace trace_;
};

double draw_split(Rng& rng, const Interval& in) {
  for (;;) {
    const double p = uniform(rng, in.l, in.u);
    if (p > in.l && p < in.u) return p;
  }
}

template <class Attempt>
SearchTrace run_worklist(Divider& div, Rng& rng, Attempt attempt) {
  std::deque<Interval> work{{div.window().start, div.window().end, 0}};
  while (!work.empty() && !div.full()) {
    const Interval in = work.front();
    work.pop_front();
    if (in.depth >= div.config().max_depth) continue;
    for (int tries = 0; tries <= div.config().max_retries; ++tries) {
      const double p = draw_split(rng, in);
      if (attempt(in, p)) {
        work.push_back({in.l, p, in.depth + 1});
        work.push_back({p, in.u, in.depth + 1});
        break;
      }
    }
  }
  return div.finish();
}

}  // namespace

namespace {

SearchTrace ivanov_refine(Divider& div, Rng& rng) {
  const SearchConfig& config = div.config();
  std::deque<Interval> work{{div.window().start, div.window().end, 0}};
  while (!work.empty() && !div.full()) {
    const Interval in = work.front();
    work.pop_front();
    if (in.depth >= config.max_depth || div.test(in.l, in.u).passed) continue;

    std::vector<std::pair<double, double>> candidates;  // (risk, split)
    for (int tries = 0; tries <= config.max_retries; ++tries) {
      const double p = draw_split(rng, in);
      candidates.emplace_back(div.candidate_risk(p), p);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    std::optional<double> chosen;
    for (const auto& [risk, p] : candidates) {
      const TestOutcome left = div.test(in.l, p);
      std::optional<TestOutcome> right;
      if (left.passed) right = div.test(p, in.u);
      if (left.passed && right->passed) {
        div.record(in, p, true, left, right);
        chosen = p;
        break;
      }
      div.record(in, p, false, left, right);
    }
    if (!chosen) {
      chosen = candidates.front().second;
      div.record(in, *chosen, true, std::nullopt, std::nullopt, true);
    }
    work.push_back({in.l, *chosen, in.depth + 1});
    work.push_back({*chosen, in.u, in.depth + 1});
  }
  return div.finish();
}

}  // namespace

SearchTrace ivanov_divide(const TrainingData& data, const FitConfig& fit,
                          const SearchConfig& config, Rng& rng) {
  Divider div(data, fit, config, Objective::binned, config.max_bins);
  if (config.ivanov_mode == IvanovMode::refine) return ivanov_refine(div, rng);
  return run_worklist(div, rng, [&](const Interval& in, double p) {
    const TestOutcome left = div.test(in.l, p);
    std::optional<TestOutcome> right;
    if (left.passed) right = div.test(p, in.u);
    const bool ok = left.passed && right->passed;
    div.record(in, p, ok, left, right);
    return ok;
  });
}

SearchTrace relaxed_divide(const TrainingData& data, const FitConfig& fit,
                           const SearchConfig& config, Rng& rng) {
  Divider div(data, fit, config, Objective::binned,
              relaxed_bin_cap(data.cells.window, config.eta, config.max_bins));
  return run_worklist(div, rng, [&](const Interval& in, double p) {
    const TestOutcome left = div.test(in.l, p);
    std::optional<TestOutcome> right;
    if (left.passed) right = div.test(p, in.u);
    const bool both = left.passed && right->passed;
    const bool ok = both || in.u - in.l > 2.0 * config.eta;
    div.record(in, p, ok, left, right);
    return ok;
  });
}

SearchTrace tikhonov_divide(const TrainingData& data, const FitConfig& fit,
                            const SearchConfig& config, Rng& rng) {
  Divider div(data, fit, config, Objective::penalized, config.max_bins);
  return run_worklist(div, rng, [&](const Interval& in, double p) {
    div.record(in, p, true, std::nullopt, std::nullopt);
    return true;
  });
}

// ---------------------------------------------------------------------------

Method Method::parse(const std::string& name) {
  Method m;
  if (name == "ivanov") {
    m.kind = Kind::ivanov;
  } else if (name == "tikhonov") {
    m.kind = Kind::tikhonov;
  } else if (name == "relaxed") {
    m.kind = Kind::relaxed;
  } else if (name == "unbinned") {
    m.kind = Kind::equal;
    m.bins = 1;
  } else if (name.rfind("equal:", 0) == 0) {
    m.kind = Kind::equal;
    const std::string n = name.substr(6);
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(n, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != n.size() || n.empty() || v < 1)
      throw std::invalid_argument("bad bin count in method '" + name + "'");
    m.bins = static_cast<std::size_t>(v);
  } else {
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected ivanov, tikhonov, relaxed, unbinned or equal:N)");
  }
  return m;
}

std::string Method::name() const {
  switch (kind) {
    case Kind::ivanov:
      return "ivanov";
    case Kind::tikhonov:
      return "tikhonov";
    case Kind::relaxed:
      return "relaxed";
    case Kind::equal:
      return "equal:" + std::to_string(bins);
  }
  return {};
}

namespace {

struct SearchResult {
  Partition partition;
  double objective;
};

SearchResult restart_loop(const TrainingData& data, const Method& method, const FitConfig& fit,
                          const SearchConfig& search, std::vector<SearchTrace>* traces) {
  std::optional<SearchResult> best;
  for (int r = 0; r < search.max_restarts; ++r) {
    Rng rng = make_rng(search.seed, static_cast<std::uint64_t>(r));
    SearchTrace trace;
    switch (method.kind) {
      case Method::Kind::ivanov:
        trace = ivanov_divide(data, fit, search, rng);
        break;
      case Method::Kind::relaxed:
        trace = relaxed_divide(data, fit, search, rng);
        break;
      case Method::Kind::tikhonov:
        trace = tikhonov_divide(data, fit, search, rng);
        break;
      case Method::Kind::equal:
        throw std::logic_error("equal-length binning has no search");
    }
    const TraceEntry& e = trace.best();
    double obj = trace.min_risk;
    if (method.kind == Method::Kind::tikhonov &&
        search.tikhonov_objective == OuterObjective::binned)
      obj = e.binned_risk;
    if (!best || obj < best->objective)
      best = SearchResult{Partition(data.cells.window, e.knots), obj};
    if (traces) traces->push_back(std::move(trace));
  }
  return *best;
}

CountTable head_days(const CountTable& t, std::size_t rows) {
  CountTable out = t;
  out.counts = t.counts.topRows(static_cast<Eigen::Index>(rows));
  return out;
}

CountTable tail_days(const CountTable& t, std::size_t rows) {
  CountTable out = t;
  out.counts = t.counts.bottomRows(static_cast<Eigen::Index>(rows));
  return out;
}

}  // namespace

double select_gamma(const CountTable& train, const FitConfig& fit, const SearchConfig& search) {
  const std::size_t days = train.num_days();
  if (days < 2) throw std::invalid_argument("gamma selection needs at least two training days");
  const auto val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(search.validation_fraction * static_cast<double>(days))),
      1, days - 1);
  const CountTable fit_part = head_days(train, days - val);
  const CountTable val_part = tail_days(train, val);
  TrainingData data{nullptr, summarize(fit_part)};
  Method method;
  method.kind = Method::Kind::tikhonov;

  double best_gamma = search.gamma_grid.front();
  double best_rmse = std::numeric_limits<double>::infinity();
  for (double g : search.gamma_grid) {
    SearchConfig s = search;
    s.gamma = g;
    const SearchResult r = restart_loop(data, method, fit, s, nullptr);
    const double rmse = evaluate(fit_partition(data.cells, r.partition, fit).model, val_part);
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best_gamma = g;
    }
  }
  return best_gamma;
}

FitReport learn(const EventSeries& train_events, const CountTable& train, const CountTable& test,
                const Method& method, const FitConfig& fit, const SearchConfig& search,
                const LearnOptions& options) {
  fit.validate();
  search.validate();
  if (!(train.window == test.window))
    throw std::invalid_argument("train and test windows differ");
  if (train.num_days() == 0) throw std::invalid_argument("no training days");
  if (test.num_days() == 0) throw std::invalid_argument("no test days");

  TrainingData data{&train_events, summarize(train)};
  SearchConfig s = search;
  Partition partition(train.window);
  if (method.kind == Method::Kind::equal) {
    partition = Partition::equal_length(train.window, method.bins);
  } else {
    if (method.kind == Method::Kind::tikhonov && !s.gamma) s.gamma = select_gamma(train, fit, s);
    if (method.kind != Method::Kind::tikhonov) {
      if (!(train_events.window == train.window))
        throw std::invalid_argument("event window does not match count window");
      s.gamma.reset();
    }
    partition = restart_loop(data, method, fit, s, options.traces).partition;
  }

  PartitionFit pf = fit_partition(data.cells, partition, fit);
  FitReport report{method.name(),
                   partition,
                   pf.model,
                   evaluate(pf.model, train),
                   evaluate(pf.model, test),
                   pf.binned_risk(),
                   std::nullopt,
                   std::nullopt,
                   partition.num_bins(),
                   search.seed,
                   pf.sizes,
                   std::nullopt};
  if (s.gamma && method.kind == Method::Kind::tikhonov) {
    report.gamma = s.gamma;
    report.penalized_risk = penalized_risk(pf.risks, pf.sizes, partition, *s.gamma, s.penalty_length_unit);
  }
  if (options.baseline) {
    const PartitionFit eq =
        fit_partition(data.cells, Partition::equal_length(train.window, report.bins), fit);
    report.equal_length = BaselineScores{evaluate(eq.model, train), evaluate(eq.model, test)};
  }
  return report;
}

}  // namespace nhpp
