#pragma once

#include "nhpp/core.hpp"
#include "nhpp/regression.hpp"
#include "nhpp/rng.hpp"
#include "nhpp/stat_tests.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nhpp {

/// What a candidate half is tested against. `homogeneous` tests the raw
/// arrivals for a constant rate. `fitted` first rescales arrivals by the
/// cumulative rate of the half's own regression fit, so the test asks
/// whether the fitted shape explains the arrivals.
enum class TestNull { homogeneous, fitted };

TestNull parse_test_null(const std::string& name);
std::string to_string(TestNull null);

/// `strict` adopts a split only when both halves pass. `refine` treats a
/// passing interval as a finished bin. A failing interval draws its
/// candidate splits up front and keeps the lowest-risk one whose halves both
/// pass, or the lowest-risk one outright when none does; both halves are
/// then examined in turn.
enum class IvanovMode { strict, refine };

IvanovMode parse_ivanov_mode(const std::string& name);
std::string to_string(IvanovMode mode);

/// Objective the restart loop ranks Tikhonov runs by.
enum class OuterObjective { penalized, binned };

struct SearchConfig {
  int max_depth = 16;
  std::size_t max_bins = 64;
  int max_restarts = 50;
  int max_retries = 20;
  std::optional<double> gamma;  // unset: chosen on a validation split
  std::vector<double> gamma_grid{1e-4, 1e-3, 1e-2, 1e-1};
  double validation_fraction = 0.2;
  double penalty_length_unit = 60.0;  // bin lengths enter the penalty in minutes
  double eta = 3600.0;  // seconds
  PoissonTestConfig test;
  TestNull null = TestNull::homogeneous;
  IvanovMode ivanov_mode = IvanovMode::strict;
  OuterObjective tikhonov_objective = OuterObjective::penalized;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceEntry {
  std::vector<double> knots;
  double binned_risk = 0.0;
  std::optional<double> penalized_risk;
  bool accepted = true;
  bool forced = false;  // refine mode: adopted without a passing test pair
  // Interval and split point that produced the entry (absent for the initial one).
  std::optional<double> lower, upper, split;
  std::optional<TestOutcome> left_test, right_test;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
  double min_risk = 0.0;
  std::size_t best_index = 0;

  const TraceEntry& best() const { return entries.at(best_index); }
};

/// Training data seen by the dividers.
struct TrainingData {
  const EventSeries* events = nullptr;  // required by the test-constrained dividers
  CellStats cells;
};

SearchTrace ivanov_divide(const TrainingData& data, const FitConfig& fit,
                          const SearchConfig& config, Rng& rng);
SearchTrace tikhonov_divide(const TrainingData& data, const FitConfig& fit,
                            const SearchConfig& config, Rng& rng);
/// Failed tests block a division only once the interval is no longer than 2 eta.
SearchTrace relaxed_divide(const TrainingData& data, const FitConfig& fit,
                           const SearchConfig& config, Rng& rng);

/// Bin cap of the relaxed divider.
std::size_t relaxed_bin_cap(const TimeWindow& window, double eta, std::size_t max_bins);

struct Method {
  enum class Kind { ivanov, tikhonov, relaxed, equal } kind = Kind::ivanov;
  std::size_t bins = 1;  // equal only

  static Method parse(const std::string& name);
  std::string name() const;
};

struct LearnOptions {
  bool baseline = true;  // also fit equal-length bins with the learned bin count
  std::vector<SearchTrace>* traces = nullptr;
};

FitReport learn(const EventSeries& train_events, const CountTable& train, const CountTable& test,
                const Method& method, const FitConfig& fit, const SearchConfig& search,
                const LearnOptions& options = {});

/// Tikhonov gamma chosen on the grid by validation error; validation days are
/// the last fraction of the training days.
double select_gamma(const CountTable& train, const FitConfig& fit, const SearchConfig& search);

}  // namespace nhpp
