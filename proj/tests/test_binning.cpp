#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nhpp/binning.hpp"
#include "nhpp/simulator.hpp"

#include <cmath>

using namespace nhpp;

namespace {

struct Fixture {
  Dataset data;
  CountTable train, test;
  TrainingData training;
};

Fixture make(const PiecewiseLinearRate& rate, std::size_t train_days, std::size_t test_days,
             std::uint64_t seed, std::pair<std::int64_t, std::int64_t> range = {7000, 8000}) {
  GenerationConfig g;
  g.count_range = range;
  Fixture f{make_dataset(rate, TimeWindow(), train_days, test_days, g, seed), {}, {}, {}};
  f.train = count_events(f.data.train, 300);
  f.test = count_events(f.data.test, 300);
  f.training = TrainingData{&f.data.train, summarize(f.train)};
  return f;
}

// Checks every structural invariant of a trace; returns the number of accepted entries.
std::size_t check_trace(const SearchTrace& t, const TimeWindow& w, bool penalized) {
  REQUIRE(!t.entries.empty());
  double running = INFINITY;
  std::size_t accepted = 0, first_best = 0;
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const TraceEntry& e = t.entries[i];
    CHECK_NOTHROW(Partition(w, e.knots));
    if (!e.accepted) continue;
    ++accepted;
    const double r = penalized ? *e.penalized_risk : e.binned_risk;
    if (r < running) {
      running = r;
      first_best = i;
    }
  }
  CHECK(t.min_risk == running);
  CHECK(t.best_index == first_best);
  return accepted;
}

}  // namespace

TEST_CASE("method parsing") {
  CHECK(Method::parse("ivanov").kind == Method::Kind::ivanov);
  CHECK(Method::parse("unbinned").bins == 1);
  CHECK(Method::parse("equal:12").bins == 12);
  CHECK(Method::parse("equal:12").name() == "equal:12");
  CHECK_THROWS(Method::parse("equal:0"));
  CHECK_THROWS(Method::parse("equal:3x"));
  CHECK_THROWS(Method::parse("lasso"));
}

TEST_CASE("search config validation") {
  SearchConfig s;
  CHECK_NOTHROW(s.validate());
  s.max_bins = 0;
  CHECK_THROWS(s.validate());
  s = SearchConfig{};
  s.gamma = -1;
  CHECK_THROWS(s.validate());
  s = SearchConfig{};
  s.eta = 0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("relaxed bin cap") {
  CHECK(relaxed_bin_cap(TimeWindow(), 86400, 64) == 2);
  CHECK(relaxed_bin_cap(TimeWindow(), 600 * 60, 64) == 3);
  CHECK(relaxed_bin_cap(TimeWindow(), 10 * 60, 64) == 64);
  CHECK(relaxed_bin_cap(TimeWindow(), 10 * 60, 500) == 73);
}

TEST_CASE("ivanov: homogeneous data keeps every accepted half passing") {
  const Fixture f = make(PiecewiseLinearRate::constant(TimeWindow(), 10, 300), 20, 2, 1, {2800, 2900});
  SearchConfig s;
  s.max_retries = 30;
  for (std::uint64_t r = 0; r < 5; ++r) {
    Rng rng = make_rng(9, r);
    const SearchTrace t = ivanov_divide(f.training, FitConfig{1}, s, rng);
    check_trace(t, TimeWindow(), false);
    for (const auto& e : t.entries) {
      if (!e.accepted || !e.split) continue;
      REQUIRE(e.left_test);
      REQUIRE(e.right_test);
      CHECK(e.left_test->passed);
      CHECK(e.right_test->passed);
    }
  }
}

TEST_CASE("ivanov: zero retries on failing data leaves the single bin") {
  const Fixture f = make(af_rate(), 20, 2, 2);
  SearchConfig s;
  s.ivanov_mode = IvanovMode::strict;
  s.null = TestNull::homogeneous;
  s.max_retries = 0;
  Rng rng = make_rng(1, 0);
  const SearchTrace t = ivanov_divide(f.training, FitConfig{1}, s, rng);
  CHECK(check_trace(t, TimeWindow(), false) == 1);
  CHECK(t.best().knots.empty());
  CHECK(t.entries.size() == 2);
  CHECK_FALSE(t.entries[1].accepted);
}

TEST_CASE("ivanov refine: forced splits are flagged, others carry passing tests") {
  const Fixture f = make(af_rate(), 30, 2, 3);
  SearchConfig s;
  s.ivanov_mode = IvanovMode::refine;
  s.null = TestNull::fitted;
  s.max_retries = 5;
  Rng rng = make_rng(2, 0);
  const SearchTrace t = ivanov_divide(f.training, FitConfig{1}, s, rng);
  check_trace(t, TimeWindow(), false);
  for (const auto& e : t.entries) {
    if (!e.accepted || !e.split) continue;
    if (e.forced) {
      CHECK_FALSE(e.left_test);
      continue;
    }
    REQUIRE(e.right_test);
    CHECK(e.left_test->passed);
    CHECK(e.right_test->passed);
  }
  CHECK(t.best().knots.size() + 1 <= s.max_bins);
}

TEST_CASE("ivanov needs arrival data") {
  const Fixture f = make(af_rate(), 3, 1, 4);
  TrainingData no_events{nullptr, f.training.cells};
  Rng rng = make_rng(1, 0);
  CHECK_THROWS(ivanov_divide(no_events, FitConfig{1}, SearchConfig{}, rng));
}

TEST_CASE("tikhonov limits") {
  const Fixture f = make(af_rate(), 10, 2, 5);
  SearchConfig s;
  s.max_bins = 16;
  SUBCASE("huge gamma keeps one bin") {
    s.gamma = 1e9;
    Rng rng = make_rng(3, 0);
    const SearchTrace t = tikhonov_divide(f.training, FitConfig{1}, s, rng);
    check_trace(t, TimeWindow(), true);
    CHECK(t.best().knots.empty());
  }
  SUBCASE("zero gamma is the binned risk and prefers deeper partitions") {
    s.gamma = 0.0;
    Rng rng = make_rng(3, 0);
    const SearchTrace t = tikhonov_divide(f.training, FitConfig{1}, s, rng);
    check_trace(t, TimeWindow(), true);
    for (const auto& e : t.entries) CHECK(*e.penalized_risk == e.binned_risk);
    for (std::size_t i = 1; i < t.entries.size(); ++i)
      CHECK(t.entries[i].binned_risk <= t.entries[i - 1].binned_risk + 1e-10);
  }
  SUBCASE("penalized search needs gamma") {
    Rng rng = make_rng(3, 0);
    CHECK_THROWS(tikhonov_divide(f.training, FitConfig{1}, s, rng));
  }
}

TEST_CASE("relaxed: eta at least the window gives one bin") {
  const Fixture f = make(af_rate(), 10, 2, 6);
  SearchConfig s;
  s.eta = 86400;
  Rng rng = make_rng(4, 0);
  const SearchTrace t = relaxed_divide(f.training, FitConfig{3}, s, rng);
  check_trace(t, TimeWindow(), false);
  CHECK(t.best().knots.empty());
}

TEST_CASE("relaxed: bin count respects the cap and grows as eta shrinks") {
  const Fixture f = make(af_rate(), 10, 2, 7);
  const std::vector<double> sweep{600, 480, 120, 100, 80, 60, 50, 40, 30, 20, 10};
  const CountTable& train = f.train;
  SearchConfig s;
  s.max_restarts = 3;
  s.seed = 11;
  std::size_t prev = 0;
  for (double eta : sweep) {
    s.eta = eta * 60;
    LearnOptions opt;
    opt.baseline = false;
    std::vector<SearchTrace> traces;
    opt.traces = &traces;
    const FitReport r = learn(f.data.train, train, f.test, Method::parse("relaxed"), FitConfig{3}, s, opt);
    CHECK(r.bins <= relaxed_bin_cap(TimeWindow(), s.eta, s.max_bins));
    CHECK(r.bins >= prev);
    prev = r.bins;
    for (const auto& t : traces) check_trace(t, TimeWindow(), false);
  }
  CHECK(prev > 20);
}

TEST_CASE("learn: equal:1 is the unbinned fit") {
  const Fixture f = make(af_rate(), 8, 2, 8);
  const FitReport a = learn(f.data.train, f.train, f.test, Method::parse("equal:1"), FitConfig{1}, SearchConfig{});
  const FitReport b = learn(f.data.train, f.train, f.test, Method::parse("unbinned"), FitConfig{1}, SearchConfig{});
  const PartitionFit g = fit_partition(f.train, Partition(TimeWindow()), FitConfig{1});
  CHECK(a.bins == 1);
  CHECK(a.rmse_test == b.rmse_test);
  CHECK(a.rmse_train == doctest::Approx(evaluate(g.model, f.train)).epsilon(1e-14));
  CHECK(a.model.coefficients[0] == g.model.coefficients[0]);
}

TEST_CASE("learn: report invariants and determinism") {
  const Fixture f = make(af_rate(), 12, 3, 9);
  SearchConfig s;
  s.max_restarts = 3;
  s.max_retries = 4;
  s.seed = 5;
  s.ivanov_mode = IvanovMode::refine;
  s.null = TestNull::fitted;
  for (const std::string name : {"ivanov", "tikhonov", "relaxed", "equal:5"}) {
    CAPTURE(name);
    const Method m = Method::parse(name);
    const FitReport a = learn(f.data.train, f.train, f.test, m, FitConfig{1}, s);
    const FitReport b = learn(f.data.train, f.train, f.test, m, FitConfig{1}, s);
    CHECK(a.partition == b.partition);
    CHECK(a.rmse_test == b.rmse_test);
    CHECK(a.bins == a.partition.knots().size() + 1);
    double total = 0;
    for (double m_k : a.bin_sizes) total += m_k;
    CHECK(total == f.train.num_points());
    REQUIRE(a.equal_length);
    CHECK(*a.rho() == doctest::Approx((a.equal_length->rmse_test - a.rmse_test) * 100 /
                                      a.equal_length->rmse_test).epsilon(1e-12));
    if (m.kind == Method::Kind::tikhonov) {
      REQUIRE(a.gamma);
      REQUIRE(a.penalized_risk);
    } else {
      CHECK_FALSE(a.gamma);
    }
  }
}

TEST_CASE("learn: traces cover every restart") {
  const Fixture f = make(af_rate(), 6, 2, 10);
  SearchConfig s;
  s.max_restarts = 4;
  s.gamma = 0.01;
  std::vector<SearchTrace> traces;
  LearnOptions opt;
  opt.traces = &traces;
  const FitReport r = learn(f.data.train, f.train, f.test, Method::parse("tikhonov"), FitConfig{1}, s, opt);
  CHECK(traces.size() == 4);
  double best = INFINITY;
  for (const auto& t : traces) best = std::min(best, t.min_risk);
  CHECK(*r.penalized_risk == doctest::Approx(best).epsilon(1e-12));
  CHECK(*r.gamma == 0.01);
}

TEST_CASE("gamma selection picks from the grid") {
  const Fixture f = make(af_rate(), 10, 2, 11);
  SearchConfig s;
  s.max_restarts = 2;
  const double g = select_gamma(f.train, FitConfig{1}, s);
  CHECK(std::find(s.gamma_grid.begin(), s.gamma_grid.end(), g) != s.gamma_grid.end());
}

TEST_CASE("learn rejects mismatched inputs") {
  const Fixture f = make(af_rate(), 4, 2, 12);
  CountTable other = f.test;
  other.window = TimeWindow(0, 3600);
  CHECK_THROWS(learn(f.data.train, f.train, other, Method::parse("unbinned"), FitConfig{1}, SearchConfig{}));
}
