#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nhpp/regression.hpp"
#include "nhpp/rng.hpp"
#include "nhpp/simulator.hpp"

#include <cmath>

using namespace nhpp;

namespace {

CountTable random_counts(Rng& rng, std::size_t days, double resolution, TimeWindow w = {}) {
  CountTable c;
  c.window = w;
  c.resolution = resolution;
  c.counts.resize(static_cast<Eigen::Index>(days),
                  static_cast<Eigen::Index>(cell_count(w, resolution)));
  std::poisson_distribution<int> p(4.0);
  for (Eigen::Index i = 0; i < c.counts.size(); ++i) c.counts.data()[i] = p(rng);
  return c;
}

// Every (day, cell) of the table as a point, for brute-force comparisons.
std::vector<TimePoint> all_points(const CountTable& c) {
  std::vector<TimePoint> pts;
  for (std::size_t d = 0; d < c.num_days(); ++d)
    for (std::size_t k = 0; k < c.num_cells(); ++k)
      pts.push_back({c.cell_midpoint(k), c.counts(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k))});
  return pts;
}

}  // namespace

TEST_CASE("fit_bin recovers a line in raw time") {
  std::vector<TimePoint> pts;
  for (double t : {0.5, 1.0, 2.5, 4.0, 7.5}) pts.push_back({t, 2 * t + 1});
  const BinFit f = fit_bin(pts, 0, 10, FitConfig{1});
  const Eigen::VectorXd raw = to_time_monomials(f.coefficients, 0, 10);
  CHECK(raw[0] == doctest::Approx(1).epsilon(1e-8));
  CHECK(raw[1] == doctest::Approx(2).epsilon(1e-8));
  CHECK(f.risk == doctest::Approx(0).scale(1));
}

TEST_CASE("degree zero fits the mean") {
  const std::vector<TimePoint> pts{{1, 2}, {3, 5}, {4, 11}};
  const BinFit f = fit_bin(pts, 0, 5, FitConfig{0});
  CHECK(f.coefficients[0] == doctest::Approx(6));
  CHECK(f.size == 3);
}

TEST_CASE("cubic fit is locally optimal") {
  Rng rng = make_rng(4, 0);
  std::vector<TimePoint> pts(50);
  for (auto& p : pts) p = {uniform(rng, 100, 200), uniform(rng, 0, 20)};
  const FitConfig cfg{3};
  const BinFit f = fit_bin(pts, 100, 200, cfg);
  const Partition part(TimeWindow(100, 200));
  const RateModel best(part, 3, {f.coefficients}, false);
  CHECK(empirical_risk(best, pts) == doctest::Approx(f.risk).epsilon(1e-12));
  std::normal_distribution<double> n(0, 0.05);
  int worse = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd c = f.coefficients;
    for (Eigen::Index j = 0; j < 4; ++j) c[j] += n(rng);
    if (empirical_risk(RateModel(part, 3, {c}, false), pts) >= f.risk) ++worse;
  }
  CHECK(worse == 1000);
}

TEST_CASE("residuals are orthogonal to the basis") {
  Rng rng = make_rng(5, 0);
  std::vector<TimePoint> pts(80);
  for (auto& p : pts) p = {uniform(rng, 0, 50), uniform(rng, -5, 5)};
  const BinFit f = fit_bin(pts, 0, 50, FitConfig{3});
  const RateModel m(Partition(TimeWindow(0, 50)), 3, {f.coefficients}, false);
  for (int j = 0; j <= 3; ++j) {
    double dot = 0, nr = 0, nb = 0;
    for (const auto& p : pts) {
      const double b = std::pow((2 * p.t - 50) / 50, j);
      const double r = p.y - m(p.t);
      dot += b * r;
      nr += r * r;
      nb += b * b;
    }
    CHECK(std::abs(dot) < 1e-8 * std::sqrt(nr * nb));
  }
}

TEST_CASE("degree never increases per-bin training risk") {
  Rng rng = make_rng(6, 0);
  std::vector<TimePoint> pts(60);
  for (auto& p : pts) p = {uniform(rng, 0, 10), uniform(rng, 0, 9)};
  double prev = INFINITY;
  for (int d = 0; d <= 5; ++d) {
    const double r = fit_bin(pts, 0, 10, FitConfig{d}).risk;
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("too few distinct points lower the degree") {
  const std::vector<TimePoint> pts{{1, 2}, {1, 4}, {3, 1}};
  const BinFit f = fit_bin(pts, 0, 4, FitConfig{3});
  CHECK(f.effective_degree == 1);
  CHECK(f.coefficients.size() == 4);
  CHECK(f.coefficients[2] == 0.0);
  FitConfig strict{1, true, 4};
  CHECK(fit_bin(pts, 0, 4, strict).effective_degree == 1);
  CHECK_THROWS(FitConfig({3, true, 2}).validate());
}

TEST_CASE("cell summaries reproduce the pointwise fit") {
  Rng rng = make_rng(7, 0);
  const CountTable c = random_counts(rng, 9, 3600);
  const CellStats s = summarize(c);
  const Partition p(c.window, {30000, 50000});
  const PartitionFit pf = fit_partition(s, p, FitConfig{2});
  const auto pts = all_points(c);
  for (std::size_t k = 0; k < p.num_bins(); ++k) {
    std::vector<TimePoint> sub;
    for (const auto& q : pts)
      if (p.bin_of(q.t) == k) sub.push_back(q);
    const BinFit direct = fit_bin(sub, p.lower(k), p.upper(k), FitConfig{2});
    CHECK(pf.risks[k] == doctest::Approx(direct.risk).epsilon(1e-10));
    CHECK(pf.sizes[k] == direct.size);
    CHECK((pf.model.coefficients[k] - direct.coefficients).norm() < 1e-9);
  }
  double total = 0;
  for (double m : pf.sizes) total += m;
  CHECK(total == c.num_points());
}

TEST_CASE("single bin equals the global fit") {
  Rng rng = make_rng(8, 0);
  const CountTable c = random_counts(rng, 5, 600);
  const PartitionFit pf = fit_partition(c, Partition(c.window), FitConfig{1});
  const auto pts = all_points(c);
  const BinFit g = fit_bin(pts, 0, 86400, FitConfig{1});
  CHECK((pf.model.coefficients[0] - g.coefficients).norm() < 1e-10);
  CHECK(pf.binned_risk() == doctest::Approx(g.risk).epsilon(1e-12));
}

TEST_CASE("refinement never increases binned training risk") {
  Rng rng = make_rng(9, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const CountTable c = random_counts(rng, 3, 900);
    const int degree = trial % 4;
    std::vector<double> knots;
    for (int i = 0; i < 3; ++i) knots.push_back(std::round(uniform(rng, 1000, 85000)));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    const Partition coarse(c.window, knots);
    double extra = std::round(uniform(rng, 1000, 85000));
    while (std::find(knots.begin(), knots.end(), extra) != knots.end()) extra += 1;
    const Partition fine = coarse.with_knot(extra);
    const double before = fit_partition(c, coarse, FitConfig{degree}).binned_risk();
    const double after = fit_partition(c, fine, FitConfig{degree}).binned_risk();
    CHECK(after <= before + 1e-10 * std::max(1.0, before));
  }
}

TEST_CASE("empty bin gets the zero model") {
  CountTable c;
  c.window = TimeWindow(0, 600);
  c.resolution = 60;
  c.counts = Eigen::MatrixXd::Constant(2, 10, 3.0);
  const Partition with_empty(c.window, {100, 110});  // no cell midpoint in [100, 110)
  const PartitionFit pf = fit_partition(c, with_empty, FitConfig{1});
  CHECK(pf.sizes[1] == 0);
  CHECK(pf.model.coefficients[1].isZero());
  CHECK(pf.model(105) == 0.0);
  CHECK(pf.model(300) == doctest::Approx(3));
  CHECK(pf.binned_risk() == doctest::Approx(0).scale(1));
}

TEST_CASE("evaluate") {
  Rng rng = make_rng(10, 0);
  const CountTable c = random_counts(rng, 4, 1800);
  const Partition p(c.window, {20000, 60000});
  const PartitionFit pf = fit_partition(c, p, FitConfig{2, false});
  CHECK(evaluate(pf.model, c) == doctest::Approx(std::sqrt(pf.binned_risk())).epsilon(1e-12));

  CountTable z = c;
  z.counts.setZero();
  const RateModel zero(p, 0, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)});
  CHECK(evaluate(zero, z) == 0.0);
}

TEST_CASE("af unbinned linear fit lands near the reference RMSE") {
  const Dataset ds = make_dataset(af_rate(), TimeWindow(), 365, 31, GenerationConfig{}, 77);
  const CountTable train = count_events(ds.train, 300), test = count_events(ds.test, 300);
  const PartitionFit pf = fit_partition(train, Partition(train.window), FitConfig{1});
  const double s1 = evaluate(pf.model, train), s2 = evaluate(pf.model, test);
  CHECK(s1 > 8.89 * 0.7);
  CHECK(s1 < 8.89 * 1.3);
  CHECK(s2 > 10.6 * 0.7);
  CHECK(s2 < 10.6 * 1.3);
}
