#include "nhpp/spatial.hpp"

#include "nhpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace nhpp {

GeoEventSeries::GeoEventSeries(TimeWindow w, std::vector<GeoEvent> ev)
    : window(w), events(std::move(ev)) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const GeoEvent& e = events[i];
    if (!std::isfinite(e.lon) || !std::isfinite(e.lat))
      throw std::invalid_argument("event " + std::to_string(i) + " has non-finite coordinates");
    if (!window.contains(e.seconds))
      throw std::invalid_argument("event " + std::to_string(i) + " lies outside the window");
  }
}

Eigen::MatrixX2d GeoEventSeries::coordinates() const {
  Eigen::MatrixX2d xy(static_cast<Eigen::Index>(events.size()), 2);
  for (std::size_t i = 0; i < events.size(); ++i)
    xy.row(static_cast<Eigen::Index>(i)) << events[i].lon, events[i].lat;
  return xy;
}

std::size_t nearest_centroid(const Eigen::MatrixX2d& centroids, const Eigen::RowVector2d& p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

namespace {

Eigen::MatrixX2d seed_plus_plus(const Eigen::MatrixX2d& x, std::size_t k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixX2d c(static_cast<Eigen::Index>(k), 2);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  c.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(k); ++j) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = uniform(rng, 0.0, total);
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    c.row(j) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

}  // namespace

AreaPartition kmeans(const Eigen::MatrixX2d& points, const KMeansConfig& config) {
  const Eigen::Index n = points.rows();
  if (config.k < 1) throw std::invalid_argument("K must be at least 1");
  if (static_cast<std::size_t>(n) < config.k)
    throw std::invalid_argument("K = " + std::to_string(config.k) + " exceeds the " +
                                std::to_string(n) + " points");
  if (config.max_iters < 1) throw std::invalid_argument("max iterations must be at least 1");

  double lon_scale = 1.0;
  if (config.equirectangular) lon_scale = std::cos(points.col(1).mean() * M_PI / 180.0);
  Eigen::MatrixX2d x = points;
  x.col(0) *= lon_scale;

  Rng rng = make_rng(config.seed, 0);
  AreaPartition out;
  Eigen::MatrixX2d c = seed_plus_plus(x, config.k, rng);
  const auto k = static_cast<Eigen::Index>(config.k);
  out.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> previous;

  for (int it = 0; it < config.max_iters; ++it) {
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t a = nearest_centroid(c, x.row(i));
      out.assignment[static_cast<std::size_t>(i)] = a;
      wcss += (x.row(i) - c.row(static_cast<Eigen::Index>(a))).squaredNorm();
    }
    out.wcss_history.push_back(wcss);
    out.iterations = it + 1;
    if (out.assignment == previous) {
      out.converged = true;
      break;
    }
    previous = out.assignment;

    Eigen::MatrixX2d sum = Eigen::MatrixX2d::Zero(k, 2);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto a = static_cast<Eigen::Index>(out.assignment[static_cast<std::size_t>(i)]);
      sum.row(a) += x.row(i);
      count[a] += 1.0;
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (count[j] > 0.0) {
        c.row(j) = sum.row(j) / count[j];
        continue;
      }
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = static_cast<Eigen::Index>(out.assignment[static_cast<std::size_t>(i)]);
        const double d = (x.row(i) - c.row(a)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      c.row(j) = x.row(far);
    }
  }
  c.col(0) /= lon_scale;
  out.centroids = c;
  return out;
}

std::vector<EventSeries> area_series(const GeoEventSeries& geo,
                                     const std::vector<std::size_t>& assignment, std::size_t k,
                                     const std::vector<int>& days) {
  if (assignment.size() != geo.events.size())
    throw std::invalid_argument("assignment does not cover every event");
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < days.size(); ++i) slot[days[i]] = i;
  std::vector<std::vector<DayArrivals>> per_area(k);
  for (auto& area : per_area)
    for (int d : days) area.push_back({d, {}});
  for (std::size_t i = 0; i < geo.events.size(); ++i) {
    const auto it = slot.find(geo.events[i].day);
    if (it == slot.end()) continue;
    per_area.at(assignment[i])[it->second].times.push_back(geo.events[i].seconds);
  }
  std::vector<EventSeries> out;
  for (auto& area : per_area) {
    for (auto& d : area) std::sort(d.times.begin(), d.times.end());
    out.emplace_back(geo.window, std::move(area));
  }
  return out;
}

AreaResults learn_per_area(const GeoEventSeries& geo, const AreaLearnConfig& config) {
  std::set<int> labels;
  for (const auto& e : geo.events) labels.insert(e.day);
  const std::vector<int> all(labels.begin(), labels.end());
  if (config.train_days < 1 || config.train_days >= all.size())
    throw std::invalid_argument("need at least one training and one test day out of " +
                                std::to_string(all.size()));
  const std::vector<int> train_days(all.begin(), all.begin() + static_cast<long>(config.train_days));
  const std::vector<int> test_days(all.begin() + static_cast<long>(config.train_days), all.end());

  AreaResults results;
  results.areas = kmeans(geo.coordinates(), config.kmeans);
  const std::size_t k = results.areas.k();
  const auto train = area_series(geo, results.areas.assignment, k, train_days);
  const auto test = area_series(geo, results.areas.assignment, k, test_days);
  std::vector<std::size_t> events(k, 0);
  for (std::size_t a : results.areas.assignment) ++events[a];

  for (std::size_t a = 0; a < k; ++a) {
    const CountTable tr = count_events(train[a], config.resolution);
    const CountTable te = count_events(test[a], config.resolution);
    FitReport r = learn(train[a], tr, te, config.method, config.fit, config.search);
    results.reports.push_back(
        {a, results.areas.centroids.row(static_cast<Eigen::Index>(a)), events[a], std::move(r)});
  }
  return results;
}

}  // namespace nhpp
