#pragma once

#include "nhpp/binning.hpp"
#include "nhpp/core.hpp"

#include <cstdint>
#include <vector>

namespace nhpp {

struct GeoEvent {
  int day = 0;
  double seconds = 0.0;
  double lon = 0.0;
  double lat = 0.0;
};

struct GeoEventSeries {
  TimeWindow window;
  std::vector<GeoEvent> events;

  GeoEventSeries() = default;
  GeoEventSeries(TimeWindow window, std::vector<GeoEvent> events);

  /// Rows of (lon, lat).
  Eigen::MatrixX2d coordinates() const;
};

struct KMeansConfig {
  std::size_t k = 20;
  int max_iters = 100;
  /// Scale longitudes by cos(mean latitude) before measuring distances.
  bool equirectangular = false;
  std::uint64_t seed = 0;
};

struct AreaPartition {
  Eigen::MatrixX2d centroids;  // (lon, lat) per area
  std::vector<std::size_t> assignment;
  std::vector<double> wcss_history;  // after each assignment step
  int iterations = 0;
  bool converged = false;

  std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
};

/// Lloyd iterations from k-means++ seeding. Points go to the nearest
/// centroid, ties to the lowest index; a cluster that empties is reseeded at
/// the point farthest from its centroid.
AreaPartition kmeans(const Eigen::MatrixX2d& points, const KMeansConfig& config);

/// Index of the nearest centroid, ties to the lowest index.
std::size_t nearest_centroid(const Eigen::MatrixX2d& centroids, const Eigen::RowVector2d& p);

struct AreaLearnConfig {
  KMeansConfig kmeans;
  std::size_t train_days = 0;  // the first days (by label) train, the rest test
  double resolution = 300.0;
  Method method;
  FitConfig fit;
  SearchConfig search;
};

struct AreaReport {
  std::size_t area = 0;
  Eigen::RowVector2d centroid;
  std::size_t events = 0;
  FitReport report;
};

struct AreaResults {
  AreaPartition areas;
  std::vector<AreaReport> reports;
};

/// Clusters events into areas and learns one rate model per area.
AreaResults learn_per_area(const GeoEventSeries& geo, const AreaLearnConfig& config);

/// Splits events into temporal series by area for the given day labels;
/// days without events stay as empty lists.
std::vector<EventSeries> area_series(const GeoEventSeries& geo,
                                     const std::vector<std::size_t>& assignment, std::size_t k,
                                     const std::vector<int>& days);

}  // namespace nhpp
