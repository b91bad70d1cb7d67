#pragma once

#include "nhpp/binning.hpp"
#include "nhpp/io.hpp"
#include "nhpp/simulator.hpp"
#include "nhpp/spatial.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nhpp {

/// Synthetic city: hotspots with Gaussian spatial spread, each with its own
/// piecewise-linear daily rate.
struct CityConfig {
  std::size_t hotspots = 24;
  double lon_min = -122.52, lon_max = -122.36;
  double lat_min = 37.70, lat_max = 37.82;
  double spread = 0.006;       // degrees
  double events_per_day = 6000.0;
};

/// Search defaults of the harness: Ivanov refines failing intervals and tests
/// each half against its own fit.
inline SearchConfig experiment_search() {
  SearchConfig s;
  s.ivanov_mode = IvanovMode::refine;
  s.null = TestNull::fitted;
  return s;
}

struct ExperimentConfig {
  std::string instance = "af";
  /// "af", "rate" (inline piecewise-linear rate) or "events" (event-csv file).
  std::string source = "af";
  std::optional<PiecewiseLinearRate> rate;
  std::filesystem::path events_path;
  GenerationConfig generation;
  std::size_t days_train = 365;
  std::size_t days_test = 31;
  double resolution = 300.0;
  std::vector<std::string> methods{"unbinned", "ivanov", "tikhonov"};
  FitConfig fit;
  SearchConfig search = experiment_search();
  std::vector<double> eta_sweep{600, 480, 120, 100, 80, 60, 50, 40, 30, 20, 10};  // minutes
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  // Spatial experiment.
  std::filesystem::path geo_path;  // empty: synthetic city
  CityConfig city;
  KMeansConfig kmeans;

  void validate() const;
};

/// Defaults, then every key present in `j`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

Dataset load_dataset(const ExperimentConfig& config);

struct Exp1Row {
  double eta = 0.0;  // minutes
  std::size_t bins = 0;
  double rmse_train = 0.0;
  double rmse_test = 0.0;
};

std::vector<Exp1Row> experiment_1(const ExperimentConfig& config, const Dataset& data);
std::string exp1_csv(const std::vector<Exp1Row>& rows);
/// Runs the sweep and writes exp1.csv under the output directory.
std::vector<Exp1Row> run_experiment_1(const ExperimentConfig& config);

struct Exp2Row {
  std::string instance;
  std::string method;
  FitReport report;
};

std::vector<Exp2Row> experiment_2(const ExperimentConfig& config, const Dataset& data);
std::string exp2_csv(const std::vector<Exp2Row>& rows);
std::vector<Exp2Row> run_experiment_2(const ExperimentConfig& config);

GeoEventSeries simulate_city(const CityConfig& city, TimeWindow window, std::size_t days,
                             std::uint64_t seed);

/// Learns per-area models and writes areas/area_NN.json, index.json and
/// exp3_summary.csv under the output directory.
AreaResults run_experiment_3(const ExperimentConfig& config);
std::string exp3_csv(const AreaResults& results);

/// Seed streams derived from the global seed.
std::uint64_t data_seed(std::uint64_t seed);
std::uint64_t search_seed(std::uint64_t seed);

}  // namespace nhpp
