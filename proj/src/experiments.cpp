#include "nhpp/experiments.hpp"

#include "nhpp/rng.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nhpp {

using nlohmann::json;

std::uint64_t data_seed(std::uint64_t seed) { return substream_seed(seed, 1); }
std::uint64_t search_seed(std::uint64_t seed) { return substream_seed(seed, 2); }

void ExperimentConfig::validate() const {
  if (source != "af" && source != "rate" && source != "events")
    throw std::invalid_argument("source must be af, rate or events");
  if (source == "rate" && !rate) throw std::invalid_argument("source 'rate' needs a rate");
  if (source == "events" && events_path.empty())
    throw std::invalid_argument("source 'events' needs an events path");
  if (days_train < 1 || days_test < 1)
    throw std::invalid_argument("train and test day counts must be at least 1");
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (methods.empty()) throw std::invalid_argument("at least one method is required");
  for (const auto& m : methods) Method::parse(m);
  for (double e : eta_sweep)
    if (!(e > 0.0)) throw std::invalid_argument("eta values must be positive");
  fit.validate();
  search.validate();
}

namespace {

// Copies j[key] into out when present; marks the key as consumed.
template <class T>
void take(const json& j, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!seen.count(key)) throw InputError("unknown config field '" + where + key + "'");
}

const json& object(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_object()) throw InputError(std::string("config field '") + key + "' must be an object");
  return v;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ExperimentConfig c;
  std::set<std::string> seen;
  take(j, "instance", c.instance, seen);
  take(j, "source", c.source, seen);
  std::string events;
  take(j, "events", events, seen);
  if (!events.empty()) c.events_path = events;
  seen.insert("rate");
  if (j.contains("rate")) c.rate = rate_from_json(j.at("rate"));
  take(j, "days_train", c.days_train, seen);
  take(j, "days_test", c.days_test, seen);
  take(j, "resolution", c.resolution, seen);
  take(j, "methods", c.methods, seen);
  take(j, "eta_sweep", c.eta_sweep, seen);
  std::string out_dir = c.out_dir.string();
  take(j, "out_dir", out_dir, seen);
  c.out_dir = out_dir;
  take(j, "seed", c.seed, seen);
  std::string geo;
  take(j, "geo", geo, seen);
  if (!geo.empty()) c.geo_path = geo;

  seen.insert("generation");
  if (j.contains("generation")) {
    const json& g = object(j, "generation");
    std::set<std::string> s;
    std::string mode = to_string(c.generation.mode);
    take(g, "mode", mode, s);
    c.generation.mode = parse_generation_mode(mode);
    take(g, "count_min", c.generation.count_range.first, s);
    take(g, "count_max", c.generation.count_range.second, s);
    take(g, "rate_upper_bound", c.generation.rate_upper_bound, s);
    reject_unknown(g, s, "generation.");
  }
  seen.insert("fit");
  if (j.contains("fit")) {
    const json& f = object(j, "fit");
    std::set<std::string> s;
    take(f, "degree", c.fit.degree, s);
    take(f, "clamp", c.fit.clamp, s);
    take(f, "min_points", c.fit.min_points, s);
    reject_unknown(f, s, "fit.");
  }
  seen.insert("search");
  if (j.contains("search")) {
    const json& f = object(j, "search");
    SearchConfig& sc = c.search;
    std::set<std::string> s;
    take(f, "max_depth", sc.max_depth, s);
    take(f, "max_bins", sc.max_bins, s);
    take(f, "max_restarts", sc.max_restarts, s);
    take(f, "max_retries", sc.max_retries, s);
    double gamma = -1.0;
    take(f, "gamma", gamma, s);
    if (gamma >= 0.0) sc.gamma = gamma;
    take(f, "gamma_grid", sc.gamma_grid, s);
    take(f, "validation_fraction", sc.validation_fraction, s);
    take(f, "penalty_length_unit", sc.penalty_length_unit, s);
    take(f, "epsilon", sc.test.epsilon, s);
    std::string method = to_string(sc.test.method), pooling = to_string(sc.test.pooling),
                null = to_string(sc.null), mode = to_string(sc.ivanov_mode),
                objective = sc.tikhonov_objective == OuterObjective::penalized ? "penalized" : "binned";
    take(f, "test_method", method, s);
    take(f, "pooling", pooling, s);
    take(f, "null", null, s);
    take(f, "ivanov_mode", mode, s);
    take(f, "tikhonov_objective", objective, s);
    sc.test.method = parse_test_method(method);
    sc.test.pooling = parse_pooling(pooling);
    sc.null = parse_test_null(null);
    sc.ivanov_mode = parse_ivanov_mode(mode);
    if (objective == "penalized")
      sc.tikhonov_objective = OuterObjective::penalized;
    else if (objective == "binned")
      sc.tikhonov_objective = OuterObjective::binned;
    else
      throw InputError("config field 'search.tikhonov_objective' must be penalized or binned");
    reject_unknown(f, s, "search.");
  }
  seen.insert("city");
  if (j.contains("city")) {
    const json& f = object(j, "city");
    std::set<std::string> s;
    take(f, "hotspots", c.city.hotspots, s);
    take(f, "lon_min", c.city.lon_min, s);
    take(f, "lon_max", c.city.lon_max, s);
    take(f, "lat_min", c.city.lat_min, s);
    take(f, "lat_max", c.city.lat_max, s);
    take(f, "spread", c.city.spread, s);
    take(f, "events_per_day", c.city.events_per_day, s);
    reject_unknown(f, s, "city.");
  }
  seen.insert("kmeans");
  if (j.contains("kmeans")) {
    const json& f = object(j, "kmeans");
    std::set<std::string> s;
    take(f, "k", c.kmeans.k, s);
    take(f, "max_iters", c.kmeans.max_iters, s);
    take(f, "equirectangular", c.kmeans.equirectangular, s);
    reject_unknown(f, s, "kmeans.");
  }
  reject_unknown(j, seen, "");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const SearchConfig& s = c.search;
  json search = {{"max_depth", s.max_depth},
                 {"max_bins", s.max_bins},
                 {"max_restarts", s.max_restarts},
                 {"max_retries", s.max_retries},
                 {"gamma_grid", s.gamma_grid},
                 {"validation_fraction", s.validation_fraction},
                 {"penalty_length_unit", s.penalty_length_unit},
                 {"epsilon", s.test.epsilon},
                 {"test_method", to_string(s.test.method)},
                 {"pooling", to_string(s.test.pooling)},
                 {"null", to_string(s.null)},
                 {"ivanov_mode", to_string(s.ivanov_mode)},
                 {"tikhonov_objective",
                  s.tikhonov_objective == OuterObjective::penalized ? "penalized" : "binned"}};
  if (s.gamma) search["gamma"] = *s.gamma;
  json j = {{"instance", c.instance},
            {"source", c.source},
            {"generation",
             {{"mode", to_string(c.generation.mode)},
              {"count_min", c.generation.count_range.first},
              {"count_max", c.generation.count_range.second},
              {"rate_upper_bound", c.generation.rate_upper_bound}}},
            {"days_train", c.days_train},
            {"days_test", c.days_test},
            {"resolution", c.resolution},
            {"methods", c.methods},
            {"fit", {{"degree", c.fit.degree}, {"clamp", c.fit.clamp}, {"min_points", c.fit.min_points}}},
            {"search", search},
            {"eta_sweep", c.eta_sweep},
            {"out_dir", c.out_dir.string()},
            {"seed", c.seed},
            {"city",
             {{"hotspots", c.city.hotspots},
              {"lon_min", c.city.lon_min},
              {"lon_max", c.city.lon_max},
              {"lat_min", c.city.lat_min},
              {"lat_max", c.city.lat_max},
              {"spread", c.city.spread},
              {"events_per_day", c.city.events_per_day}}},
            {"kmeans",
             {{"k", c.kmeans.k},
              {"max_iters", c.kmeans.max_iters},
              {"equirectangular", c.kmeans.equirectangular}}}};
  if (c.rate) j["rate"] = rate_to_json(*c.rate);
  if (!c.events_path.empty()) j["events"] = c.events_path.string();
  if (!c.geo_path.empty()) j["geo"] = c.geo_path.string();
  return j;
}

Dataset load_dataset(const ExperimentConfig& config) {
  config.validate();
  const TimeWindow window;
  if (config.source == "events") {
    EventSeries all = load_events(config.events_path, window);
    if (all.num_days() < config.days_train + config.days_test)
      throw InputError(config.events_path.string() + ": has " + std::to_string(all.num_days()) +
                       " days, config needs " +
                       std::to_string(config.days_train + config.days_test));
    const auto split = all.days.begin() + static_cast<long>(config.days_train);
    std::vector<DayArrivals> train(all.days.begin(), split);
    std::vector<DayArrivals> test(split, split + static_cast<long>(config.days_test));
    return {EventSeries(window, std::move(train)), EventSeries(window, std::move(test))};
  }
  const PiecewiseLinearRate rate = config.source == "af" ? af_rate() : *config.rate;
  return make_dataset(rate, window, config.days_train, config.days_test, config.generation,
                      data_seed(config.seed));
}

// ---------------------------------------------------------------------------

std::vector<Exp1Row> experiment_1(const ExperimentConfig& config, const Dataset& data) {
  const CountTable train = count_events(data.train, config.resolution);
  const CountTable test = count_events(data.test, config.resolution);
  Method relaxed;
  relaxed.kind = Method::Kind::relaxed;
  std::vector<Exp1Row> rows;
  for (double eta : config.eta_sweep) {
    SearchConfig s = config.search;
    s.eta = eta * 60.0;
    s.seed = search_seed(config.seed);
    LearnOptions opt;
    opt.baseline = false;
    const FitReport r = learn(data.train, train, test, relaxed, config.fit, s, opt);
    rows.push_back({eta, r.bins, r.rmse_train, r.rmse_test});
  }
  return rows;
}

std::string exp1_csv(const std::vector<Exp1Row>& rows) {
  std::string out = "eta,bins,rmse_train,rmse_test\n";
  for (const auto& r : rows)
    out += csv_number(r.eta) + "," + std::to_string(r.bins) + "," + csv_number(r.rmse_train) +
           "," + csv_number(r.rmse_test) + "\n";
  return out;
}

std::vector<Exp1Row> run_experiment_1(const ExperimentConfig& config) {
  const auto rows = experiment_1(config, load_dataset(config));
  write_text(config.out_dir / "exp1.csv", exp1_csv(rows));
  return rows;
}

std::vector<Exp2Row> experiment_2(const ExperimentConfig& config, const Dataset& data) {
  const CountTable train = count_events(data.train, config.resolution);
  const CountTable test = count_events(data.test, config.resolution);
  std::vector<Exp2Row> rows;
  for (const auto& name : config.methods) {
    const Method m = Method::parse(name);
    SearchConfig s = config.search;
    s.seed = search_seed(config.seed);
    LearnOptions opt;
    opt.baseline = m.kind != Method::Kind::equal;
    rows.push_back({config.instance, name, learn(data.train, train, test, m, config.fit, s, opt)});
  }
  return rows;
}

std::string exp2_csv(const std::vector<Exp2Row>& rows) {
  std::string out = "instance,method,rmse_train,rmse_test,bins,eq_rmse_train,eq_rmse_test,rho\n";
  for (const auto& row : rows) {
    const FitReport& r = row.report;
    out += row.instance + "," + row.method + "," + csv_number(r.rmse_train) + "," +
           csv_number(r.rmse_test) + "," + std::to_string(r.bins) + ",";
    if (r.equal_length)
      out += csv_number(r.equal_length->rmse_train) + "," + csv_number(r.equal_length->rmse_test) +
             "," + csv_number(*r.rho());
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

std::vector<Exp2Row> run_experiment_2(const ExperimentConfig& config) {
  const auto rows = experiment_2(config, load_dataset(config));
  write_text(config.out_dir / "exp2.csv", exp2_csv(rows));
  return rows;
}

// ---------------------------------------------------------------------------

GeoEventSeries simulate_city(const CityConfig& city, TimeWindow window, std::size_t days,
                             std::uint64_t seed) {
  if (city.hotspots < 1) throw std::invalid_argument("city needs at least one hotspot");
  Rng layout = make_rng(seed, 0);
  struct Hotspot {
    double lon, lat;
    PiecewiseLinearRate rate;
  };
  std::vector<double> weights;
  std::vector<std::pair<double, double>> centers;
  for (std::size_t h = 0; h < city.hotspots; ++h) {
    centers.emplace_back(uniform(layout, city.lon_min, city.lon_max),
                         uniform(layout, city.lat_min, city.lat_max));
    weights.push_back(std::exponential_distribution<double>(1.0)(layout));
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;

  // Knots every three hours with random levels; rates are per 5 minutes.
  std::vector<Hotspot> spots;
  const double step = window.length() / 8.0;
  for (std::size_t h = 0; h < city.hotspots; ++h) {
    std::vector<double> level(9);
    for (double& v : level) v = uniform(layout, 0.2, 1.0);
    double mass = 0.0;
    for (int k = 0; k < 8; ++k) mass += 0.5 * (level[k] + level[k + 1]) * step / 300.0;
    const double scale = city.events_per_day * weights[h] / wsum / mass;
    std::vector<double> bp, slopes, intercepts;
    for (int k = 0; k <= 8; ++k) bp.push_back(window.start + step * k);
    for (int k = 0; k < 8; ++k) {
      const double u0 = bp[k] / 300.0, u1 = bp[k + 1] / 300.0;
      const double s = (level[k + 1] - level[k]) * scale / (u1 - u0);
      slopes.push_back(s);
      intercepts.push_back(level[k] * scale - s * u0);
    }
    spots.push_back({centers[h].first, centers[h].second,
                     PiecewiseLinearRate(bp, slopes, intercepts, 300.0)});
  }

  std::vector<GeoEvent> events;
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t h = 0; h < spots.size(); ++h) {
      Rng rng = make_rng(seed, 1 + d * spots.size() + h);
      const Hotspot& s = spots[h];
      const auto times =
          simulate_thinning(s.rate, window, s.rate.max_value(window.start, window.end), rng);
      std::normal_distribution<double> jitter(0.0, city.spread);
      for (double t : times)
        events.push_back({static_cast<int>(d), t, s.lon + jitter(rng), s.lat + jitter(rng)});
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const GeoEvent& a, const GeoEvent& b) {
    return a.day != b.day ? a.day < b.day : a.seconds < b.seconds;
  });
  return GeoEventSeries(window, std::move(events));
}

std::string exp3_csv(const AreaResults& results) {
  std::string out = "area,events,bins,rmse_train,rmse_test\n";
  for (const auto& a : results.reports)
    out += std::to_string(a.area) + "," + std::to_string(a.events) + "," +
           std::to_string(a.report.bins) + "," + csv_number(a.report.rmse_train) + "," +
           csv_number(a.report.rmse_test) + "\n";
  return out;
}

AreaResults run_experiment_3(const ExperimentConfig& config) {
  config.validate();
  const TimeWindow window;
  const GeoEventSeries geo =
      config.geo_path.empty()
          ? simulate_city(config.city, window, config.days_train + config.days_test,
                          data_seed(config.seed))
          : load_geo_events(config.geo_path, window);

  AreaLearnConfig alc;
  alc.kmeans = config.kmeans;
  alc.kmeans.seed = search_seed(config.seed);
  alc.train_days = config.days_train;
  alc.resolution = config.resolution;
  alc.method = Method::parse(config.methods.front());
  alc.fit = config.fit;
  alc.search = config.search;
  alc.search.seed = search_seed(config.seed);
  AreaResults results = learn_per_area(geo, alc);

  json index = json::array();
  for (const auto& a : results.reports) {
    char name[32];
    std::snprintf(name, sizeof name, "area_%02zu.json", a.area);
    const std::filesystem::path rel = std::filesystem::path("areas") / name;
    save_model(a.report.model, config.out_dir / rel);
    index.push_back({{"area", a.area},
                     {"centroid", {a.centroid[0], a.centroid[1]}},
                     {"events", a.events},
                     {"model", rel.generic_string()}});
  }
  write_text(config.out_dir / "index.json", index.dump(2) + "\n");
  write_text(config.out_dir / "exp3_summary.csv", exp3_csv(results));
  return results;
}

}  // namespace nhpp
