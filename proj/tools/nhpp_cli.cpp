#include "nhpp/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace nhpp;
using nlohmann::json;

namespace {

// Flags shared by every subcommand; each one overrides the config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> methods;
  std::optional<int> degree;
  std::optional<double> gamma;
  std::optional<double> epsilon;
  std::vector<double> eta_sweep;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> days_train, days_test;
  std::optional<std::size_t> clusters;
  std::optional<int> restarts;
  std::optional<std::string> events, geo;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "global seed");
  app->add_option("--method", o.methods,
                  "ivanov, tikhonov, relaxed, unbinned or equal:N (repeatable)");
  app->add_option("--degree", o.degree, "polynomial degree per bin");
  app->add_option("--gamma", o.gamma, "Tikhonov penalty weight (default: validation)");
  app->add_option("--epsilon", o.epsilon, "Poisson test significance level");
  app->add_option("--eta-sweep", o.eta_sweep, "relaxed eta values in minutes")->delimiter(',');
  app->add_option("--out-dir", o.out_dir, "output directory");
  app->add_option("--days-train", o.days_train, "training days");
  app->add_option("--days-test", o.days_test, "test days");
  app->add_option("--clusters", o.clusters, "number of areas K");
  app->add_option("--restarts", o.restarts, "search restarts");
  app->add_option("--events", o.events, "event-csv input (day,seconds)");
  app->add_option("--geo", o.geo, "geo-csv input (day,seconds,lon,lat)");
}

ExperimentConfig resolve(const Overrides& o) {
  json j = o.config.empty() ? json::object() : read_json(o.config);
  if (!j.is_object()) throw InputError(o.config + ": config must be a JSON object");
  auto sub = [&](const char* key) -> json& {
    if (!j.contains(key)) j[key] = json::object();
    return j[key];
  };
  if (o.seed) j["seed"] = *o.seed;
  if (!o.methods.empty()) j["methods"] = o.methods;
  if (o.degree) sub("fit")["degree"] = *o.degree;
  if (o.gamma) sub("search")["gamma"] = *o.gamma;
  if (o.epsilon) sub("search")["epsilon"] = *o.epsilon;
  if (o.restarts) sub("search")["max_restarts"] = *o.restarts;
  if (!o.eta_sweep.empty()) j["eta_sweep"] = o.eta_sweep;
  if (o.out_dir) j["out_dir"] = *o.out_dir;
  if (o.days_train) j["days_train"] = *o.days_train;
  if (o.days_test) j["days_test"] = *o.days_test;
  if (o.clusters) sub("kmeans")["k"] = *o.clusters;
  if (o.events) {
    j["source"] = "events";
    j["events"] = *o.events;
  }
  if (o.geo) j["geo"] = *o.geo;
  return config_from_json(j);
}

void print_rows(const std::string& csv) { std::cout << csv; }

int cmd_simulate(const ExperimentConfig& c) {
  const Dataset data = load_dataset(c);
  save_events(data.train, c.out_dir / "train.csv");
  save_events(data.test, c.out_dir / "test.csv");
  write_text(c.out_dir / "config.json", config_to_json(c).dump(2) + "\n");
  std::cout << "train: " << data.train.num_days() << " days, " << data.train.total_events()
            << " events\ntest: " << data.test.num_days() << " days, "
            << data.test.total_events() << " events\n";
  return 0;
}

int cmd_test_poisson(const ExperimentConfig& c, double lower, std::optional<double> upper,
                     const std::string& method, const std::string& pooling) {
  const Dataset data = load_dataset(c);
  PoissonTestConfig t = c.search.test;
  t.method = parse_test_method(method);
  t.pooling = parse_pooling(pooling);
  const double u = upper.value_or(data.train.window.end);
  if (!(lower < u) || lower < data.train.window.start || u > data.train.window.end)
    throw InputError("interval must satisfy start <= lower < upper <= end of window");
  const TestOutcome r = test_interval(data.train.days, lower, u, t);
  const json j = {{"lower", lower},         {"upper", u},
                  {"method", method},       {"pooling", pooling},
                  {"statistic", r.statistic}, {"critical", r.critical},
                  {"m", r.m},               {"epsilon", r.epsilon},
                  {"passed", r.passed}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_learn(const ExperimentConfig& c, bool trace) {
  const Dataset data = load_dataset(c);
  const CountTable train = count_events(data.train, c.resolution);
  const CountTable test = count_events(data.test, c.resolution);
  const Method m = Method::parse(c.methods.front());
  SearchConfig s = c.search;
  s.seed = search_seed(c.seed);
  std::vector<SearchTrace> traces;
  LearnOptions opt;
  if (trace) opt.traces = &traces;
  const FitReport r = learn(data.train, train, test, m, c.fit, s, opt);
  save_model(r.model, c.out_dir / "model.json");
  write_text(c.out_dir / "report.json", report_to_json(r).dump(2) + "\n");
  if (trace) {
    std::ostringstream out;
    for (std::size_t i = 0; i < traces.size(); ++i) write_trace(traces[i], i, out);
    write_text(c.out_dir / "trace.jsonl", out.str());
  }
  std::cout << "method " << r.method << ": bins " << r.bins << ", rmse_train "
            << csv_number(r.rmse_train) << ", rmse_test " << csv_number(r.rmse_test);
  if (r.equal_length)
    std::cout << ", equal-length rmse_test " << csv_number(r.equal_length->rmse_test) << ", rho "
              << csv_number(*r.rho());
  std::cout << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& c, const std::string& model_path, const std::string& events) {
  const RateModel model = load_model(model_path);
  const EventSeries ev = load_events(events, model.partition.window());
  const double rmse = evaluate(model, count_events(ev, c.resolution));
  std::cout << "days " << ev.num_days() << ", events " << ev.total_events() << ", rmse "
            << csv_number(rmse) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn arrival rates of nonhomogeneous Poisson processes"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "generate train/test event files");
  add_common(simulate, o);

  auto* tp = app.add_subcommand("test-poisson", "test an interval of the training days");
  add_common(tp, o);
  double lower = 0.0;
  std::optional<double> upper;
  std::string test_method = "log", pooling = "per-day";
  tp->add_option("--lower", lower, "interval start (seconds)");
  tp->add_option("--upper", upper, "interval end (seconds)");
  tp->add_option("--test", test_method, "log or ks-uniform");
  tp->add_option("--pooling", pooling, "per-day or pooled");

  auto* learn_cmd = app.add_subcommand("learn", "learn a rate model with one method");
  add_common(learn_cmd, o);
  bool trace = false;
  learn_cmd->add_flag("--trace", trace, "write trace.jsonl");

  auto* exp1 = app.add_subcommand("exp1", "relaxed eta sweep (exp1.csv)");
  add_common(exp1, o);
  auto* exp2 = app.add_subcommand("exp2", "method comparison (exp2.csv)");
  add_common(exp2, o);
  auto* exp3 = app.add_subcommand("exp3", "per-area models (areas/, index.json, exp3_summary.csv)");
  add_common(exp3, o);

  auto* eval = app.add_subcommand("eval", "RMSE of a saved model on an event file");
  add_common(eval, o);
  std::string model_path;
  eval->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval) {
      if (!o.events) throw InputError("eval needs --events");
      const std::string events = *o.events;
      o.events.reset();
      return cmd_eval(resolve(o), model_path, events);
    }
    const ExperimentConfig c = resolve(o);
    if (*simulate) return cmd_simulate(c);
    if (*tp) return cmd_test_poisson(c, lower, upper, test_method, pooling);
    if (*learn_cmd) return cmd_learn(c, trace);
    if (*exp1) {
      print_rows(exp1_csv(run_experiment_1(c)));
      return 0;
    }
    if (*exp2) {
      print_rows(exp2_csv(run_experiment_2(c)));
      return 0;
    }
    if (*exp3) {
      print_rows(exp3_csv(run_experiment_3(c)));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "nhpp: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
