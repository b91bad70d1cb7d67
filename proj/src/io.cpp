#include "nhpp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace nhpp {

using nlohmann::json;

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(v);
}

bool parse_int(std::string_view s, int& v) {
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

// Reads the data rows of a CSV with the given header, skipping blank lines.
template <class Row>
void read_csv(const std::filesystem::path& path, const std::vector<std::string>& header, Row row) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0, rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_fields(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (rows == 0 && lineno == 1 && fields.size() == header.size() &&
        std::equal(fields.begin(), fields.end(), header.begin()))
      continue;
    if (fields.size() != header.size())
      throw InputError(where(path, lineno) + "expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    row(fields, lineno);
    ++rows;
  }
  if (rows == 0) throw InputError(path.string() + ": file contains no events");
}

double parse_seconds(std::string_view f, const TimeWindow& window,
                     const std::filesystem::path& path, std::size_t lineno) {
  double t = 0.0;
  if (!parse_double(f, t))
    throw InputError(where(path, lineno) + "cannot parse seconds '" + std::string(f) + "'");
  if (!window.contains(t))
    throw InputError(where(path, lineno) + "seconds " + std::string(f) + " outside [" +
                     csv_number(window.start) + ", " + csv_number(window.end) + ")");
  return t;
}

int parse_day(std::string_view f, const std::filesystem::path& path, std::size_t lineno) {
  int d = 0;
  if (!parse_int(f, d) || d < 0)
    throw InputError(where(path, lineno) + "cannot parse day '" + std::string(f) + "'");
  return d;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

EventSeries load_events(const std::filesystem::path& path, TimeWindow window) {
  std::map<int, std::vector<double>> days;
  read_csv(path, {"day", "seconds"}, [&](const auto& f, std::size_t lineno) {
    const int d = parse_day(f[0], path, lineno);
    days[d].push_back(parse_seconds(f[1], window, path, lineno));
  });
  std::vector<DayArrivals> out;
  for (auto& [d, times] : days) {
    std::sort(times.begin(), times.end());
    out.push_back({d, std::move(times)});
  }
  return EventSeries(window, std::move(out));
}

void save_events(const EventSeries& events, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "day,seconds\n";
  for (const auto& d : events.days)
    for (double t : d.times) out << d.day << ',' << full(t) << '\n';
}

GeoEventSeries load_geo_events(const std::filesystem::path& path, TimeWindow window) {
  std::vector<GeoEvent> events;
  read_csv(path, {"day", "seconds", "lon", "lat"}, [&](const auto& f, std::size_t lineno) {
    GeoEvent e;
    e.day = parse_day(f[0], path, lineno);
    e.seconds = parse_seconds(f[1], window, path, lineno);
    if (!parse_double(f[2], e.lon))
      throw InputError(where(path, lineno) + "cannot parse lon '" + std::string(f[2]) + "'");
    if (!parse_double(f[3], e.lat))
      throw InputError(where(path, lineno) + "cannot parse lat '" + std::string(f[3]) + "'");
    events.push_back(e);
  });
  return GeoEventSeries(window, std::move(events));
}

void save_geo_events(const GeoEventSeries& events, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "day,seconds,lon,lat\n";
  for (const auto& e : events.events)
    out << e.day << ',' << full(e.seconds) << ',' << full(e.lon) << ',' << full(e.lat) << '\n';
}

// ---------------------------------------------------------------------------

json model_to_json(const RateModel& model) {
  json coefs = json::array();
  for (const auto& c : model.coefficients) coefs.push_back(std::vector<double>(c.begin(), c.end()));
  const TimeWindow& w = model.partition.window();
  return {{"window", {{"start", w.start}, {"end", w.end}}},
          {"knots", model.partition.knots()},
          {"degree", model.degree},
          {"coefficients", coefs},
          {"clamp", model.clamp}};
}

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw InputError("model must be a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) throw InputError(std::string("missing field '") + name + "'");
  return *it;
}

double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw InputError("field '" + name + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError("field '" + name + "' must be finite");
  return v;
}

std::vector<double> numbers(const json& j, const std::string& name) {
  if (!j.is_array()) throw InputError("field '" + name + "' must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], name + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

RateModel model_from_json(const json& j) {
  const json& w = field(j, "window");
  TimeWindow window;
  try {
    window = TimeWindow(number(field(w, "start"), "window.start"),
                        number(field(w, "end"), "window.end"));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("field 'window': ") + e.what());
  }
  const std::vector<double> knots = numbers(field(j, "knots"), "knots");
  std::optional<Partition> partition;
  try {
    partition.emplace(window, knots);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("field 'knots': ") + e.what());
  }
  const json& deg = field(j, "degree");
  if (!deg.is_number_integer() || deg.get<long long>() < 0)
    throw InputError("field 'degree' must be a nonnegative integer");
  const int degree = deg.get<int>();
  const json& cs = field(j, "coefficients");
  if (!cs.is_array()) throw InputError("field 'coefficients' must be an array");
  if (cs.size() != partition->num_bins())
    throw InputError("field 'coefficients' has " + std::to_string(cs.size()) +
                     " entries for " + std::to_string(partition->num_bins()) + " bins");
  std::vector<Eigen::VectorXd> coefs;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const std::string name = "coefficients[" + std::to_string(k) + "]";
    const std::vector<double> v = numbers(cs[k], name);
    if (v.size() != static_cast<std::size_t>(degree) + 1)
      throw InputError("field '" + name + "' has length " + std::to_string(v.size()) +
                       ", expected degree + 1 = " + std::to_string(degree + 1));
    coefs.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const json& clamp = field(j, "clamp");
  if (!clamp.is_boolean()) throw InputError("field 'clamp' must be a boolean");
  return RateModel(*partition, degree, std::move(coefs), clamp.get<bool>());
}

void save_model(const RateModel& model, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << model_to_json(model).dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

RateModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

json rate_to_json(const PiecewiseLinearRate& rate) {
  return {{"breakpoints", rate.breakpoints()},
          {"slopes", rate.slopes()},
          {"intercepts", rate.intercepts()},
          {"scale", rate.scale()}};
}

PiecewiseLinearRate rate_from_json(const json& j) {
  try {
    return PiecewiseLinearRate(numbers(field(j, "breakpoints"), "breakpoints"),
                               numbers(field(j, "slopes"), "slopes"),
                               numbers(field(j, "intercepts"), "intercepts"),
                               number(field(j, "scale"), "scale"));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("rate: ") + e.what());
  }
}

json report_to_json(const FitReport& r) {
  json j = {{"method", r.method},
            {"bins", r.bins},
            {"seed", r.seed},
            {"rmse_train", r.rmse_train},
            {"rmse_test", r.rmse_test},
            {"binned_risk", r.binned_risk},
            {"bin_sizes", r.bin_sizes},
            {"model", model_to_json(r.model)}};
  if (r.penalized_risk) j["penalized_risk"] = *r.penalized_risk;
  if (r.gamma) j["gamma"] = *r.gamma;
  if (r.equal_length) {
    j["equal_length"] = {{"rmse_train", r.equal_length->rmse_train},
                         {"rmse_test", r.equal_length->rmse_test}};
    j["rho"] = *r.rho();
  }
  return j;
}

namespace {

json outcome_json(const TestOutcome& t) {
  return {{"statistic", t.statistic},
          {"critical", t.critical},
          {"m", t.m},
          {"epsilon", t.epsilon},
          {"passed", t.passed}};
}

}  // namespace

void write_trace(const SearchTrace& trace, std::size_t restart, std::ostream& out) {
  for (std::size_t i = 0; i < trace.entries.size(); ++i) {
    const TraceEntry& e = trace.entries[i];
    json j = {{"restart", restart},
              {"step", i},
              {"knots", e.knots},
              {"binned_risk", e.binned_risk},
              {"accepted", e.accepted},
              {"best", i == trace.best_index}};
    if (e.penalized_risk) j["penalized_risk"] = *e.penalized_risk;
    if (e.forced) j["forced"] = true;
    if (e.split) {
      j["interval"] = {*e.lower, *e.upper};
      j["split"] = *e.split;
    }
    if (e.left_test) j["left_test"] = outcome_json(*e.left_test);
    if (e.right_test) j["right_test"] = outcome_json(*e.right_test);
    out << j.dump() << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace nhpp
