#pragma once

#include "nhpp/binning.hpp"
#include "nhpp/core.hpp"
#include "nhpp/simulator.hpp"
#include "nhpp/spatial.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace nhpp {

/// Raised for unreadable or malformed input; the message names the file and
/// the offending line or field.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// event-csv: optional header "day,seconds", then one "day,seconds" per line.
EventSeries load_events(const std::filesystem::path& path, TimeWindow window = {});
void save_events(const EventSeries& events, const std::filesystem::path& path);

/// geo-csv: optional header "day,seconds,lon,lat".
GeoEventSeries load_geo_events(const std::filesystem::path& path, TimeWindow window = {});
void save_geo_events(const GeoEventSeries& events, const std::filesystem::path& path);

nlohmann::json model_to_json(const RateModel& model);
RateModel model_from_json(const nlohmann::json& j);
void save_model(const RateModel& model, const std::filesystem::path& path);
RateModel load_model(const std::filesystem::path& path);

/// {"breakpoints": [...], "slopes": [...], "intercepts": [...], "scale": s}
nlohmann::json rate_to_json(const PiecewiseLinearRate& rate);
PiecewiseLinearRate rate_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const FitReport& report);

/// One JSON object per trace entry.
void write_trace(const SearchTrace& trace, std::size_t restart, std::ostream& out);

/// Six significant digits, as used in every emitted CSV.
std::string csv_number(double v);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nhpp
