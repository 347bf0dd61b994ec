#include "agrosim/weather.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "agrosim/random.hpp"
#include "agrosim/text.hpp"

namespace agrosim {

namespace {

constexpr double kMaxLatitude = 66.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_latitude(double latitude) {
  if (!std::isfinite(latitude) || std::abs(latitude) > kMaxLatitude) {
    throw ValidationError("latitude " + format_double(latitude) +
                          " outside supported range [-66, 66]");
  }
}

[[noreturn]] void range_error(const WeatherDay& d, const std::string& what) {
  throw WeatherError(WeatherError::Code::OutOfRange,
                     "weather on " + format_date(d.date) + ": " + what);
}

}  // namespace

void validate_weather_day(const WeatherDay& d) {
  const double fields[] = {d.t_min, d.t_max, d.t_avg, d.irradiation, d.rainfall, d.wind,
                           d.vapor_pressure};
  for (double f : fields) {
    if (!std::isfinite(f)) range_error(d, "non-finite value");
  }
  if (d.t_min > d.t_max) range_error(d, "t_min > t_max");
  if (d.t_avg < d.t_min || d.t_avg > d.t_max) range_error(d, "t_avg outside [t_min, t_max]");
  if (d.irradiation < 0.0) range_error(d, "negative irradiation");
  if (d.rainfall < 0.0) range_error(d, "negative rainfall");
  if (d.wind < 0.0) range_error(d, "negative wind");
  if (d.vapor_pressure <= 0.0) range_error(d, "vapor pressure must be positive");
}

WeatherSeries::WeatherSeries(double latitude, double longitude, std::vector<WeatherDay> days)
    : latitude_(latitude), longitude_(longitude), days_(std::move(days)) {
  for (std::size_t i = 0; i < days_.size(); ++i) {
    validate_weather_day(days_[i]);
    if (i == 0) continue;
    const auto prev = days_[i - 1].date;
    const auto cur = days_[i].date;
    if (cur <= prev) {
      throw WeatherError(WeatherError::Code::NonMonotone,
                         "dates not increasing at " + format_date(cur));
    }
    if (cur != prev + std::chrono::days{1}) {
      throw WeatherError(WeatherError::Code::DateGap,
                         "missing weather for " + format_date(prev + std::chrono::days{1}));
    }
  }
}

bool WeatherSeries::covers(std::chrono::sys_days from, std::chrono::sys_days to) const {
  return !days_.empty() && from >= first_date() && to <= last_date();
}

const WeatherDay& WeatherSeries::on(std::chrono::sys_days date) const {
  if (days_.empty() || date < first_date() || date > last_date()) {
    throw RuntimeError("no weather for " + format_date(date));
  }
  return days_[static_cast<std::size_t>((date - first_date()).count())];
}

WeatherSeries load_weather_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw WeatherError(WeatherError::Code::MissingFile,
                       "weather file not found: " + path.string());
  }
  auto malformed = [&](const std::string& what) {
    return WeatherError(WeatherError::Code::Malformed, path.string() + ": " + what);
  };

  std::string line;
  std::map<std::string, double> meta;
  for (int i = 0; i < 2; ++i) {
    if (!std::getline(in, line)) throw malformed("missing latitude/longitude preamble");
    const auto kv = split(trim(line), ',');
    if (kv.size() != 2) throw malformed("bad preamble line '" + line + "'");
    meta[trim(kv[0])] = parse_double(kv[1], kv[0]);
  }
  if (!meta.count("latitude") || !meta.count("longitude")) {
    throw malformed("preamble must name latitude and longitude");
  }

  if (!std::getline(in, line)) throw malformed("missing header row");
  const auto header = split(trim(line), ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
  for (const char* required : {"date", "t_min", "t_max", "irradiation", "rainfall", "wind",
                               "vapor_pressure"}) {
    if (!col.count(required)) throw malformed(std::string("missing column ") + required);
  }
  const bool has_avg = col.count("t_avg") > 0;

  std::vector<WeatherDay> days;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) throw malformed("wrong column count: '" + line + "'");
    auto get = [&](const char* name) { return parse_double(cells[col.at(name)], name); };
    WeatherDay d;
    d.date = parse_date(cells[col.at("date")]);
    d.t_min = get("t_min");
    d.t_max = get("t_max");
    d.t_avg = has_avg ? get("t_avg") : 0.5 * (d.t_min + d.t_max);
    d.irradiation = get("irradiation");
    d.rainfall = get("rainfall");
    d.wind = get("wind");
    d.vapor_pressure = get("vapor_pressure");
    days.push_back(d);
  }
  if (days.empty()) throw malformed("no data rows");
  return WeatherSeries(meta["latitude"], meta["longitude"], std::move(days));
}

void dump_weather_table(const WeatherSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << "latitude," << format_double(series.latitude()) << '\n'
      << "longitude," << format_double(series.longitude()) << '\n'
      << "date,t_min,t_max,t_avg,irradiation,rainfall,wind,vapor_pressure\n";
  for (const auto& d : series.days()) {
    out << format_date(d.date) << ',' << format_double(d.t_min) << ',' << format_double(d.t_max)
        << ',' << format_double(d.t_avg) << ',' << format_double(d.irradiation) << ','
        << format_double(d.rainfall) << ',' << format_double(d.wind) << ','
        << format_double(d.vapor_pressure) << '\n';
  }
}

double solar_declination(int day_of_year) {
  return -23.44 * std::cos(2.0 * std::numbers::pi * (day_of_year + 10) / 365.0);
}

double day_length(double latitude, int day_of_year) {
  check_latitude(latitude);
  if (day_of_year < 1 || day_of_year > 366) {
    throw ValidationError("day of year out of range: " + std::to_string(day_of_year));
  }
  const double decl = solar_declination(day_of_year) * kDegToRad;
  const double x = std::clamp(-std::tan(latitude * kDegToRad) * std::tan(decl), -1.0, 1.0);
  return 24.0 / std::numbers::pi * std::acos(x);
}

namespace {

// Top-of-atmosphere daily radiation, MJ/m²/day.
double extraterrestrial_radiation(double latitude, int doy) {
  constexpr double kSolarConstant = 0.0820;  // MJ/m²/min
  const double phi = latitude * kDegToRad;
  const double decl = solar_declination(doy) * kDegToRad;
  const double dr = 1.0 + 0.033 * std::cos(2.0 * std::numbers::pi * doy / 365.0);
  const double ws = std::acos(std::clamp(-std::tan(phi) * std::tan(decl), -1.0, 1.0));
  return 24.0 * 60.0 / std::numbers::pi * kSolarConstant * dr *
         (ws * std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::sin(ws));
}

}  // namespace

WeatherSeries synth_weather(std::uint64_t seed, double latitude, int year,
                            const SynthWeatherParams& p) {
  check_latitude(latitude);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(year)));
  const double hemisphere = latitude < 0.0 ? -1.0 : 1.0;
  const auto start = jan1(year);
  const auto end = jan1(year + 1);

  std::vector<WeatherDay> days;
  for (auto date = start; date < end; date += std::chrono::days{1}) {
    const int doy = day_of_year(date);
    // Fixed draw order keeps the stream stable: temp, range, rain flag, rain depth, sky, wind.
    const double noise = rng.uniform(-p.t_noise, p.t_noise);
    const double range = rng.uniform(p.range_min, p.range_max);
    const bool wet = rng.uniform() < p.rain_probability;
    const double depth_draw = rng.uniform();
    const double sky = rng.uniform(0.55, 0.75);
    const double wind = rng.uniform(p.wind_min, p.wind_max);

    WeatherDay d;
    d.date = date;
    d.t_avg = p.t_mean -
              p.t_amplitude * std::cos(2.0 * std::numbers::pi * (doy - 15) / 365.0) * hemisphere +
              noise;
    d.t_min = d.t_avg - 0.5 * range;
    d.t_max = d.t_avg + 0.5 * range;
    d.rainfall = wet ? -p.rain_mean * std::log1p(-depth_draw) : 0.0;
    d.irradiation = std::max(0.0, extraterrestrial_radiation(latitude, doy)) * (wet ? 0.35 : sky);
    d.wind = wind;
    d.vapor_pressure = 6.108 * std::exp(17.27 * d.t_min / (d.t_min + 237.3));
    days.push_back(d);
  }
  return WeatherSeries(latitude, 0.0, std::move(days));
}

WeatherSeries synth_weather_years(std::uint64_t seed, double latitude, int first_year,
                                  int n_years, const SynthWeatherParams& params) {
  if (n_years < 1) throw ValidationError("n_years must be >= 1");
  std::vector<WeatherDay> all;
  for (int y = first_year; y < first_year + n_years; ++y) {
    const auto part = synth_weather(seed, latitude, y, params);
    all.insert(all.end(), part.days().begin(), part.days().end());
  }
  return WeatherSeries(latitude, 0.0, std::move(all));
}

}  // namespace agrosim
