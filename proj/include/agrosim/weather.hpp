#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agrosim/error.hpp"

namespace agrosim {

/// One day of driving weather.
struct WeatherDay {
  std::chrono::sys_days date{};
  double t_min = 0.0;           // °C
  double t_max = 0.0;           // °C
  double t_avg = 0.0;           // °C
  double irradiation = 0.0;     // MJ/m²/day
  double rainfall = 0.0;        // cm/day
  double wind = 0.0;            // m/s
  double vapor_pressure = 0.0;  // hPa

  friend bool operator==(const WeatherDay&, const WeatherDay&) = default;
};

/// Throws WeatherError(OutOfRange) if any field breaks its physical range.
void validate_weather_day(const WeatherDay& day);

/// Gap-free daily series at one location. Immutable after construction.
class WeatherSeries {
 public:
  WeatherSeries() = default;
  /// Validates contiguity and every day's ranges.
  WeatherSeries(double latitude, double longitude, std::vector<WeatherDay> days);

  double latitude() const { return latitude_; }
  double longitude() const { return longitude_; }
  const std::vector<WeatherDay>& days() const { return days_; }
  std::size_t size() const { return days_.size(); }
  bool empty() const { return days_.empty(); }

  std::chrono::sys_days first_date() const { return days_.front().date; }
  std::chrono::sys_days last_date() const { return days_.back().date; }
  bool covers(std::chrono::sys_days from, std::chrono::sys_days to) const;

  /// Throws RuntimeError when the date is outside the series.
  const WeatherDay& on(std::chrono::sys_days date) const;

  friend bool operator==(const WeatherSeries&, const WeatherSeries&) = default;

 private:
  double latitude_ = 0.0;
  double longitude_ = 0.0;
  std::vector<WeatherDay> days_;
};

class WeatherError : public ValidationError {
 public:
  enum class Code { MissingFile, Malformed, DateGap, NonMonotone, OutOfRange };
  WeatherError(Code code, const std::string& msg) : ValidationError(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// CSV with a two-line preamble (`latitude,<deg>` and `longitude,<deg>`),
/// then a header row. t_avg is optional; when absent it is (t_min+t_max)/2.
WeatherSeries load_weather_table(const std::filesystem::path& path);
void dump_weather_table(const WeatherSeries& series, const std::filesystem::path& path);

/// Constants of the synthetic generator. Sites may override them.
struct SynthWeatherParams {
  double t_mean = 12.0;      // °C annual mean
  double t_amplitude = 10.0; // °C seasonal half-range
  double t_noise = 2.0;      // ± °C uniform daily noise
  double range_min = 6.0;    // diurnal range bounds, °C
  double range_max = 12.0;
  double rain_probability = 0.3;
  double rain_mean = 0.6;    // cm on a wet day
  double wind_min = 1.0;
  double wind_max = 5.0;

  friend bool operator==(const SynthWeatherParams&, const SynthWeatherParams&) = default;
};

/// Deterministic per (seed, latitude, year, params). |latitude| ≤ 66.
WeatherSeries synth_weather(std::uint64_t seed, double latitude, int year,
                            const SynthWeatherParams& params = {});

/// Consecutive calendar years [first_year, first_year + n_years), each drawn by synth_weather.
WeatherSeries synth_weather_years(std::uint64_t seed, double latitude, int first_year,
                                  int n_years, const SynthWeatherParams& params = {});

/// Astronomical day length in hours. |latitude| ≤ 66, day_of_year ∈ [1, 366].
double day_length(double latitude, int day_of_year);

/// Solar declination in degrees used by day_length.
double solar_declination(int day_of_year);

}  // namespace agrosim
