// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace mvlr {

enum class Weather : std::uint8_t { rain = 0, snow = 1, haze = 2, mixed = 3 };

inline constexpr std::array<Weather, 4> kAllWeather = {Weather::rain, Weather::snow,
                                                        Weather::haze, Weather::mixed};

std::string_view to_string(Weather weather);
Weather parse_weather(std::string_view name);  // ValidationError on unknown names

struct DegradationSpec {
  Weather weather = Weather::rain;
  double severity = 0.0;  // [0, 1]
  std::uint64_t seed = 0;

  void validate() const;  // ValidationError when severity is outside [0, 1]

  friend bool operator==(const DegradationSpec&, const DegradationSpec&) = default;
};

}  // namespace mvlr
