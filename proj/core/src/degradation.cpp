// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/degradation.hpp"

#include "mvlr/errors.hpp"

namespace mvlr {

std::string_view to_string(Weather weather) {
  switch (weather) {
    case Weather::rain: return "rain";
    case Weather::snow: return "snow";
    case Weather::haze: return "haze";
    case Weather::mixed: return "mixed";
  }
  return "unknown";
}

Weather parse_weather(std::string_view name) {
  for (Weather w : kAllWeather) {
    if (to_string(w) == name) return w;
  }
  throw ValidationError("unknown weather type '" + std::string(name) +
                        "' (expected rain, snow, haze or mixed)");
}

void DegradationSpec::validate() const {
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw ValidationError("severity " + std::to_string(severity) + " outside [0, 1]");
  }
}

}  // namespace mvlr
