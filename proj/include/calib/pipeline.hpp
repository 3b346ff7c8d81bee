#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calib/signal.hpp"

namespace calib {

struct PipelineSpec {
  std::string profile = "custom";
  FilterSpec filter;
  bool beer_lambert = true;  // only applied to wavelength channels
  std::optional<std::pair<double, double>> baseline;
  double window_s = 3.0;
  double step_s = 1.0;
  NormalizeMode normalize = NormalizeMode::window_zscore;
};

// "MA": 6th-order band-pass, Beer-Lambert, no baseline correction.
// "UFFT": 3rd-order band-pass, baseline (-1 s, 0 s).
// "custom": MA-like defaults, expected to be overridden by the manifest.
std::optional<PipelineSpec> pipeline_profile(std::string_view name);

// Conversion (when the input holds wavelengths), band-pass, optional baseline
// correction, windowing and normalization for every recording in turn.
// Throws ConfigError when wavelength input arrives without optics.
EpochSet run_pipeline(const std::vector<SignalRecording>& recordings, const PipelineSpec& spec,
                      const std::optional<BeerLambertConfig>& optics, double task_duration_s,
                      std::vector<std::string>* log = nullptr);

}  // namespace calib
