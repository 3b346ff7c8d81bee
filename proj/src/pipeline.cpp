#include "calib/pipeline.hpp"

#include <fmt/format.h>

#include "calib/error.hpp"

namespace calib {

std::optional<PipelineSpec> pipeline_profile(std::string_view name) {
  PipelineSpec spec;
  if (name == "MA" || name == "ma") {
    spec.profile = "MA";
    spec.filter.order = 6;
    return spec;
  }
  if (name == "UFFT" || name == "ufft") {
    spec.profile = "UFFT";
    spec.filter.order = 3;
    spec.baseline = std::pair{-1.0, 0.0};
    return spec;
  }
  if (name == "custom") return spec;
  return std::nullopt;
}

EpochSet run_pipeline(const std::vector<SignalRecording>& recordings, const PipelineSpec& spec,
                      const std::optional<BeerLambertConfig>& optics, double task_duration_s,
                      std::vector<std::string>* log) {
  if (recordings.empty()) throw ValidationError("no recordings to preprocess");
  const auto note = [&](std::string line) {
    if (log) log->push_back(std::move(line));
  };

  EpochSet all;
  bool first = true;
  for (const auto& input : recordings) {
    input.check();
    SignalRecording rec = input;
    if (rec.has_wavelength_channels()) {
      if (!spec.beer_lambert) {
        throw ConfigError(fmt::format("{}: wavelength channels present but conversion is disabled", rec.subject));
      }
      if (!optics || optics->extinction.empty()) {
        throw ConfigError(fmt::format("{}: wavelength channels need an extinction table", rec.subject));
      }
      rec = beer_lambert(rec, *optics);
      note(fmt::format("{}: converted optical density to HbO/HbR", rec.subject));
    } else {
      note(fmt::format("{}: chromophore input, conversion skipped", rec.subject));
    }
    rec = bandpass(rec, spec.filter);
    note(fmt::format("{}: order {} band-pass {}-{} Hz{}", rec.subject, spec.filter.order, spec.filter.low_hz,
                     spec.filter.high_hz, spec.filter.zero_phase ? " (zero-phase)" : ""));
    if (spec.baseline) {
      rec = baseline_correct(rec, spec.baseline->first, spec.baseline->second);
      note(fmt::format("{}: baseline [{}, {}) s subtracted", rec.subject, spec.baseline->first, spec.baseline->second));
    }
    auto epochs = epoch(rec, task_duration_s, spec.window_s, spec.step_s);
    if (first) {
      all = std::move(epochs);
      first = false;
    } else {
      append(all, epochs);
    }
  }
  std::vector<std::string> warnings;
  all = normalize(all, spec.normalize, &warnings);
  for (auto& w : warnings) note(std::move(w));
  return all;
}

}  // namespace calib
