#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calib/butterworth.hpp"

namespace calib {

enum class ChannelKind { hbo, hbr, wavelength };

struct ChannelInfo {
  std::string source;
  std::string detector;
  ChannelKind kind = ChannelKind::hbo;
  double wavelength_nm = 0.0;  // only for ChannelKind::wavelength

  // "S1_D2_HbO", "S1_D2_HbR" or "S1_D2_760".
  std::string name() const;
  static std::optional<ChannelInfo> parse(std::string_view name);
};

struct Event {
  double onset = 0.0;  // seconds, same clock as the time column
  int label = 0;
  std::string trial_id;
};

struct SignalRecording {
  std::vector<std::vector<double>> samples;  // one row per channel
  double fs = 1.0;
  double t0 = 0.0;  // time of sample 0
  std::vector<ChannelInfo> channels;
  std::vector<Event> events;
  std::string subject;

  std::size_t num_samples() const { return samples.empty() ? 0 : samples.front().size(); }
  bool has_wavelength_channels() const;
  void check() const;  // throws ValidationError
};

struct FilterSpec {
  int order = 6;
  double low_hz = 0.01;
  double high_hz = 0.1;
  bool zero_phase = true;

  void check(double fs) const;  // throws std::invalid_argument
};

struct BeerLambertConfig {
  // wavelength (nm) -> (epsilon_HbO, epsilon_HbR)
  std::map<double, std::pair<double, double>> extinction;
  // wavelength (nm) -> differential pathlength factor
  std::map<double, double> dpf;
  double separation = 1.0;  // source-detector distance L
};

inline constexpr double kMaxExtinctionCondition = 1e8;

// Solves dOD(lambda) = L * DPF(lambda) * (eps_HbO dHbO + eps_HbR dHbR) per
// optode pair and sample (least squares when a pair has > 2 wavelengths).
// Output channels come in (HbO, HbR) order per pair, pairs in first-seen order.
SignalRecording beer_lambert(const SignalRecording& od, const BeerLambertConfig& config);

SignalRecording bandpass(const SignalRecording& rec, const FilterSpec& spec);

// For each trial the mean over [onset + from_s, onset + to_s) is subtracted
// from the trial's span, which runs from its baseline start to the next
// trial's baseline start (or the end of the recording).
SignalRecording baseline_correct(const SignalRecording& rec, double from_s = -1.0, double to_s = 0.0);

struct Window {
  std::vector<double> data;  // channels x samples, row-major
  int label = 0;
  std::string subject;
  std::string trial_id;
  int window_index = 0;
};

// Trial-major windows of identical shape.
struct EpochSet {
  double fs = 1.0;
  double window_s = 3.0;
  double step_s = 1.0;
  std::size_t num_channels = 0;
  std::size_t num_samples = 0;
  std::vector<std::string> channel_names;
  std::vector<Window> windows;

  std::size_t feature_size() const { return num_channels * num_samples; }
  int num_classes() const;  // 1 + max label
};

std::size_t window_sample_count(double fs, double window_s);
std::size_t windows_per_trial(double task_duration_s, double window_s, double step_s);

// Windows at offsets 0, step, 2 step, ... while offset + window <= task duration.
EpochSet epoch(const SignalRecording& rec, double task_duration_s, double window_s = 3.0, double step_s = 1.0);

// Appends the windows of `more`; shapes must agree.
void append(EpochSet& into, const EpochSet& more);

enum class NormalizeMode { window_zscore, recording_minmax };

std::string_view to_string(NormalizeMode mode);
std::optional<NormalizeMode> parse_normalize_mode(std::string_view text);

// window_zscore: per window and channel, (x - mean) / stdev (population).
// recording_minmax: per subject and channel across its windows, (x - min) / (max - min).
// Degenerate channels are centered (zscore) or zeroed (minmax) and reported in `warnings`.
EpochSet normalize(const EpochSet& epochs, NormalizeMode mode = NormalizeMode::window_zscore,
                   std::vector<std::string>* warnings = nullptr);

namespace serial {
std::vector<std::vector<double>> filter_channels(const std::vector<std::vector<double>>& channels,
                                                 const SosFilter& filter, bool zero_phase);
}
namespace omp {
std::vector<std::vector<double>> filter_channels(const std::vector<std::vector<double>>& channels,
                                                 const SosFilter& filter, bool zero_phase);
}

}  // namespace calib
