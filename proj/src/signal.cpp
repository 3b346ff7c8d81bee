#include "calib/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/error.hpp"

namespace calib {

namespace {

std::string format_wavelength(double nm) {
  if (nm == std::floor(nm)) return fmt::format("{:.0f}", nm);
  return fmt::format("{}", nm);
}

}  // namespace

std::string ChannelInfo::name() const {
  switch (kind) {
    case ChannelKind::hbo:
      return fmt::format("{}_{}_HbO", source, detector);
    case ChannelKind::hbr:
      return fmt::format("{}_{}_HbR", source, detector);
    case ChannelKind::wavelength:
      return fmt::format("{}_{}_{}", source, detector, format_wavelength(wavelength_nm));
  }
  return {};
}

std::optional<ChannelInfo> ChannelInfo::parse(std::string_view name) {
  const auto first = name.find('_');
  if (first == std::string_view::npos) return std::nullopt;
  const auto second = name.find('_', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  ChannelInfo info;
  info.source = std::string(name.substr(0, first));
  info.detector = std::string(name.substr(first + 1, second - first - 1));
  const auto tail = name.substr(second + 1);
  if (info.source.empty() || info.detector.empty() || tail.empty()) return std::nullopt;
  if (tail == "HbO" || tail == "hbo" || tail == "HBO") {
    info.kind = ChannelKind::hbo;
  } else if (tail == "HbR" || tail == "hbr" || tail == "HBR") {
    info.kind = ChannelKind::hbr;
  } else {
    try {
      std::size_t used = 0;
      const std::string text(tail);
      info.wavelength_nm = std::stod(text, &used);
      if (used != text.size() || !(info.wavelength_nm > 0.0)) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    info.kind = ChannelKind::wavelength;
  }
  return info;
}

bool SignalRecording::has_wavelength_channels() const {
  return std::any_of(channels.begin(), channels.end(), [](const auto& c) { return c.kind == ChannelKind::wavelength; });
}

void SignalRecording::check() const {
  if (!(fs > 0.0)) throw ValidationError(fmt::format("sampling rate must be positive, got {}", fs));
  if (channels.size() != samples.size()) {
    throw ValidationError(fmt::format("{} channel descriptors for {} sample rows", channels.size(), samples.size()));
  }
  const std::size_t n = num_samples();
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].size() != n) throw ValidationError(fmt::format("channel {} length differs", channels[c].name()));
  }
  const double end = t0 + static_cast<double>(n) / fs;
  for (const auto& e : events) {
    if (e.onset < t0 || e.onset > end) {
      throw ValidationError(fmt::format("event {} onset {} s outside recording [{}, {}]", e.trial_id, e.onset, t0, end));
    }
  }
}

void FilterSpec::check(double fs) const {
  if (order < 1) throw std::invalid_argument(fmt::format("filter order must be >= 1, got {}", order));
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    throw std::invalid_argument(
        fmt::format("filter band needs 0 < low < high < fs/2 (low={}, high={}, fs={})", low_hz, high_hz, fs));
  }
}

SignalRecording beer_lambert(const SignalRecording& od, const BeerLambertConfig& config) {
  od.check();
  if (!(config.separation > 0.0)) throw ConfigError("source-detector separation must be positive");

  struct Pair {
    std::string source, detector;
    std::vector<std::size_t> rows;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < od.channels.size(); ++c) {
    const auto& ch = od.channels[c];
    if (ch.kind != ChannelKind::wavelength) {
      throw std::invalid_argument(fmt::format("channel {} is not a wavelength channel", ch.name()));
    }
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [&](const Pair& p) { return p.source == ch.source && p.detector == ch.detector; });
    if (it == pairs.end()) {
      pairs.push_back({ch.source, ch.detector, {}});
      it = std::prev(pairs.end());
    }
    it->rows.push_back(c);
  }

  SignalRecording out;
  out.fs = od.fs;
  out.t0 = od.t0;
  out.events = od.events;
  out.subject = od.subject;
  const std::size_t n = od.num_samples();

  for (const auto& pair : pairs) {
    const std::size_t m = pair.rows.size();
    if (m < 2) {
      throw std::invalid_argument(
          fmt::format("optode pair {}_{} needs at least two wavelengths, has {}", pair.source, pair.detector, m));
    }
    // A is m x 2: row i = L * DPF(l_i) * (eps_HbO(l_i), eps_HbR(l_i)).
    std::vector<std::array<double, 2>> a(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double nm = od.channels[pair.rows[i]].wavelength_nm;
      const auto eps = config.extinction.find(nm);
      if (eps == config.extinction.end()) {
        throw ConfigError(fmt::format("no extinction coefficients for wavelength {} nm", format_wavelength(nm)));
      }
      const auto dpf = config.dpf.find(nm);
      if (dpf == config.dpf.end() || !(dpf->second > 0.0)) {
        throw ConfigError(fmt::format("no positive pathlength factor for wavelength {} nm", format_wavelength(nm)));
      }
      const double scale = config.separation * dpf->second;
      a[i] = {scale * eps->second.first, scale * eps->second.second};
    }
    double p = 0.0, q = 0.0, r = 0.0;  // A^T A = [[p, q], [q, r]]
    for (const auto& row : a) {
      p += row[0] * row[0];
      q += row[0] * row[1];
      r += row[1] * row[1];
    }
    const double mid = 0.5 * (p + r);
    const double rad = std::hypot(0.5 * (p - r), q);
    const double lmax = mid + rad, lmin = mid - rad;
    const double cond = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxExtinctionCondition)) {
      throw std::invalid_argument(fmt::format("extinction matrix for {}_{} is singular (condition number {:.3g})",
                                              pair.source, pair.detector, cond));
    }
    // Pseudo-inverse rows (2 x m); exact inverse when m == 2.
    std::vector<std::array<double, 2>> pinv(m);
    if (m == 2) {
      const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
      pinv[0] = {a[1][1] / det, -a[1][0] / det};
      pinv[1] = {-a[0][1] / det, a[0][0] / det};
    } else {
      const double det = p * r - q * q;
      for (std::size_t i = 0; i < m; ++i) {
        pinv[i] = {(r * a[i][0] - q * a[i][1]) / det, (-q * a[i][0] + p * a[i][1]) / det};
      }
    }
    std::vector<double> hbo(n, 0.0), hbr(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t i = 0; i < m; ++i) {
        const double v = od.samples[pair.rows[i]][t];
        hbo[t] += pinv[i][0] * v;
        hbr[t] += pinv[i][1] * v;
      }
    }
    out.samples.push_back(std::move(hbo));
    out.channels.push_back({pair.source, pair.detector, ChannelKind::hbo, 0.0});
    out.samples.push_back(std::move(hbr));
    out.channels.push_back({pair.source, pair.detector, ChannelKind::hbr, 0.0});
  }
  return out;
}

namespace serial {

std::vector<std::vector<double>> filter_channels(const std::vector<std::vector<double>>& channels,
                                                 const SosFilter& filter, bool zero_phase) {
  std::vector<std::vector<double>> out(channels.size());
  const auto zi = steady_state_init(filter);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& x = channels[c];
    if (zero_phase) {
      out[c] = zero_phase_filter(filter, x);
    } else {
      std::vector<double> init(zi.size());
      for (std::size_t i = 0; i < zi.size(); ++i) init[i] = zi[i] * (x.empty() ? 0.0 : x.front());
      out[c] = sos_filter(filter, x, init);
    }
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<std::vector<double>> filter_channels(const std::vector<std::vector<double>>& channels,
                                                 const SosFilter& filter, bool zero_phase) {
  std::vector<std::vector<double>> out(channels.size());
  const auto zi = steady_state_init(filter);
  // Exceptions must not escape the parallel region.
  std::vector<std::string> errors(channels.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(channels.size()); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    const auto& x = channels[c];
    try {
      if (zero_phase) {
        out[c] = zero_phase_filter(filter, x);
      } else {
        std::vector<double> init(zi.size());
        for (std::size_t i = 0; i < zi.size(); ++i) init[i] = zi[i] * (x.empty() ? 0.0 : x.front());
        out[c] = sos_filter(filter, x, init);
      }
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::invalid_argument(e);
  }
  return out;
}

}  // namespace omp

SignalRecording bandpass(const SignalRecording& rec, const FilterSpec& spec) {
  rec.check();
  spec.check(rec.fs);
  const auto filter = butterworth_bandpass(spec.order, spec.low_hz, spec.high_hz, rec.fs);
  SignalRecording out = rec;
  out.samples = omp::filter_channels(rec.samples, filter, spec.zero_phase);
  return out;
}

namespace {

// First sample index whose time is >= t.
std::size_t index_at_or_after(const SignalRecording& rec, double t) {
  const double pos = (t - rec.t0) * rec.fs;
  if (pos <= 0.0) return 0;
  const auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
  return std::min(idx, rec.num_samples());
}

}  // namespace

SignalRecording baseline_correct(const SignalRecording& rec, double from_s, double to_s) {
  rec.check();
  if (!(from_s < to_s)) throw std::invalid_argument("baseline window needs from < to");
  std::vector<Event> events = rec.events;
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.onset < b.onset; });

  SignalRecording out = rec;
  const std::size_t n = rec.num_samples();
  for (std::size_t e = 0; e < events.size(); ++e) {
    const std::size_t lo = index_at_or_after(rec, events[e].onset + from_s);
    const std::size_t hi = index_at_or_after(rec, events[e].onset + to_s);
    if (hi <= lo) {
      throw std::invalid_argument(fmt::format("trial {} has no samples in its baseline window", events[e].trial_id));
    }
    const std::size_t seg_end = e + 1 < events.size() ? index_at_or_after(rec, events[e + 1].onset + from_s) : n;
    for (std::size_t c = 0; c < rec.samples.size(); ++c) {
      double mean = 0.0;
      for (std::size_t i = lo; i < hi; ++i) mean += rec.samples[c][i];
      mean /= static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < std::max(seg_end, hi); ++i) out.samples[c][i] = rec.samples[c][i] - mean;
    }
  }
  return out;
}

int EpochSet::num_classes() const {
  int top = -1;
  for (const auto& w : windows) top = std::max(top, w.label);
  return top + 1;
}

std::size_t window_sample_count(double fs, double window_s) {
  return static_cast<std::size_t>(std::floor(fs * window_s + 1e-9));
}

std::size_t windows_per_trial(double task_duration_s, double window_s, double step_s) {
  if (!(window_s > 0.0 && step_s > 0.0)) throw std::invalid_argument("window and step must be positive");
  if (window_s > task_duration_s + 1e-9) {
    throw std::invalid_argument(fmt::format("window {} s exceeds task duration {} s", window_s, task_duration_s));
  }
  return static_cast<std::size_t>(std::floor((task_duration_s - window_s) / step_s + 1e-9)) + 1;
}

EpochSet epoch(const SignalRecording& rec, double task_duration_s, double window_s, double step_s) {
  rec.check();
  const std::size_t count = windows_per_trial(task_duration_s, window_s, step_s);
  EpochSet out;
  out.fs = rec.fs;
  out.window_s = window_s;
  out.step_s = step_s;
  out.num_channels = rec.samples.size();
  out.num_samples = window_sample_count(rec.fs, window_s);
  if (out.num_samples == 0) throw std::invalid_argument("window shorter than one sample");
  for (const auto& c : rec.channels) out.channel_names.push_back(c.name());

  const std::size_t n = rec.num_samples();
  for (const auto& ev : rec.events) {
    for (std::size_t i = 0; i < count; ++i) {
      const double start_t = ev.onset - rec.t0 + static_cast<double>(i) * step_s;
      const auto start = std::llround(rec.fs * start_t);
      if (start < 0 || static_cast<std::size_t>(start) + out.num_samples > n) {
        throw std::invalid_argument(
            fmt::format("trial {} window {} exceeds the recording ({} samples)", ev.trial_id, i, n));
      }
      Window w;
      w.label = ev.label;
      w.subject = rec.subject;
      w.trial_id = ev.trial_id;
      w.window_index = static_cast<int>(i);
      w.data.reserve(out.feature_size());
      for (const auto& ch : rec.samples) {
        const auto first = ch.begin() + start;
        w.data.insert(w.data.end(), first, first + static_cast<std::ptrdiff_t>(out.num_samples));
      }
      out.windows.push_back(std::move(w));
    }
  }
  return out;
}

void append(EpochSet& into, const EpochSet& more) {
  if (into.windows.empty() && into.num_channels == 0) {
    into = more;
    return;
  }
  if (into.num_channels != more.num_channels || into.num_samples != more.num_samples) {
    throw std::invalid_argument("cannot merge epoch sets of different shape");
  }
  into.windows.insert(into.windows.end(), more.windows.begin(), more.windows.end());
}

std::string_view to_string(NormalizeMode mode) {
  return mode == NormalizeMode::window_zscore ? "window_zscore" : "recording_minmax";
}

std::optional<NormalizeMode> parse_normalize_mode(std::string_view text) {
  if (text == "window_zscore" || text == "zscore") return NormalizeMode::window_zscore;
  if (text == "recording_minmax" || text == "minmax") return NormalizeMode::recording_minmax;
  return std::nullopt;
}

EpochSet normalize(const EpochSet& epochs, NormalizeMode mode, std::vector<std::string>* warnings) {
  EpochSet out = epochs;
  const std::size_t ns = epochs.num_samples;
  const auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  if (mode == NormalizeMode::window_zscore) {
    for (std::size_t w = 0; w < out.windows.size(); ++w) {
      auto& win = out.windows[w];
      for (std::size_t c = 0; c < epochs.num_channels; ++c) {
        double* x = win.data.data() + c * ns;
        double mean = 0.0;
        for (std::size_t i = 0; i < ns; ++i) mean += x[i];
        mean /= static_cast<double>(ns);
        double var = 0.0;
        for (std::size_t i = 0; i < ns; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= static_cast<double>(ns);
        double sd = std::sqrt(var);
        if (!(sd > 0.0)) {
          warn(fmt::format("window {} (trial {}) channel {} has zero variance", w, win.trial_id, c));
          sd = 1.0;
        }
        for (std::size_t i = 0; i < ns; ++i) x[i] = (x[i] - mean) / sd;
      }
    }
    return out;
  }

  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t w = 0; w < out.windows.size(); ++w) by_subject[out.windows[w].subject].push_back(w);
  for (const auto& [subject, members] : by_subject) {
    for (std::size_t c = 0; c < epochs.num_channels; ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t w : members) {
        const double* x = out.windows[w].data.data() + c * ns;
        for (std::size_t i = 0; i < ns; ++i) {
          lo = std::min(lo, x[i]);
          hi = std::max(hi, x[i]);
        }
      }
      const double range = hi - lo;
      if (!(range > 0.0)) warn(fmt::format("subject {} channel {} is constant", subject, c));
      for (std::size_t w : members) {
        double* x = out.windows[w].data.data() + c * ns;
        for (std::size_t i = 0; i < ns; ++i) x[i] = range > 0.0 ? (x[i] - lo) / range : 0.0;
      }
    }
  }
  return out;
}

}  // namespace calib
