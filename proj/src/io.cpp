#include "calib/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "calib/error.hpp"

namespace calib::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string_view what) {
  throw ParseError(fmt::format("{}:{}: {}", source, line, what));
}

double parse_double(std::string_view field, std::string_view source, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    fail(source, line, fmt::format("column '{}': '{}' is not a number", column, field));
  }
  return v;
}

long long parse_int(std::string_view field, std::string_view source, std::size_t line, std::string_view column) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    fail(source, line, fmt::format("column '{}': '{}' is not an integer", column, field));
  }
  return v;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  return in;
}

bool next_line(std::istream& in, std::string& line, std::size_t& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

PredictionSet read_predictions(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) throw ParseError(fmt::format("{}: empty prediction file", source));

  const auto header = split_csv(line);
  static constexpr std::string_view kFixed[] = {"subject", "trial", "fold", "split", "label"};
  if (header.size() < 7) fail(source, number, "header needs subject,trial,fold,split,label and at least two class columns");
  for (std::size_t i = 0; i < 5; ++i) {
    if (header[i] != kFixed[i]) fail(source, number, fmt::format("expected column '{}', found '{}'", kFixed[i], header[i]));
  }
  const bool logits = header[5].starts_with("logit_");
  const std::string_view prefix = logits ? "logit_" : "prob_";
  const std::size_t k = header.size() - 5;
  for (std::size_t c = 0; c < k; ++c) {
    const auto expected = fmt::format("{}{}", prefix, c);
    if (header[5 + c] != expected) fail(source, number, fmt::format("expected column '{}', found '{}'", expected, header[5 + c]));
  }

  PredictionSet set;
  set.num_classes = static_cast<int>(k);
  while (next_line(in, line, number)) {
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      fail(source, number, fmt::format("expected {} fields, found {}", header.size(), fields.size()));
    }
    PredictionRecord r;
    r.subject_id = std::string(fields[0]);
    r.trial_id = std::string(fields[1]);
    r.fold_id = static_cast<int>(parse_int(fields[2], source, number, "fold"));
    const auto split = parse_split(fields[3]);
    if (!split) fail(source, number, fmt::format("unknown split '{}'", fields[3]));
    r.split = *split;
    r.label = static_cast<int>(parse_int(fields[4], source, number, "label"));
    std::vector<double> values(k);
    for (std::size_t c = 0; c < k; ++c) values[c] = parse_double(fields[5 + c], source, number, header[5 + c]);
    if (logits) {
      r.probs = softmax(values);
      r.logits = std::move(values);
    } else {
      r.probs = std::move(values);
    }
    set.records.push_back(std::move(r));
  }
  return set;
}

PredictionSet read_predictions(const fs::path& path) {
  auto in = open_in(path);
  return read_predictions(in, path.string());
}

void write_predictions(std::ostream& out, const PredictionSet& set) {
  const bool logits = !set.empty() && set.has_logits();
  out << "subject,trial,fold,split,label";
  for (int c = 0; c < set.num_classes; ++c) out << (logits ? ",logit_" : ",prob_") << c;
  out << '\n';
  for (const auto& r : set.records) {
    out << r.subject_id << ',' << r.trial_id << ',' << r.fold_id << ',' << to_string(r.split) << ',' << r.label;
    for (double v : logits ? *r.logits : r.probs) out << ',' << num(v);
    out << '\n';
  }
}

std::string predictions_csv(const PredictionSet& set) {
  std::ostringstream out;
  write_predictions(out, set);
  return out.str();
}

MetricsTable read_metrics_table(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) throw ParseError(fmt::format("{}: empty metrics table", source));
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "model" || header[1] != "accuracy") {
    fail(source, number, "header must be model,accuracy,<metric>...");
  }
  MetricsTable table;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i].empty()) fail(source, number, "empty metric name");
    table.metrics.emplace_back(header[i]);
  }
  while (next_line(in, line, number)) {
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      fail(source, number, fmt::format("expected {} fields, found {}", header.size(), fields.size()));
    }
    ModelRow row;
    row.name = std::string(fields[0]);
    row.accuracy = parse_double(fields[1], source, number, "accuracy");
    for (std::size_t i = 2; i < fields.size(); ++i) {
      row.calibration.push_back(parse_double(fields[i], source, number, header[i]));
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw ParseError(fmt::format("{}: metrics table has no rows", source));
  return table;
}

MetricsTable read_metrics_table(const fs::path& path) {
  auto in = open_in(path);
  return read_metrics_table(in, path.string());
}

SignalRecording read_recording_csv(const fs::path& path) {
  auto in = open_in(path);
  const auto source = path.string();
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) throw ParseError(fmt::format("{}: empty recording", source));
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "time") fail(source, number, "header must be time,<channel>...");

  SignalRecording rec;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto info = ChannelInfo::parse(header[i]);
    if (!info) fail(source, number, fmt::format("cannot parse channel name '{}'", header[i]));
    rec.channels.push_back(*info);
  }
  rec.samples.resize(rec.channels.size());
  std::vector<double> times;
  while (next_line(in, line, number)) {
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      fail(source, number, fmt::format("expected {} fields, found {}", header.size(), fields.size()));
    }
    times.push_back(parse_double(fields[0], source, number, "time"));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      rec.samples[c - 1].push_back(parse_double(fields[c], source, number, header[c]));
    }
  }
  if (times.size() < 2) throw ParseError(fmt::format("{}: need at least two samples", source));
  const double span = times.back() - times.front();
  if (!(span > 0.0)) throw ParseError(fmt::format("{}: time column must increase", source));
  const double dt = span / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * dt) {
      throw ParseError(fmt::format("{}: time column is not uniformly sampled near row {}", source, i + 1));
    }
  }
  rec.t0 = times.front();
  rec.fs = 1.0 / dt;
  return rec;
}

void write_recording_csv(const fs::path& path, const SignalRecording& rec) {
  std::string out = "time";
  for (const auto& c : rec.channels) out += "," + c.name();
  out += '\n';
  for (std::size_t i = 0; i < rec.num_samples(); ++i) {
    out += num(rec.t0 + static_cast<double>(i) / rec.fs);
    for (const auto& ch : rec.samples) {
      out += ',';
      out += num(ch[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

namespace {

double wavelength_key(const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
  if (ec != std::errc() || ptr != key.data() + key.size() || !(v > 0.0)) {
    throw ConfigError(fmt::format("'{}' is not a wavelength in nm", key));
  }
  return v;
}

std::string wavelength_name(double nm) { return fmt::format("{:g}", nm); }

BeerLambertConfig optics_from_json(const json& j) {
  BeerLambertConfig cfg;
  try {
    for (const auto& [key, value] : j.at("extinction").items()) {
      if (!value.is_array() || value.size() != 2) {
        throw ConfigError(fmt::format("extinction[{}] must be [eps_HbO, eps_HbR]", key));
      }
      cfg.extinction[wavelength_key(key)] = {value[0].get<double>(), value[1].get<double>()};
    }
    if (j.contains("dpf")) {
      for (const auto& [key, value] : j.at("dpf").items()) cfg.dpf[wavelength_key(key)] = value.get<double>();
    }
    if (!j.contains("separation_cm")) throw ConfigError("extinction table given without separation_cm");
    cfg.separation = j.at("separation_cm").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad optics configuration: {}", e.what()));
  }
  if (!(cfg.separation > 0.0)) throw ConfigError("separation_cm must be positive");
  return cfg;
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  Manifest m;
  const auto base = path.parent_path();
  try {
    m.task_duration_s = j.at("task_duration").get<double>();
    for (const auto& r : j.at("recordings")) {
      auto rec = read_recording_csv(base / r.at("data").get<std::string>());
      if (r.contains("fs")) {
        const double fs = r.at("fs").get<double>();
        if (std::abs(fs - rec.fs) > 1e-6 * fs) {
          throw ParseError(fmt::format("{}: fs {} disagrees with the time column", path.string(), fs));
        }
        rec.fs = fs;
      }
      rec.subject = r.at("subject").get<std::string>();
      for (const auto& e : r.at("events")) {
        rec.events.push_back({e.at("onset").get<double>(), e.at("label").get<int>(), e.at("trial").get<std::string>()});
      }
      m.recordings.push_back(std::move(rec));
    }
    m.pipeline = j.contains("pipeline") ? j.at("pipeline") : json();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (j.contains("extinction")) m.optics = optics_from_json(j);
  return m;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& data_files,
                    const std::vector<SignalRecording>& recordings, double task_duration_s,
                    const std::optional<BeerLambertConfig>& optics) {
  json j;
  j["task_duration"] = task_duration_s;
  json recs = json::array();
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const auto& rec = recordings[i];
    json events = json::array();
    for (const auto& e : rec.events) events.push_back({{"onset", e.onset}, {"label", e.label}, {"trial", e.trial_id}});
    recs.push_back({{"data", data_files.at(i)}, {"fs", rec.fs}, {"subject", rec.subject}, {"events", events}});
  }
  j["recordings"] = recs;
  if (optics) {
    json ext = json::object(), dpf = json::object();
    for (const auto& [nm, eps] : optics->extinction) ext[wavelength_name(nm)] = {eps.first, eps.second};
    for (const auto& [nm, v] : optics->dpf) dpf[wavelength_name(nm)] = v;
    j["extinction"] = ext;
    j["dpf"] = dpf;
    j["separation_cm"] = optics->separation;
  }
  write_file_atomic(path, dump_json(j));
}

PipelineSpec apply_pipeline_overrides(PipelineSpec spec, const json& overrides) {
  if (overrides.is_null()) return spec;
  if (!overrides.is_object()) throw ConfigError("pipeline must be an object");
  try {
    for (const auto& [key, value] : overrides.items()) {
      if (key == "filter_order") {
        spec.filter.order = value.get<int>();
      } else if (key == "low_hz") {
        spec.filter.low_hz = value.get<double>();
      } else if (key == "high_hz") {
        spec.filter.high_hz = value.get<double>();
      } else if (key == "zero_phase") {
        spec.filter.zero_phase = value.get<bool>();
      } else if (key == "beer_lambert") {
        spec.beer_lambert = value.get<bool>();
      } else if (key == "baseline") {
        if (value.is_null()) {
          spec.baseline.reset();
        } else if (value.is_array() && value.size() == 2) {
          spec.baseline = std::pair{value[0].get<double>(), value[1].get<double>()};
        } else {
          throw ConfigError("baseline must be null or [from_s, to_s]");
        }
      } else if (key == "window_s") {
        spec.window_s = value.get<double>();
      } else if (key == "step_s") {
        spec.step_s = value.get<double>();
      } else if (key == "normalize") {
        const auto mode = parse_normalize_mode(value.get<std::string>());
        if (!mode) throw ConfigError(fmt::format("unknown normalization '{}'", value.get<std::string>()));
        spec.normalize = *mode;
      } else {
        throw ConfigError(fmt::format("unknown pipeline key '{}'", key));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad pipeline configuration: {}", e.what()));
  }
  return spec;
}

namespace {

std::string subject_file(const std::string& subject) { return fmt::format("epochs_{}.csv", subject); }

json epoch_index(const EpochSet& epochs, EpochFormat format) {
  json windows = json::array();
  for (const auto& w : epochs.windows) {
    windows.push_back({{"subject", w.subject}, {"trial", w.trial_id}, {"window", w.window_index}, {"label", w.label}});
  }
  return {{"format", format == EpochFormat::csv ? "csv" : "binary"},
          {"fs", epochs.fs},
          {"window_s", epochs.window_s},
          {"step_s", epochs.step_s},
          {"num_channels", epochs.num_channels},
          {"num_samples", epochs.num_samples},
          {"channel_names", epochs.channel_names},
          {"windows", windows}};
}

}  // namespace

void write_epochs(const fs::path& dir, const EpochSet& epochs, EpochFormat format) {
  fs::create_directories(dir);
  const std::size_t d = epochs.feature_size();
  if (format == EpochFormat::csv) {
    std::map<std::string, std::string> files;
    for (const auto& w : epochs.windows) {
      auto& text = files[w.subject];
      if (text.empty()) {
        text = "trial,window,label";
        for (std::size_t c = 0; c < epochs.num_channels; ++c) {
          for (std::size_t s = 0; s < epochs.num_samples; ++s) text += fmt::format(",{}@{}", epochs.channel_names[c], s);
        }
        text += '\n';
      }
      text += fmt::format("{},{},{}", w.trial_id, w.window_index, w.label);
      for (double v : w.data) {
        text += ',';
        text += num(v);
      }
      text += '\n';
    }
    for (const auto& [subject, text] : files) write_file_atomic(dir / subject_file(subject), text);
  } else {
    std::string blob(kEpochMagic, sizeof kEpochMagic);
    const std::uint64_t shape[3] = {epochs.windows.size(), epochs.num_channels, epochs.num_samples};
    blob.append(reinterpret_cast<const char*>(shape), sizeof shape);
    for (const auto& w : epochs.windows) {
      if (w.data.size() != d) throw ValidationError("window shape disagrees with the epoch set");
      blob.append(reinterpret_cast<const char*>(w.data.data()), d * sizeof(double));
    }
    write_file_atomic(dir / "epochs.bin", blob);
  }
  write_file_atomic(dir / "index.json", dump_json(epoch_index(epochs, format)));
}

EpochSet read_epochs(const fs::path& dir) {
  json index;
  try {
    index = json::parse(read_file(dir / "index.json"));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", (dir / "index.json").string(), e.what()));
  }
  EpochSet epochs;
  std::string format;
  try {
    format = index.at("format").get<std::string>();
    epochs.fs = index.at("fs").get<double>();
    epochs.window_s = index.at("window_s").get<double>();
    epochs.step_s = index.at("step_s").get<double>();
    epochs.num_channels = index.at("num_channels").get<std::size_t>();
    epochs.num_samples = index.at("num_samples").get<std::size_t>();
    epochs.channel_names = index.at("channel_names").get<std::vector<std::string>>();
    for (const auto& w : index.at("windows")) {
      Window win;
      win.subject = w.at("subject").get<std::string>();
      win.trial_id = w.at("trial").get<std::string>();
      win.window_index = w.at("window").get<int>();
      win.label = w.at("label").get<int>();
      epochs.windows.push_back(std::move(win));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", (dir / "index.json").string(), e.what()));
  }
  const std::size_t d = epochs.feature_size();

  if (format == "binary") {
    const auto blob = read_file(dir / "epochs.bin");
    const std::size_t head = sizeof kEpochMagic + 3 * sizeof(std::uint64_t);
    if (blob.size() < head || std::memcmp(blob.data(), kEpochMagic, sizeof kEpochMagic) != 0) {
      throw ParseError("epochs.bin: bad magic");
    }
    std::uint64_t shape[3];
    std::memcpy(shape, blob.data() + sizeof kEpochMagic, sizeof shape);
    if (shape[0] != epochs.windows.size() || shape[1] != epochs.num_channels || shape[2] != epochs.num_samples) {
      throw ParseError("epochs.bin: shape disagrees with index.json");
    }
    if (blob.size() != head + shape[0] * d * sizeof(double)) throw ParseError("epochs.bin: truncated payload");
    for (std::size_t i = 0; i < epochs.windows.size(); ++i) {
      auto& data = epochs.windows[i].data;
      data.resize(d);
      std::memcpy(data.data(), blob.data() + head + i * d * sizeof(double), d * sizeof(double));
    }
    return epochs;
  }
  if (format != "csv") throw ParseError(fmt::format("unknown epoch format '{}'", format));

  struct Cursor {
    std::ifstream in;
    std::string source;
    std::size_t line = 0;
  };
  std::map<std::string, Cursor> cursors;
  std::string text;
  for (auto& w : epochs.windows) {
    auto it = cursors.find(w.subject);
    if (it == cursors.end()) {
      const auto path = dir / subject_file(w.subject);
      it = cursors.emplace(w.subject, Cursor{open_in(path), path.string(), 0}).first;
      if (!next_line(it->second.in, text, it->second.line)) throw ParseError(fmt::format("{}: empty", path.string()));
    }
    auto& cur = it->second;
    if (!next_line(cur.in, text, cur.line)) fail(cur.source, cur.line, "fewer rows than index.json lists");
    const auto fields = split_csv(text);
    if (fields.size() != d + 3) fail(cur.source, cur.line, fmt::format("expected {} fields, found {}", d + 3, fields.size()));
    if (fields[0] != w.trial_id || parse_int(fields[1], cur.source, cur.line, "window") != w.window_index) {
      fail(cur.source, cur.line, "row does not match index.json");
    }
    w.data.resize(d);
    for (std::size_t i = 0; i < d; ++i) w.data[i] = parse_double(fields[i + 3], cur.source, cur.line, "sample");
  }
  return epochs;
}

std::string sha256_file(const fs::path& path) {
  const auto data = read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace calib::io
