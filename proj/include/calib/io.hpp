#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calib/calibrate.hpp"
#include "calib/core.hpp"
#include "calib/pipeline.hpp"
#include "calib/signal.hpp"

namespace calib::io {

namespace fs = std::filesystem;

// Prediction CSV: subject,trial,fold,split,label then logit_0..logit_{K-1}
// (probabilities derived by softmax) or prob_0..prob_{K-1}. K comes from the
// header. Throws ParseError naming the offending line.
PredictionSet read_predictions(std::istream& in, std::string_view source = "<stream>");
PredictionSet read_predictions(const fs::path& path);
// Logit columns when every record has logits, probability columns otherwise.
void write_predictions(std::ostream& out, const PredictionSet& set);
std::string predictions_csv(const PredictionSet& set);

// Metrics table: model,accuracy,<metric>... Accuracies may be fractions or
// percentages as long as the column is consistent.
struct MetricsTable {
  std::vector<std::string> metrics;
  std::vector<ModelRow> rows;
};
MetricsTable read_metrics_table(std::istream& in, std::string_view source = "<stream>");
MetricsTable read_metrics_table(const fs::path& path);

// Recording CSV: time column then one column per channel named as
// ChannelInfo::name(). fs and t0 are taken from the time column.
SignalRecording read_recording_csv(const fs::path& path);
void write_recording_csv(const fs::path& path, const SignalRecording& rec);

struct Manifest {
  std::vector<SignalRecording> recordings;
  double task_duration_s = 10.0;
  std::optional<BeerLambertConfig> optics;
  nlohmann::json pipeline;  // overrides for the custom profile, may be null
};
// JSON manifest; data paths resolve relative to the manifest's directory.
Manifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<std::string>& data_files,
                    const std::vector<SignalRecording>& recordings, double task_duration_s,
                    const std::optional<BeerLambertConfig>& optics);
// Applies manifest "pipeline" keys on top of a profile; throws ConfigError on
// unknown keys or bad values.
PipelineSpec apply_pipeline_overrides(PipelineSpec spec, const nlohmann::json& overrides);

// EpochSet as per-subject CSVs (one row per window: trial, window, label,
// then channel-major samples) plus index.json, or one packed binary file
// epochs.bin plus index.json.
enum class EpochFormat { csv, binary };
void write_epochs(const fs::path& dir, const EpochSet& epochs, EpochFormat format);
EpochSet read_epochs(const fs::path& dir);

inline constexpr char kEpochMagic[8] = {'C', 'K', 'E', 'P', 'O', 'C', 'H', '1'};

std::string sha256_file(const fs::path& path);

// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const fs::path& path, std::string_view contents);
std::string read_file(const fs::path& path);

// Two-space indented JSON with a trailing newline; keys are sorted so equal values
// give equal bytes.
std::string dump_json(const nlohmann::json& j);

}  // namespace calib::io
