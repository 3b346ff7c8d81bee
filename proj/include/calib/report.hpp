#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calib/binning.hpp"
#include "calib/calibrate.hpp"
#include "calib/metrics.hpp"
#include "calib/refmodel.hpp"

namespace calib {

inline constexpr std::string_view kToolVersion = "calibkit 1.0.0";
inline constexpr std::string_view kReportSchema = "calibkit.evaluation/1";

struct DiagramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double gap = 0.0;  // mean_confidence - accuracy

  bool operator==(const DiagramBin&) const = default;
};

struct ReliabilityDiagram {
  std::vector<DiagramBin> bins;
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double ece = 0.0;
  int num_bins = 10;

  bool operator==(const ReliabilityDiagram&) const = default;
};

ReliabilityDiagram make_diagram(const PredictionSet& set, int bins = 10);

struct Provenance {
  std::map<std::string, std::string> input_sha256;  // file name -> hex digest
  std::string tool_version = std::string(kToolVersion);
  std::string command;
  std::string split;

  bool operator==(const Provenance&) const = default;
};

struct EvaluationReport {
  std::string model;
  std::string dataset;
  MetricReport metrics;
  ReliabilityDiagram diagram;
  Provenance provenance;

  bool operator==(const EvaluationReport&) const = default;
};

EvaluationReport build_report(const PredictionSet& set, const MetricConfig& config, std::string model,
                              std::string dataset, Provenance provenance);

nlohmann::json to_json(const MetricConfig& config);
nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const ReliabilityDiagram& diagram);
nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const Temperature& t);
nlohmann::json to_json(const BalanceTable& table);
nlohmann::json to_json(const RefModel& model);

MetricConfig metric_config_from_json(const nlohmann::json& j);
MetricReport metric_report_from_json(const nlohmann::json& j);
ReliabilityDiagram diagram_from_json(const nlohmann::json& j);
EvaluationReport report_from_json(const nlohmann::json& j);
RefModel ref_model_from_json(const nlohmann::json& j);

// Structural check of a serialized evaluation report; empty when valid.
std::vector<std::string> check_report_schema(const nlohmann::json& j);

// Deterministic SVG: per-bin accuracy bars against the identity diagonal,
// confidence-gap overlay, empty bins drawn as dashed baseline markers.
std::string render_svg(const ReliabilityDiagram& diagram, std::string_view title = {});

// Two-decimal rendering used for console tables.
std::string display2(double value);

}  // namespace calib
