#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calib/binning.hpp"
#include "calib/core.hpp"

namespace calib {

// `standard` weights every (class, range) term by 1/(K R). `as_printed`
// additionally multiplies each term by n_rk / N.
enum class AceVariant { standard, as_printed };
enum class Averaging { macro, micro };
// Pooled: one metric over all records. PerFold: unweighted mean of per-fold values.
enum class Pooling { pooled, per_fold };

std::string_view to_string(AceVariant v);
std::string_view to_string(Averaging v);
std::string_view to_string(Pooling v);
std::optional<AceVariant> parse_ace_variant(std::string_view text);
std::optional<Averaging> parse_averaging(std::string_view text);
std::optional<Pooling> parse_pooling(std::string_view text);

struct MetricConfig {
  int fixed_bins = 10;
  int adaptive_ranges = 10;
  double tace_threshold = 0.01;
  AceVariant ace_variant = AceVariant::standard;
  Averaging averaging = Averaging::macro;
  Pooling pooling = Pooling::pooled;

  bool operator==(const MetricConfig&) const = default;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  std::vector<std::string> warnings;
};

// All calibration values are fractions; accuracy etc. are fractions too and
// only rendered as percentages for display. ACE/TACE are empty when a class
// has fewer admissible predictions than ranges.
struct MetricReport {
  std::size_t n = 0;
  double ece = 0.0;
  double mce = 0.0;
  double oe = 0.0;
  double sce = 0.0;
  std::optional<double> ace;
  std::optional<double> tace;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  MetricConfig config;
  std::vector<std::string> warnings;

  bool operator==(const MetricReport&) const = default;
};

double ece(std::span<const BinStats> bins, std::size_t n);
double mce(std::span<const BinStats> bins);
double oe(std::span<const BinStats> bins, std::size_t n);

// One calibration term per class: sum_b (n_bk / N) |acc(b,k) - conf(b,k)|.
std::vector<double> sce_terms(std::span<const ClassBinStats> class_bins, std::size_t n, int classes);
double sce(std::span<const ClassBinStats> class_bins, std::size_t n, int classes);

// Per-class sum over ranges, before the 1/(K R) factor.
std::vector<double> ace_terms(const PredictionSet& set, int ranges, AceVariant variant = AceVariant::standard,
                              double threshold = 0.0);
double ace(const PredictionSet& set, int ranges, AceVariant variant = AceVariant::standard);
double tace(const PredictionSet& set, int ranges, double threshold = 0.01,
            AceVariant variant = AceVariant::standard);

ClassificationMetrics classification_metrics(const PredictionSet& set, Averaging averaging = Averaging::macro);

// Row = true label, column = predicted label.
std::vector<std::vector<std::size_t>> confusion_matrix(const PredictionSet& set);

MetricReport evaluate(const PredictionSet& set, const MetricConfig& config = {});

}  // namespace calib
