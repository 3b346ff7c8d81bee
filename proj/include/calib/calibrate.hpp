#pragma once

#include <map>
#include <string>
#include <vector>

#include "calib/core.hpp"

namespace calib {

struct Temperature {
  double t = 1.0;
  double fit_nll = 0.0;
  double t_min = 0.05;
  double t_max = 10.0;
  std::string warning;  // non-empty when the fit fell back to t = 1
};

struct TemperatureSearch {
  double t_min = 0.05;
  double t_max = 10.0;
  double tolerance = 1e-4;
};

// Mean negative log-likelihood of softmax(logits / t) against the labels.
double mean_nll(const PredictionSet& set, double t);

// Golden-section search for the NLL-minimizing temperature. The objective is
// unimodal in t; the bracket ends and t = 1 are also checked so the result
// never scores worse than no scaling. Throws MissingSplitError without logits.
Temperature fit_temperature(const PredictionSet& validation, const TemperatureSearch& search = {});

// Replaces probs with softmax(logits / t); logits are kept.
PredictionSet apply_temperature(const PredictionSet& set, const Temperature& temperature);

// One temperature per fold id, fitted on that fold's validation records.
std::map<int, Temperature> fit_temperature_per_fold(const PredictionSet& set, const TemperatureSearch& search = {});
PredictionSet apply_temperature_per_fold(const PredictionSet& set, const std::map<int, Temperature>& temps);

struct BalanceInput {
  double acc = 0.0;
  double acc_baseline = 1.0;
  double cal = 0.0;
  double cal_baseline = 0.0;
  double alpha = 0.6;
};

// (1 - alpha) acc / acc_baseline + alpha exp(cal_baseline - cal)
double balance_score(const BalanceInput& input);

struct ModelRow {
  std::string name;
  double accuracy = 0.0;
  std::vector<double> calibration;  // one value per metric column
};

struct BalanceTable {
  std::vector<std::string> metrics;
  double alpha = 0.6;
  double acc_baseline = 0.0;
  std::vector<double> cal_baselines;  // per metric
  std::vector<std::string> models;
  std::vector<std::vector<double>> scores;  // [model][metric], full precision
};

// Accuracy baseline is the best accuracy among the rows; each metric's
// calibration baseline is that column's minimum.
BalanceTable balance_table(const std::vector<ModelRow>& rows, const std::vector<std::string>& metrics, double alpha);

}  // namespace calib
