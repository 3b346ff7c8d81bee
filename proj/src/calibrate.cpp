#include "calib/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/error.hpp"
#include "calib/kernels.hpp"

namespace calib {

namespace {

void require_logits(const PredictionSet& set, const char* what) {
  if (set.empty()) throw MissingSplitError(fmt::format("{}: no records", what));
  if (!set.has_logits()) throw MissingSplitError(fmt::format("{}: every record needs logits", what));
}

// NLL is independent of t when every logit vector is constant.
bool flat_objective(const PredictionSet& set) {
  for (const auto& r : set.records) {
    const auto& z = *r.logits;
    if (std::any_of(z.begin(), z.end(), [&](double v) { return v != z.front(); })) return false;
  }
  return true;
}

}  // namespace

double mean_nll(const PredictionSet& set, double t) {
  require_logits(set, "mean_nll");
  double total = 0.0;
  std::vector<double> scaled;
  for (const auto& r : set.records) {
    const auto& z = *r.logits;
    scaled.resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) scaled[k] = z[k] / t;
    total += log_sum_exp(scaled) - scaled[static_cast<std::size_t>(r.label)];
  }
  return total / static_cast<double>(set.size());
}

Temperature fit_temperature(const PredictionSet& validation, const TemperatureSearch& search) {
  require_logits(validation, "fit_temperature");
  if (!(search.t_min > 0.0 && search.t_min < search.t_max)) {
    throw std::invalid_argument("temperature search needs 0 < t_min < t_max");
  }
  Temperature out;
  out.t_min = search.t_min;
  out.t_max = search.t_max;
  if (flat_objective(validation)) {
    out.t = 1.0;
    out.fit_nll = mean_nll(validation, 1.0);
    out.warning = "flat objective (every logit vector is constant); using t = 1";
    return out;
  }

  const auto f = [&](double t) { return mean_nll(validation, t); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = search.t_min, b = search.t_max;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > search.tolerance) {
    if (fc <= fd) {  // ties keep the smaller-t side
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }

  double best_t = 0.5 * (a + b);
  double best = f(best_t);
  for (double cand : {search.t_min, search.t_max, 1.0}) {
    if (cand < search.t_min || cand > search.t_max) continue;
    const double v = f(cand);
    if (v < best || (v == best && cand < best_t)) {
      best = v;
      best_t = cand;
    }
  }
  out.t = best_t;
  out.fit_nll = best;
  return out;
}

PredictionSet apply_temperature(const PredictionSet& set, const Temperature& temperature) {
  if (!(temperature.t > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (set.empty()) return set;
  require_logits(set, "apply_temperature");
  const auto k = static_cast<std::size_t>(set.num_classes);
  std::vector<double> logits;
  logits.reserve(set.size() * k);
  for (const auto& r : set.records) logits.insert(logits.end(), r.logits->begin(), r.logits->end());
  const auto probs = kernels::omp::softmax_rows(logits, k, temperature.t);
  PredictionSet out = set;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& p = out.records[i].probs;
    p.assign(probs.begin() + static_cast<std::ptrdiff_t>(i * k), probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
  }
  return out;
}

std::map<int, Temperature> fit_temperature_per_fold(const PredictionSet& set, const TemperatureSearch& search) {
  std::map<int, Temperature> out;
  for (int f : fold_ids(set)) {
    const auto val = filter(set, [f](const PredictionRecord& r) { return r.fold_id == f && r.split == Split::validation; });
    if (val.empty()) throw MissingSplitError(fmt::format("fold {} has no validation records", f));
    out.emplace(f, fit_temperature(val, search));
  }
  return out;
}

PredictionSet apply_temperature_per_fold(const PredictionSet& set, const std::map<int, Temperature>& temps) {
  PredictionSet out;
  out.num_classes = set.num_classes;
  out.records.reserve(set.size());
  for (const auto& r : set.records) {
    const auto it = temps.find(r.fold_id);
    if (it == temps.end()) throw MissingSplitError(fmt::format("no temperature for fold {}", r.fold_id));
    PredictionRecord copy = r;
    if (!copy.logits) throw MissingSplitError("apply_temperature: every record needs logits");
    copy.probs = softmax(*copy.logits, it->second.t);
    out.records.push_back(std::move(copy));
  }
  return out;
}

double balance_score(const BalanceInput& in) {
  if (!(in.acc_baseline > 0.0)) throw std::invalid_argument("balance score needs acc_baseline > 0");
  if (!(in.alpha >= 0.0 && in.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  return (1.0 - in.alpha) * in.acc / in.acc_baseline + in.alpha * std::exp(in.cal_baseline - in.cal);
}

BalanceTable balance_table(const std::vector<ModelRow>& rows, const std::vector<std::string>& metrics, double alpha) {
  if (rows.empty()) throw std::invalid_argument("balance table needs at least one model");
  BalanceTable table;
  table.metrics = metrics;
  table.alpha = alpha;
  table.acc_baseline = -std::numeric_limits<double>::infinity();
  table.cal_baselines.assign(metrics.size(), std::numeric_limits<double>::infinity());
  for (const auto& row : rows) {
    if (row.calibration.size() != metrics.size()) {
      throw std::invalid_argument(fmt::format("model {} has {} metric values, expected {}", row.name,
                                              row.calibration.size(), metrics.size()));
    }
    table.acc_baseline = std::max(table.acc_baseline, row.accuracy);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      table.cal_baselines[m] = std::min(table.cal_baselines[m], row.calibration[m]);
    }
  }
  for (const auto& row : rows) {
    table.models.push_back(row.name);
    auto& scores = table.scores.emplace_back();
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      scores.push_back(balance_score({row.accuracy, table.acc_baseline, row.calibration[m], table.cal_baselines[m], alpha}));
    }
  }
  return table;
}

}  // namespace calib
