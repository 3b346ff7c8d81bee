#include "calib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace calib {

std::string_view to_string(AceVariant v) { return v == AceVariant::standard ? "standard" : "as_printed"; }
std::string_view to_string(Averaging v) { return v == Averaging::macro ? "macro" : "micro"; }
std::string_view to_string(Pooling v) { return v == Pooling::pooled ? "pooled" : "per_fold"; }

std::optional<AceVariant> parse_ace_variant(std::string_view text) {
  if (text == "standard") return AceVariant::standard;
  if (text == "as_printed") return AceVariant::as_printed;
  return std::nullopt;
}

std::optional<Averaging> parse_averaging(std::string_view text) {
  if (text == "macro") return Averaging::macro;
  if (text == "micro") return Averaging::micro;
  return std::nullopt;
}

std::optional<Pooling> parse_pooling(std::string_view text) {
  if (text == "pooled") return Pooling::pooled;
  if (text == "per_fold") return Pooling::per_fold;
  return std::nullopt;
}

namespace {

void require_total(std::span<const BinStats> bins, std::size_t n) {
  if (n == 0) throw std::invalid_argument("calibration error needs N > 0");
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  if (total != n) throw std::invalid_argument(fmt::format("bin counts sum to {}, expected N = {}", total, n));
}

}  // namespace

double ece(std::span<const BinStats> bins, std::size_t n) {
  require_total(bins, n);
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.accuracy - b.mean_confidence);
  }
  return total;
}

double mce(std::span<const BinStats> bins) {
  bool any = false;
  double worst = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    any = true;
    worst = std::max(worst, std::abs(b.accuracy - b.mean_confidence));
  }
  if (!any) throw std::invalid_argument("MCE needs at least one non-empty bin");
  return worst;
}

double oe(std::span<const BinStats> bins, std::size_t n) {
  require_total(bins, n);
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) * b.mean_confidence *
             std::max(b.mean_confidence - b.accuracy, 0.0);
  }
  return total;
}

std::vector<double> sce_terms(std::span<const ClassBinStats> class_bins, std::size_t n, int classes) {
  if (n == 0) throw std::invalid_argument("SCE needs N > 0");
  std::vector<double> terms(static_cast<std::size_t>(classes), 0.0);
  for (const auto& b : class_bins) {
    if (b.count == 0) continue;
    terms[static_cast<std::size_t>(b.class_index)] +=
        static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.accuracy - b.mean_confidence);
  }
  return terms;
}

double sce(std::span<const ClassBinStats> class_bins, std::size_t n, int classes) {
  const auto terms = sce_terms(class_bins, n, classes);
  double total = 0.0;
  for (double t : terms) total += t;
  return total / classes;
}

std::vector<double> ace_terms(const PredictionSet& set, int ranges, AceVariant variant, double threshold) {
  const std::size_t n = set.size();
  std::vector<double> terms(static_cast<std::size_t>(set.num_classes), 0.0);
  for (int k = 0; k < set.num_classes; ++k) {
    const auto values = class_outcomes(set, k);
    const auto bins = threshold > 0.0 ? bin_thresholded(values, ranges, threshold) : bin_adaptive(values, ranges);
    double sum = 0.0;
    for (const auto& b : bins) {
      double gap = std::abs(b.accuracy - b.mean_confidence);
      if (variant == AceVariant::as_printed) gap *= static_cast<double>(b.count) / static_cast<double>(n);
      sum += gap;
    }
    terms[static_cast<std::size_t>(k)] = sum;
  }
  return terms;
}

double ace(const PredictionSet& set, int ranges, AceVariant variant) {
  const auto terms = ace_terms(set, ranges, variant, 0.0);
  double total = 0.0;
  for (double t : terms) total += t;
  return total / (static_cast<double>(set.num_classes) * ranges);
}

double tace(const PredictionSet& set, int ranges, double threshold, AceVariant variant) {
  const auto terms = ace_terms(set, ranges, variant, threshold);
  double total = 0.0;
  for (double t : terms) total += t;
  return total / (static_cast<double>(set.num_classes) * ranges);
}

std::vector<std::vector<std::size_t>> confusion_matrix(const PredictionSet& set) {
  const auto k = static_cast<std::size_t>(set.num_classes);
  std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k, 0));
  for (const auto& r : set.records) {
    cm[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(argmax(r.probs))]++;
  }
  return cm;
}

ClassificationMetrics classification_metrics(const PredictionSet& set, Averaging averaging) {
  if (set.empty()) throw std::invalid_argument("classification metrics need a non-empty set");
  const auto cm = confusion_matrix(set);
  const std::size_t k = cm.size();
  const auto n = static_cast<double>(set.size());

  std::vector<double> row_sum(k, 0.0), col_sum(k, 0.0);
  double diag = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_sum[i] += static_cast<double>(cm[i][j]);
      col_sum[j] += static_cast<double>(cm[i][j]);
    }
    diag += static_cast<double>(cm[i][i]);
  }

  ClassificationMetrics m;
  m.accuracy = diag / n;
  if (averaging == Averaging::micro) {
    // Single-label: micro precision = micro recall = accuracy.
    m.precision = m.recall = m.f1 = m.accuracy;
  } else {
    double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double tp = static_cast<double>(cm[c][c]);
      if (row_sum[c] == 0.0 && col_sum[c] == 0.0) {
        m.warnings.push_back(fmt::format("class {} absent from labels and predictions; scored 0", c));
        continue;
      }
      const double p = col_sum[c] > 0.0 ? tp / col_sum[c] : 0.0;
      const double r = row_sum[c] > 0.0 ? tp / row_sum[c] : 0.0;
      p_sum += p;
      r_sum += r;
      f_sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    m.precision = p_sum / static_cast<double>(k);
    m.recall = r_sum / static_cast<double>(k);
    m.f1 = f_sum / static_cast<double>(k);
  }

  double pe = 0.0;
  for (std::size_t c = 0; c < k; ++c) pe += (row_sum[c] / n) * (col_sum[c] / n);
  const double po = m.accuracy;
  if (pe >= 1.0) {
    m.kappa = po >= 1.0 ? 1.0 : 0.0;
  } else {
    m.kappa = (po - pe) / (1.0 - pe);
  }
  return m;
}

namespace {

MetricReport evaluate_pooled(const PredictionSet& set, const MetricConfig& config) {
  if (set.empty()) throw std::invalid_argument("cannot evaluate an empty prediction set");
  MetricReport r;
  r.n = set.size();
  r.config = config;

  const auto bins = bin_fixed(set, config.fixed_bins);
  r.ece = ece(bins, r.n);
  r.mce = mce(bins);
  r.oe = oe(bins, r.n);
  const auto class_bins = bin_per_class(set, config.fixed_bins);
  r.sce = sce(class_bins, r.n, set.num_classes);

  try {
    r.ace = ace(set, config.adaptive_ranges, config.ace_variant);
  } catch (const std::invalid_argument& e) {
    r.warnings.push_back(fmt::format("ACE not computed: {}", e.what()));
  }
  try {
    r.tace = tace(set, config.adaptive_ranges, config.tace_threshold, config.ace_variant);
  } catch (const std::invalid_argument& e) {
    r.warnings.push_back(fmt::format("TACE not computed: {}", e.what()));
  }

  auto cls = classification_metrics(set, config.averaging);
  r.accuracy = cls.accuracy;
  r.precision = cls.precision;
  r.recall = cls.recall;
  r.f1 = cls.f1;
  r.kappa = cls.kappa;
  for (auto& w : cls.warnings) r.warnings.push_back(std::move(w));
  return r;
}

}  // namespace

MetricReport evaluate(const PredictionSet& set, const MetricConfig& config) {
  if (config.pooling == Pooling::pooled) return evaluate_pooled(set, config);

  const auto folds = fold_ids(set);
  if (folds.empty()) throw std::invalid_argument("cannot evaluate an empty prediction set");
  std::vector<MetricReport> parts;
  parts.reserve(folds.size());
  for (int f : folds) {
    const auto subset = filter(set, [f](const PredictionRecord& rec) { return rec.fold_id == f; });
    parts.push_back(evaluate_pooled(subset, config));
  }

  MetricReport out;
  out.n = set.size();
  out.config = config;
  const auto m = static_cast<double>(parts.size());
  double ace_sum = 0.0, tace_sum = 0.0;
  std::size_t ace_n = 0, tace_n = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    out.ece += p.ece / m;
    out.mce += p.mce / m;
    out.oe += p.oe / m;
    out.sce += p.sce / m;
    out.accuracy += p.accuracy / m;
    out.precision += p.precision / m;
    out.recall += p.recall / m;
    out.f1 += p.f1 / m;
    out.kappa += p.kappa / m;
    if (p.ace) {
      ace_sum += *p.ace;
      ++ace_n;
    }
    if (p.tace) {
      tace_sum += *p.tace;
      ++tace_n;
    }
    for (const auto& w : p.warnings) out.warnings.push_back(fmt::format("fold {}: {}", folds[i], w));
  }
  if (ace_n == parts.size()) out.ace = ace_sum / m;
  if (tace_n == parts.size()) out.tace = tace_sum / m;
  return out;
}

}  // namespace calib
