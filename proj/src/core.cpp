#include "calib/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace calib {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "test";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation" || text == "val") return Split::validation;
  if (text == "test") return Split::test;
  return std::nullopt;
}

bool PredictionSet::has_logits() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const auto& r) { return r.logits.has_value(); });
}

bool PredictionSet::has_split(Split split) const {
  return std::any_of(records.begin(), records.end(), [split](const auto& r) { return r.split == split; });
}

double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  double top = logits[0] / temperature;
  for (std::size_t i = 1; i < logits.size(); ++i) top = std::max(top, logits[i] / temperature);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / temperature - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Derived derive(const PredictionRecord& record) {
  Derived d;
  d.predicted_label = argmax(record.probs);
  d.confidence = record.probs[static_cast<std::size_t>(d.predicted_label)];
  d.correct = d.predicted_label == record.label;
  return d;
}

std::vector<Derived> derive_all(const PredictionSet& set) {
  std::vector<Derived> out;
  out.reserve(set.size());
  for (const auto& r : set.records) out.push_back(derive(r));
  return out;
}

ValidationReport validate(const PredictionSet& set) {
  ValidationReport report;
  constexpr auto kSetLevel = static_cast<std::size_t>(-1);
  if (set.num_classes < 2) {
    report.push_back({kSetLevel, fmt::format("num_classes {} < 2", set.num_classes)});
  }
  if (set.records.empty()) {
    report.push_back({kSetLevel, "prediction set is empty"});
    return report;
  }
  const auto k = static_cast<std::size_t>(std::max(set.num_classes, 0));
  for (std::size_t row = 0; row < set.records.size(); ++row) {
    const auto& r = set.records[row];
    if (r.probs.size() != k) {
      report.push_back({row, fmt::format("probs has {} entries, expected K = {}", r.probs.size(), k)});
      continue;
    }
    double sum = 0.0;
    bool in_range = true;
    for (double p : r.probs) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) in_range = false;
      sum += p;
    }
    if (!in_range) report.push_back({row, "probability outside [0, 1]"});
    if (!(std::abs(sum - 1.0) <= kProbSumTolerance)) {
      report.push_back({row, fmt::format("probs sum {:.12g} != 1", sum)});
    }
    if (r.label < 0 || r.label >= set.num_classes) {
      report.push_back({row, fmt::format("label {} out of range [0, {})", r.label, set.num_classes)});
    }
    if (r.logits) {
      if (r.logits->size() != k) {
        report.push_back({row, fmt::format("logits has {} entries, expected K = {}", r.logits->size(), k)});
      } else if (!std::all_of(r.logits->begin(), r.logits->end(), [](double z) { return std::isfinite(z); })) {
        report.push_back({row, "non-finite logit"});
      } else {
        const auto sm = softmax(*r.logits);
        for (std::size_t c = 0; c < k; ++c) {
          if (std::abs(sm[c] - r.probs[c]) > kLogitAgreementTolerance) {
            report.push_back({row, "softmax(logits) disagrees with probs"});
            break;
          }
        }
      }
    }
  }
  return report;
}

PredictionSet renormalized(PredictionSet set) {
  for (auto& r : set.records) {
    if (r.logits) {
      r.probs = softmax(*r.logits);
      continue;
    }
    double sum = 0.0;
    for (double p : r.probs) sum += p;
    if (sum > 0.0) {
      for (double& p : r.probs) p /= sum;
    }
  }
  return set;
}

PredictionSet select_split(const PredictionSet& set, Split split) {
  return filter(set, [split](const PredictionRecord& r) { return r.split == split; });
}

std::vector<int> fold_ids(const PredictionSet& set) {
  std::set<int> ids;
  for (const auto& r : set.records) ids.insert(r.fold_id);
  return {ids.begin(), ids.end()};
}

}  // namespace calib
