#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace calib {

enum class Split { train, validation, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// One labeled prediction. `probs` always holds a distribution over the K
// classes; `logits`, when present, is the pre-softmax vector it came from.
struct PredictionRecord {
  std::vector<double> probs;
  std::optional<std::vector<double>> logits;
  int label = 0;
  std::string subject_id;
  int fold_id = 0;
  Split split = Split::test;
  std::string trial_id;
};

// Records in file order plus the shared class count K.
struct PredictionSet {
  std::vector<PredictionRecord> records;
  int num_classes = 2;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool has_logits() const;
  bool has_split(Split split) const;
};

struct Derived {
  int predicted_label = 0;
  double confidence = 0.0;
  bool correct = false;
};

struct Violation {
  std::size_t row = 0;  // record index; npos for set-level rules
  std::string rule;
};

using ValidationReport = std::vector<Violation>;

inline constexpr double kProbSumTolerance = 1e-9;
inline constexpr double kLogitAgreementTolerance = 1e-6;

// Checks every record invariant; never throws.
ValidationReport validate(const PredictionSet& set);

// Argmax with ties broken toward the lowest class index.
int argmax(std::span<const double> values);
Derived derive(const PredictionRecord& record);
std::vector<Derived> derive_all(const PredictionSet& set);

// Numerically stable softmax of logits / temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
double log_sum_exp(std::span<const double> values);

// Divides every probability vector by its sum, or recomputes it from the
// logits when present. Applied after validation to remove float drift before
// binning, and makes temperature 1 reproduce the input probabilities exactly.
PredictionSet renormalized(PredictionSet set);

// Subset of records satisfying a predicate, K preserved.
template <class Pred>
PredictionSet filter(const PredictionSet& set, Pred pred) {
  PredictionSet out;
  out.num_classes = set.num_classes;
  for (const auto& r : set.records) {
    if (pred(r)) out.records.push_back(r);
  }
  return out;
}

PredictionSet select_split(const PredictionSet& set, Split split);

// Distinct fold ids in ascending order.
std::vector<int> fold_ids(const PredictionSet& set);

}  // namespace calib
