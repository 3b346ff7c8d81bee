#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "calib/core.hpp"

namespace calib {

enum class BinningKind { fixed_width, per_class_fixed, adaptive, thresholded_adaptive };

std::string_view to_string(BinningKind kind);

struct BinningScheme {
  BinningKind kind = BinningKind::fixed_width;
  int num_bins = 10;
  double threshold = 0.0;

  void check() const;  // throws std::invalid_argument
};

// Aggregates of one fixed-width bin or one adaptive range. For empty bins the
// accuracy and mean confidence are reported as 0.
struct BinStats {
  int bin_index = 0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Per-class bin: `accuracy` is the fraction of records whose label is
// `class_index`, `mean_confidence` the mean of probs[class_index].
struct ClassBinStats {
  int class_index = 0;
  int bin_index = 0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// A scalar score and whether it counts as a hit.
struct ScoredOutcome {
  double value = 0.0;
  bool hit = false;
};

// Top-label confidences into B equal-width bins ((b-1)/B, b/B]; bin 1 also
// holds exact 0.
std::vector<BinStats> bin_fixed(const PredictionSet& set, int bins);
std::vector<BinStats> bin_fixed(std::span<const ScoredOutcome> values, int bins);

// Every record's probs[k] into the fixed-width bins of class k. Output is
// ordered class-major: entry k * B + b.
std::vector<ClassBinStats> bin_per_class(const PredictionSet& set, int bins);

// Equal-mass ranges over values sorted by score (stable, so ties keep input
// order). Range sizes differ by at most one; the first N mod R ranges get the
// extra element. Edges are the min/max score inside each range.
std::vector<BinStats> bin_adaptive(std::span<const ScoredOutcome> values, int ranges);

// Drops entries with value < threshold, then bins adaptively.
std::vector<BinStats> bin_thresholded(std::span<const ScoredOutcome> values, int ranges, double threshold);

// (probs[k], label == k) for every record.
std::vector<ScoredOutcome> class_outcomes(const PredictionSet& set, int k);
// (confidence, correct) for every record.
std::vector<ScoredOutcome> top_label_outcomes(const PredictionSet& set);

}  // namespace calib
