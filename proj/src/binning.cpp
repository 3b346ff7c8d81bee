#include "calib/binning.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/kernels.hpp"

namespace calib {

std::string_view to_string(BinningKind kind) {
  switch (kind) {
    case BinningKind::fixed_width:
      return "fixed_width";
    case BinningKind::per_class_fixed:
      return "per_class_fixed";
    case BinningKind::adaptive:
      return "adaptive";
    case BinningKind::thresholded_adaptive:
      return "thresholded_adaptive";
  }
  return "fixed_width";
}

void BinningScheme::check() const {
  if (num_bins < 1) throw std::invalid_argument(fmt::format("num_bins must be >= 1, got {}", num_bins));
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument(fmt::format("threshold must lie in [0, 1), got {}", threshold));
  }
}

namespace {

void require_bins(int bins) {
  if (bins < 1) throw std::invalid_argument(fmt::format("bin count must be >= 1, got {}", bins));
}

std::vector<BinStats> finish_fixed(const std::vector<kernels::BinAccum>& acc, int bins) {
  std::vector<BinStats> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    const auto& a = acc[static_cast<std::size_t>(b)];
    auto& s = out[static_cast<std::size_t>(b)];
    s.bin_index = b;
    s.count = a.count;
    s.lower = static_cast<double>(b) / bins;
    s.upper = static_cast<double>(b + 1) / bins;
    if (a.count > 0) {
      s.mean_confidence = a.sum_value / static_cast<double>(a.count);
      s.accuracy = a.sum_outcome / static_cast<double>(a.count);
    }
  }
  return out;
}

}  // namespace

std::vector<ScoredOutcome> top_label_outcomes(const PredictionSet& set) {
  std::vector<ScoredOutcome> out;
  out.reserve(set.size());
  for (const auto& r : set.records) {
    const Derived d = derive(r);
    out.push_back({d.confidence, d.correct});
  }
  return out;
}

std::vector<ScoredOutcome> class_outcomes(const PredictionSet& set, int k) {
  std::vector<ScoredOutcome> out;
  out.reserve(set.size());
  for (const auto& r : set.records) out.push_back({r.probs[static_cast<std::size_t>(k)], r.label == k});
  return out;
}

std::vector<BinStats> bin_fixed(std::span<const ScoredOutcome> values, int bins) {
  require_bins(bins);
  std::vector<double> conf(values.size());
  std::vector<std::uint8_t> hits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    conf[i] = values[i].value;
    hits[i] = values[i].hit ? 1 : 0;
  }
  return finish_fixed(kernels::omp::accumulate_fixed(conf, hits, static_cast<std::size_t>(bins)), bins);
}

std::vector<BinStats> bin_fixed(const PredictionSet& set, int bins) {
  const auto values = top_label_outcomes(set);
  return bin_fixed(values, bins);
}

std::vector<ClassBinStats> bin_per_class(const PredictionSet& set, int bins) {
  require_bins(bins);
  const auto k = static_cast<std::size_t>(set.num_classes);
  std::vector<double> probs;
  probs.reserve(set.size() * k);
  std::vector<int> labels;
  labels.reserve(set.size());
  for (const auto& r : set.records) {
    probs.insert(probs.end(), r.probs.begin(), r.probs.end());
    labels.push_back(r.label);
  }
  const auto acc = kernels::omp::accumulate_per_class(probs, labels, k, static_cast<std::size_t>(bins));
  std::vector<ClassBinStats> out;
  out.reserve(acc.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (int b = 0; b < bins; ++b) {
      const auto& a = acc[c * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b)];
      ClassBinStats s;
      s.class_index = static_cast<int>(c);
      s.bin_index = b;
      s.count = a.count;
      s.lower = static_cast<double>(b) / bins;
      s.upper = static_cast<double>(b + 1) / bins;
      if (a.count > 0) {
        s.mean_confidence = a.sum_value / static_cast<double>(a.count);
        s.accuracy = a.sum_outcome / static_cast<double>(a.count);
      }
      out.push_back(s);
    }
  }
  return out;
}

std::vector<BinStats> bin_adaptive(std::span<const ScoredOutcome> values, int ranges) {
  require_bins(ranges);
  if (values.empty()) throw std::invalid_argument("adaptive binning needs at least one value");
  const std::size_t n = values.size();
  const auto r = static_cast<std::size_t>(ranges);
  if (r > n) {
    throw std::invalid_argument(fmt::format("cannot split {} values into {} non-empty ranges", n, r));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a].value < values[b].value; });

  const std::size_t base = n / r, extra = n % r;
  std::vector<BinStats> out;
  out.reserve(r);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    BinStats s;
    s.bin_index = static_cast<int>(i);
    s.count = size;
    double sum_value = 0.0, sum_hit = 0.0;
    for (std::size_t j = pos; j < pos + size; ++j) {
      sum_value += values[order[j]].value;
      sum_hit += values[order[j]].hit ? 1.0 : 0.0;
    }
    s.lower = values[order[pos]].value;
    s.upper = values[order[pos + size - 1]].value;
    s.mean_confidence = sum_value / static_cast<double>(size);
    s.accuracy = sum_hit / static_cast<double>(size);
    out.push_back(s);
    pos += size;
  }
  return out;
}

std::vector<BinStats> bin_thresholded(std::span<const ScoredOutcome> values, int ranges, double threshold) {
  std::vector<ScoredOutcome> kept;
  kept.reserve(values.size());
  std::copy_if(values.begin(), values.end(), std::back_inserter(kept),
               [threshold](const ScoredOutcome& v) { return v.value >= threshold; });
  if (ranges >= 1 && kept.size() < static_cast<std::size_t>(ranges)) {
    throw std::invalid_argument(fmt::format("insufficient predictions after threshold: {} survive {}, need {}",
                                            kept.size(), threshold, ranges));
  }
  return bin_adaptive(kept, ranges);
}

}  // namespace calib
