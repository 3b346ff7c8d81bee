#pragma once

// Brute-force metric definitions written without the library's binning code.
// Each bin is found by testing every record against its edges.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "calib/core.hpp"

namespace oracle {

struct Top {
  double conf;
  bool correct;
};

inline std::vector<Top> top_label(const calib::PredictionSet& set) {
  std::vector<Top> out;
  for (const auto& r : set.records) {
    int best = 0;
    for (int c = 1; c < set.num_classes; ++c) {
      if (r.probs[static_cast<std::size_t>(c)] > r.probs[static_cast<std::size_t>(best)]) best = c;
    }
    out.push_back({r.probs[static_cast<std::size_t>(best)], best == r.label});
  }
  return out;
}

inline bool in_bin(double v, int b, int bins) {
  const double lo = static_cast<double>(b - 1) / static_cast<double>(bins);
  const double hi = static_cast<double>(b) / static_cast<double>(bins);
  if (b == 1 && v == 0.0) return true;
  return v > lo && v <= hi;
}

struct Gap {
  double weight;  // n_b / N
  double acc;
  double conf;
};

inline std::vector<Gap> top_bins(const calib::PredictionSet& set, int bins) {
  const auto tops = top_label(set);
  std::vector<Gap> out;
  for (int b = 1; b <= bins; ++b) {
    double n = 0, hits = 0, conf = 0;
    for (const auto& t : tops) {
      if (!in_bin(t.conf, b, bins)) continue;
      n += 1;
      hits += t.correct ? 1 : 0;
      conf += t.conf;
    }
    if (n > 0) out.push_back({n / static_cast<double>(tops.size()), hits / n, conf / n});
  }
  return out;
}

inline double ece(const calib::PredictionSet& set, int bins) {
  double s = 0;
  for (const auto& g : top_bins(set, bins)) s += g.weight * std::abs(g.acc - g.conf);
  return s;
}

inline double mce(const calib::PredictionSet& set, int bins) {
  double m = 0;
  for (const auto& g : top_bins(set, bins)) m = std::max(m, std::abs(g.acc - g.conf));
  return m;
}

inline double oe(const calib::PredictionSet& set, int bins) {
  double s = 0;
  for (const auto& g : top_bins(set, bins)) s += g.weight * g.conf * std::max(g.conf - g.acc, 0.0);
  return s;
}

inline double sce(const calib::PredictionSet& set, int bins) {
  const auto n = static_cast<double>(set.size());
  double total = 0;
  for (int k = 0; k < set.num_classes; ++k) {
    for (int b = 1; b <= bins; ++b) {
      double count = 0, hits = 0, conf = 0;
      for (const auto& r : set.records) {
        const double p = r.probs[static_cast<std::size_t>(k)];
        if (!in_bin(p, b, bins)) continue;
        count += 1;
        hits += r.label == k ? 1 : 0;
        conf += p;
      }
      if (count > 0) total += count / n * std::abs(hits / count - conf / count);
    }
  }
  return total / set.num_classes;
}

// Equal-mass ranges per class; values below `threshold` are dropped first.
// Empty when some class keeps fewer values than ranges.
inline std::optional<double> adaptive(const calib::PredictionSet& set, int ranges, double threshold, bool as_printed) {
  const auto n_total = static_cast<double>(set.size());
  double total = 0;
  for (int k = 0; k < set.num_classes; ++k) {
    std::vector<std::pair<double, int>> v;
    for (const auto& r : set.records) {
      const double p = r.probs[static_cast<std::size_t>(k)];
      if (p >= threshold) v.emplace_back(p, r.label == k ? 1 : 0);
    }
    if (v.size() < static_cast<std::size_t>(ranges)) return std::nullopt;
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t base = v.size() / ranges, extra = v.size() % ranges;
    std::size_t pos = 0;
    for (int r = 0; r < ranges; ++r) {
      const std::size_t size = base + (static_cast<std::size_t>(r) < extra ? 1 : 0);
      double hits = 0, conf = 0;
      for (std::size_t i = pos; i < pos + size; ++i) {
        hits += v[i].second;
        conf += v[i].first;
      }
      const double term = std::abs(hits / size - conf / size);
      total += as_printed ? static_cast<double>(size) / n_total * term : term;
      pos += size;
    }
  }
  return total / (static_cast<double>(set.num_classes) * ranges);
}

}  // namespace oracle
