#include <algorithm>
#include <cmath>

#include "calib/kernels.hpp"

namespace calib::kernels {

std::size_t fixed_bin_index(double value, std::size_t bins) {
  if (!(value > 0.0)) return 0;
  if (value >= 1.0) return bins - 1;
  const auto edge = [bins](std::size_t j) { return static_cast<double>(j) / static_cast<double>(bins); };
  auto j = static_cast<std::size_t>(std::ceil(value * static_cast<double>(bins)));
  j = std::clamp<std::size_t>(j, 1, bins);
  // The product above can round across an edge; settle against the edges themselves.
  while (j > 1 && value <= edge(j - 1)) --j;
  while (j < bins && value > edge(j)) ++j;
  return j - 1;
}

namespace serial {

std::vector<BinAccum> accumulate_fixed(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                                       std::size_t bins) {
  std::vector<BinAccum> acc(bins);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& a = acc[fixed_bin_index(values[i], bins)];
    ++a.count;
    a.sum_value += values[i];
    a.sum_outcome += outcomes[i];
  }
  return acc;
}

std::vector<BinAccum> accumulate_per_class(std::span<const double> probs, std::span<const int> labels,
                                           std::size_t classes, std::size_t bins) {
  std::vector<BinAccum> acc(classes * bins);
  const std::size_t n = labels.size();
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs[i * classes + k];
      auto& a = acc[k * bins + fixed_bin_index(p, bins)];
      ++a.count;
      a.sum_value += p;
      a.sum_outcome += labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
    }
  }
  return acc;
}

LossGrad softmax_regression(const DesignMatrix& x, std::span<const int> labels, const LinearParams& params,
                            double lambda) {
  const std::size_t n = x.rows, d = x.cols, kc = params.classes;
  LossGrad out;
  out.grad_weights.assign(kc * d, 0.0);
  out.grad_bias.assign(kc, 0.0);
  std::vector<double> scores(kc);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.values.data() + i * d;
    for (std::size_t k = 0; k < kc; ++k) {
      double s = params.bias[k];
      const double* w = params.weights.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
      scores[k] = s;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - top);
    const double lse = top + std::log(z);
    const auto y = static_cast<std::size_t>(labels[i]);
    total += lse - scores[y];
    for (std::size_t k = 0; k < kc; ++k) {
      const double diff = std::exp(scores[k] - lse) - (k == y ? 1.0 : 0.0);
      double* g = out.grad_weights.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += diff * row[j];
      out.grad_bias[k] += diff;
    }
  }
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  double sq = 0.0;
  for (std::size_t idx = 0; idx < kc * d; ++idx) {
    const double w = params.weights[idx];
    sq += w * w;
    out.grad_weights[idx] = out.grad_weights[idx] * inv_n + lambda * w;
  }
  for (auto& g : out.grad_bias) g *= inv_n;
  out.loss = total * inv_n + 0.5 * lambda * sq;
  return out;
}

std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes, double temperature) {
  std::vector<double> out(logits.size());
  const std::size_t n = classes ? logits.size() / classes : 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data() + i * classes;
    double* p = out.data() + i * classes;
    double top = z[0] / temperature;
    for (std::size_t k = 1; k < classes; ++k) top = std::max(top, z[k] / temperature);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      p[k] = std::exp(z[k] / temperature - top);
      total += p[k];
    }
    for (std::size_t k = 0; k < classes; ++k) p[k] /= total;
  }
  return out;
}

}  // namespace serial
}  // namespace calib::kernels
