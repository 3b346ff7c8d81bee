#include <algorithm>
#include <cmath>

#include "calib/kernels.hpp"

namespace calib::kernels::omp {

namespace {

std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

}  // namespace

std::vector<BinAccum> accumulate_fixed(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                                       std::size_t bins) {
  const std::size_t n = values.size();
  const std::size_t chunks = chunk_count(n, kChunk);
  std::vector<std::vector<BinAccum>> partial(chunks, std::vector<BinAccum>(bins));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    auto& acc = partial[static_cast<std::size_t>(c)];
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      auto& a = acc[fixed_bin_index(values[i], bins)];
      ++a.count;
      a.sum_value += values[i];
      a.sum_outcome += outcomes[i];
    }
  }
  std::vector<BinAccum> acc(bins);
  for (const auto& part : partial) {
    for (std::size_t b = 0; b < bins; ++b) {
      acc[b].count += part[b].count;
      acc[b].sum_value += part[b].sum_value;
      acc[b].sum_outcome += part[b].sum_outcome;
    }
  }
  return acc;
}

std::vector<BinAccum> accumulate_per_class(std::span<const double> probs, std::span<const int> labels,
                                           std::size_t classes, std::size_t bins) {
  std::vector<BinAccum> acc(classes * bins);
  const std::size_t n = labels.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(classes); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
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
  const std::size_t chunks = chunk_count(n, kSampleChunk);
  struct Partial {
    double loss = 0.0;
    std::vector<double> gw, gb;
  };
  std::vector<Partial> partial(chunks);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    auto& part = partial[static_cast<std::size_t>(c)];
    part.gw.assign(kc * d, 0.0);
    part.gb.assign(kc, 0.0);
    std::vector<double> scores(kc);
    const std::size_t lo = static_cast<std::size_t>(c) * kSampleChunk;
    const std::size_t hi = std::min(n, lo + kSampleChunk);
    for (std::size_t i = lo; i < hi; ++i) {
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
      part.loss += lse - scores[y];
      for (std::size_t k = 0; k < kc; ++k) {
        const double diff = std::exp(scores[k] - lse) - (k == y ? 1.0 : 0.0);
        double* g = part.gw.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) g[j] += diff * row[j];
        part.gb[k] += diff;
      }
    }
  }

  LossGrad out;
  out.grad_weights.assign(kc * d, 0.0);
  out.grad_bias.assign(kc, 0.0);
  double total = 0.0;
  for (const auto& part : partial) {
    total += part.loss;
    for (std::size_t idx = 0; idx < kc * d; ++idx) out.grad_weights[idx] += part.gw[idx];
    for (std::size_t k = 0; k < kc; ++k) out.grad_bias[k] += part.gb[k];
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
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
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

}  // namespace calib::kernels::omp
