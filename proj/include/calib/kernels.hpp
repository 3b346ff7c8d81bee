#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// straightforward reference used by tests, `omp` is the OpenMP version used by
// the library. The OpenMP versions reduce over fixed-size chunks merged in
// chunk order, so their results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace calib::kernels {

struct BinAccum {
  std::size_t count = 0;
  double sum_value = 0.0;    // sum of confidences / class probabilities
  double sum_outcome = 0.0;  // number of hits (correct, or label == k)
};

// Index of the bin ((j-1)/B, j/B] containing `value`; 0 also maps to bin 0.
// Edges are evaluated as double(j) / double(B).
std::size_t fixed_bin_index(double value, std::size_t bins);

struct LossGrad {
  double loss = 0.0;               // mean cross-entropy + (lambda/2)||W||^2
  std::vector<double> grad_weights;  // K x D row-major
  std::vector<double> grad_bias;     // K
};

// Row-major views used by the softmax-regression kernels.
struct DesignMatrix {
  std::span<const double> values;  // N x D
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct LinearParams {
  std::span<const double> weights;  // K x D
  std::span<const double> bias;     // K
  std::size_t classes = 0;
};

inline constexpr std::size_t kChunk = 1u << 14;
inline constexpr std::size_t kSampleChunk = 256;

namespace serial {

std::vector<BinAccum> accumulate_fixed(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                                       std::size_t bins);

// probs is N x K row-major; returns K x B accumulators (class-major).
std::vector<BinAccum> accumulate_per_class(std::span<const double> probs, std::span<const int> labels,
                                           std::size_t classes, std::size_t bins);

LossGrad softmax_regression(const DesignMatrix& x, std::span<const int> labels, const LinearParams& params,
                            double lambda);

// Softmax of every row of an N x K logit matrix divided by `temperature`.
std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes, double temperature);

}  // namespace serial

namespace omp {

std::vector<BinAccum> accumulate_fixed(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                                       std::size_t bins);
std::vector<BinAccum> accumulate_per_class(std::span<const double> probs, std::span<const int> labels,
                                           std::size_t classes, std::size_t bins);
LossGrad softmax_regression(const DesignMatrix& x, std::span<const int> labels, const LinearParams& params,
                            double lambda);
std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes, double temperature);

}  // namespace omp

}  // namespace calib::kernels
