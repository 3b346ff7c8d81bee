#include "calib/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace calib {

using cplx = std::complex<double>;

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) throw std::invalid_argument(fmt::format("filter order must be >= 1, got {}", order));
  if (!(fs > 0.0 && low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    throw std::invalid_argument(
        fmt::format("band-pass edges need 0 < low < high < fs/2 (low={}, high={}, fs={})", low_hz, high_hz, fs));
  }
  const double pi = std::numbers::pi;
  const int n = order;

  // Analog prototype: poles on the left half of the unit circle, unit gain.
  std::vector<cplx> proto;
  for (int m = -n + 1; m < n; m += 2) proto.push_back(-std::exp(cplx(0.0, pi * m / (2.0 * n))));

  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(pi * low_hz / fs);
  const double wh = fs2 * std::tan(pi * high_hz / fs);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  // Low-pass to band-pass: each prototype pole splits in two; n zeros at s = 0.
  std::vector<cplx> poles;
  for (const cplx& p : proto) {
    const cplx half = p * (bw / 2.0);
    const cplx root = std::sqrt(half * half - w0sq);
    poles.push_back(half + root);
    poles.push_back(half - root);
  }

  // Bilinear transform. Zeros at s = 0 map to z = 1, zeros at infinity to z = -1.
  cplx denom(1.0, 0.0);
  for (auto& p : poles) {
    denom *= (fs2 - p);
    p = (fs2 + p) / (fs2 - p);
  }
  const double gain = std::real(std::pow(cplx(bw * fs2, 0.0), n) / denom);

  std::vector<cplx> complex_upper;
  std::vector<double> real_poles;
  for (const cplx& p : poles) {
    const double tol = 1e-12 * std::abs(p);
    if (std::imag(p) > tol) {
      complex_upper.push_back(p);
    } else if (std::abs(std::imag(p)) <= tol) {
      real_poles.push_back(std::real(p));
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  if (real_poles.size() % 2 != 0 || complex_upper.size() * 2 + real_poles.size() != poles.size()) {
    throw std::logic_error("butterworth_bandpass: unpaired poles");
  }

  struct Pair {
    double a1, a2, radius;
  };
  std::vector<Pair> pairs;
  for (const cplx& p : complex_upper) pairs.push_back({-2.0 * std::real(p), std::norm(p), std::abs(p)});
  for (std::size_t i = 0; i < real_poles.size(); i += 2) {
    const double p1 = real_poles[i], p2 = real_poles[i + 1];
    pairs.push_back({-(p1 + p2), p1 * p2, std::max(std::abs(p1), std::abs(p2))});
  }
  // Poles nearest the unit circle go last.
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.radius < y.radius; });

  SosFilter filter;
  for (const auto& pr : pairs) filter.sections.push_back({1.0, 0.0, -1.0, pr.a1, pr.a2});
  auto& first = filter.sections.front();
  first.b0 *= gain;
  first.b2 *= gain;
  return filter;
}

std::complex<double> frequency_response(const SosFilter& filter, double f_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * f_hz / fs;
  const cplx e1 = std::exp(cplx(0.0, -w));
  const cplx e2 = e1 * e1;
  cplx h(1.0, 0.0);
  for (const auto& s : filter.sections) h *= (s.b0 + s.b1 * e1 + s.b2 * e2) / (1.0 + s.a1 * e1 + s.a2 * e2);
  return h;
}

std::vector<double> steady_state_init(const SosFilter& filter) {
  std::vector<double> zi;
  zi.reserve(2 * filter.sections.size());
  double scale = 1.0;
  for (const auto& s : filter.sections) {
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * g;
    const double z1 = s.b1 - s.a1 * g + z2;
    zi.push_back(scale * z1);
    zi.push_back(scale * z2);
    scale *= g;
  }
  return zi;
}

std::vector<double> sos_filter(const SosFilter& filter, std::span<const double> x, std::span<const double> initial) {
  if (!initial.empty() && initial.size() != 2 * filter.sections.size()) {
    throw std::invalid_argument("sos_filter: initial state needs two values per section");
  }
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < filter.sections.size(); ++s) {
    const auto& q = filter.sections[s];
    double z1 = initial.empty() ? 0.0 : initial[2 * s];
    double z2 = initial.empty() ? 0.0 : initial[2 * s + 1];
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

std::size_t zero_phase_pad(const SosFilter& filter) { return 3 * (filter.length() - 1); }

namespace {

std::vector<double> forward(const SosFilter& filter, const std::vector<double>& zi, std::span<const double> v) {
  std::vector<double> init(zi.size());
  for (std::size_t i = 0; i < zi.size(); ++i) init[i] = zi[i] * v.front();
  return sos_filter(filter, v, init);
}

std::vector<double> backward(const SosFilter& filter, const std::vector<double>& zi, std::span<const double> v) {
  std::vector<double> r(v.rbegin(), v.rend());
  auto y = forward(filter, zi, r);
  std::reverse(y.begin(), y.end());
  return y;
}

}  // namespace

std::vector<double> zero_phase_filter(const SosFilter& filter, std::span<const double> x) {
  const std::size_t pad = zero_phase_pad(filter);
  const std::size_t n = x.size();
  if (n < 3 * pad || n <= pad) {
    throw std::invalid_argument(fmt::format("zero-phase filter needs at least {} samples, got {}", 3 * pad, n));
  }
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state_init(filter);
  const auto fb = backward(filter, zi, forward(filter, zi, ext));
  const auto bf = forward(filter, zi, backward(filter, zi, ext));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 0.5 * (fb[pad + i] + bf[pad + i]);
  return y;
}

}  // namespace calib
