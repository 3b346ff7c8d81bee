#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace calib {

// One second-order section, normalized so a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct SosFilter {
  std::vector<Biquad> sections;

  // Coefficient count of the equivalent single transfer function.
  std::size_t length() const { return 2 * sections.size() + 1; }
};

// Digital Butterworth band-pass of the given prototype order, designed by
// bilinear transform with pre-warped band edges. Returns `order` sections.
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

std::complex<double> frequency_response(const SosFilter& filter, double f_hz, double fs);

// Initial section states for a unit-step input at steady state. Scale by the
// first input sample to start the filter without a transient.
std::vector<double> steady_state_init(const SosFilter& filter);

// Causal filtering. `initial` holds two states per section or is empty (zero state).
std::vector<double> sos_filter(const SosFilter& filter, std::span<const double> x, std::span<const double> initial = {});

// Odd-reflection padding used by the zero-phase filter: 3 * (length() - 1).
std::size_t zero_phase_pad(const SosFilter& filter);

// Zero-phase filtering: the signal is odd-reflected at both ends, then the
// forward-backward and backward-forward cascades (each started from steady
// state) are averaged. The result is exactly time-reversal symmetric and its
// magnitude response is |H|^2. Throws if x is shorter than 3 * zero_phase_pad.
std::vector<double> zero_phase_filter(const SosFilter& filter, std::span<const double> x);

}  // namespace calib
