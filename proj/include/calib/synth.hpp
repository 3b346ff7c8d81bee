#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "calib/core.hpp"
#include "calib/signal.hpp"

namespace calib {

enum class LogitLaw { standard_normal, point_mass };

std::string_view to_string(LogitLaw law);
std::optional<LogitLaw> parse_logit_law(std::string_view text);

// Base logits z are drawn from `law`; labels are sampled from softmax(z) and
// the emitted logits are beta * z. beta = 1 is calibrated by construction,
// beta > 1 overconfident with ideal corrective temperature exactly beta.
struct SynthSpec {
  std::size_t n = 1000;
  int k = 2;
  double beta = 1.0;
  LogitLaw law = LogitLaw::standard_normal;
  std::vector<double> point_logits;  // used by LogitLaw::point_mass, length k
  std::uint64_t seed = 0;
  double validation_fraction = 0.0;  // leading records tagged as validation
  int folds = 1;                     // fold id = record index mod folds

  void check() const;  // throws std::invalid_argument
};

inline constexpr std::size_t kSynthBlock = 4096;

PredictionSet generate(const SynthSpec& spec);

// Monte-Carlo estimate of the population top-label calibration error
// E|E[correct | conf] - conf|. The conditional mean is estimated over
// sqrt(draws) equal-mass confidence ranges; for two classes the confidence
// determines the true probability so this equals E|p_true - conf|.
double true_calibration_error(const SynthSpec& spec, std::size_t draws = 1'000'000);

namespace serial {
PredictionSet generate(const SynthSpec& spec);
}

// Extinction/DPF values used for synthetic optical-density data. They only
// need to be well conditioned; they are not physical constants.
BeerLambertConfig synthetic_optics();

// Two-class fNIRS-like recordings: slow drift, in-band noise and a ramp
// response during each task (HbO rises for label 1 and falls for label 0,
// HbR mirrors it at half amplitude).
struct RecordingSynthSpec {
  int subjects = 2;
  int trials_per_subject = 20;
  int optode_pairs = 2;
  double fs = 12.5;
  double lead_s = 20.0;
  double intro_s = 2.0;
  double task_s = 10.0;
  double rest_s = 15.0;
  double amplitude = 1.0;
  double noise = 0.5;
  bool wavelengths = false;   // emit optical density at 760/850 nm instead of HbO/HbR
  BeerLambertConfig optics = synthetic_optics();  // forward model for `wavelengths`
  std::uint64_t seed = 0;
};

std::vector<SignalRecording> generate_recordings(const RecordingSynthSpec& spec);

}  // namespace calib
