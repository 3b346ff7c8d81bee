#include "calib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/rng.hpp"

namespace calib {

std::string_view to_string(LogitLaw law) { return law == LogitLaw::standard_normal ? "normal" : "point"; }

std::optional<LogitLaw> parse_logit_law(std::string_view text) {
  if (text == "normal" || text == "standard_normal") return LogitLaw::standard_normal;
  if (text == "point" || text == "point_mass") return LogitLaw::point_mass;
  return std::nullopt;
}

void SynthSpec::check() const {
  if (n < 1) throw std::invalid_argument("synth: n must be >= 1");
  if (k < 2) throw std::invalid_argument("synth: k must be >= 2");
  if (!(beta > 0.0)) throw std::invalid_argument("synth: beta must be positive");
  if (law == LogitLaw::point_mass && point_logits.size() != static_cast<std::size_t>(k)) {
    throw std::invalid_argument(fmt::format("synth: point-mass law needs {} logits", k));
  }
  if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0)) {
    throw std::invalid_argument("synth: validation fraction must lie in [0, 1]");
  }
  if (folds < 1) throw std::invalid_argument("synth: folds must be >= 1");
}

namespace {

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t stream, std::size_t block) {
  return mix_seed(mix_seed(seed ^ stream) + static_cast<std::uint64_t>(block));
}

constexpr std::uint64_t kRecordStream = 0x5eed0001;
constexpr std::uint64_t kOracleStream = 0x5eed0002;

void draw_base_logits(const SynthSpec& spec, Rng& rng, std::vector<double>& z) {
  z.resize(static_cast<std::size_t>(spec.k));
  if (spec.law == LogitLaw::point_mass) {
    std::copy(spec.point_logits.begin(), spec.point_logits.end(), z.begin());
  } else {
    for (auto& v : z) v = rng.normal();
  }
}

int sample_label(std::span<const double> p, double u) {
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < p.size(); ++c) {
    acc += p[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(p.size()) - 1;
}

void fill_block(const SynthSpec& spec, std::size_t block, std::vector<PredictionRecord>& records) {
  Rng rng(block_seed(spec.seed, kRecordStream, block));
  const std::size_t lo = block * kSynthBlock;
  const std::size_t hi = std::min(spec.n, lo + kSynthBlock);
  const auto n_val = static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(spec.n)));
  std::vector<double> z;
  for (std::size_t i = lo; i < hi; ++i) {
    draw_base_logits(spec, rng, z);
    const auto p_true = softmax(z);
    auto& r = records[i];
    r.label = sample_label(p_true, rng.uniform());
    std::vector<double> logits(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) logits[c] = spec.beta * z[c];
    r.probs = softmax(logits);
    r.logits = std::move(logits);
    r.subject_id = "synth";
    r.trial_id = fmt::format("r{}", i);
    r.fold_id = static_cast<int>(i % static_cast<std::size_t>(spec.folds));
    r.split = i < n_val ? Split::validation : Split::test;
  }
}

std::size_t block_count(std::size_t n) { return (n + kSynthBlock - 1) / kSynthBlock; }

}  // namespace

namespace serial {

PredictionSet generate(const SynthSpec& spec) {
  spec.check();
  PredictionSet set;
  set.num_classes = spec.k;
  set.records.resize(spec.n);
  for (std::size_t b = 0; b < block_count(spec.n); ++b) fill_block(spec, b, set.records);
  return set;
}

}  // namespace serial

PredictionSet generate(const SynthSpec& spec) {
  spec.check();
  PredictionSet set;
  set.num_classes = spec.k;
  set.records.resize(spec.n);
  const auto blocks = static_cast<std::ptrdiff_t>(block_count(spec.n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) fill_block(spec, static_cast<std::size_t>(b), set.records);
  return set;
}

double true_calibration_error(const SynthSpec& spec, std::size_t draws) {
  spec.check();
  if (draws == 0) throw std::invalid_argument("true_calibration_error needs draws > 0");
  std::vector<double> conf(draws), p_true(draws);
  const auto blocks = static_cast<std::ptrdiff_t>(block_count(draws));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bb = 0; bb < blocks; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    Rng rng(block_seed(spec.seed, kOracleStream, b));
    std::vector<double> z, scaled;
    for (std::size_t i = b * kSynthBlock; i < std::min(draws, (b + 1) * kSynthBlock); ++i) {
      draw_base_logits(spec, rng, z);
      scaled.resize(z.size());
      for (std::size_t c = 0; c < z.size(); ++c) scaled[c] = spec.beta * z[c];
      const auto q = softmax(scaled);
      const int top = argmax(q);
      conf[i] = q[static_cast<std::size_t>(top)];
      p_true[i] = softmax(z)[static_cast<std::size_t>(top)];
    }
  }

  std::vector<std::size_t> order(draws);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return conf[a] < conf[b]; });
  const auto ranges = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(draws)))));
  const std::size_t base = draws / ranges, extra = draws % ranges;
  double total = 0.0;
  std::size_t pos = 0;
  for (std::size_t r = 0; r < ranges; ++r) {
    const std::size_t size = base + (r < extra ? 1 : 0);
    double sc = 0.0, sp = 0.0;
    for (std::size_t j = pos; j < pos + size; ++j) {
      sc += conf[order[j]];
      sp += p_true[order[j]];
    }
    total += std::abs(sp - sc);
    pos += size;
  }
  return total / static_cast<double>(draws);
}

BeerLambertConfig synthetic_optics() {
  BeerLambertConfig cfg;
  cfg.extinction[760.0] = {1.0, 3.0};
  cfg.extinction[850.0] = {2.5, 1.5};
  cfg.dpf[760.0] = 6.0;
  cfg.dpf[850.0] = 6.0;
  cfg.separation = 3.0;
  return cfg;
}

std::vector<SignalRecording> generate_recordings(const RecordingSynthSpec& spec) {
  if (spec.subjects < 1 || spec.trials_per_subject < 1 || spec.optode_pairs < 1) {
    throw std::invalid_argument("recording synth needs at least one subject, trial and optode pair");
  }
  const double pi = std::numbers::pi;
  const double trial_s = spec.intro_s + spec.task_s + spec.rest_s;
  const double duration = spec.lead_s + spec.trials_per_subject * trial_s + spec.lead_s;
  const auto n = static_cast<std::size_t>(std::ceil(duration * spec.fs));

  std::vector<SignalRecording> out;
  for (int s = 0; s < spec.subjects; ++s) {
    Rng rng(block_seed(spec.seed, 0x5eed0003, static_cast<std::size_t>(s)));
    SignalRecording rec;
    rec.fs = spec.fs;
    rec.subject = fmt::format("sub{:02d}", s + 1);

    std::vector<int> labels(static_cast<std::size_t>(spec.trials_per_subject));
    for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = static_cast<int>(t % 2);
    shuffle(labels, rng);
    for (int t = 0; t < spec.trials_per_subject; ++t) {
      const double onset = spec.lead_s + t * trial_s + spec.intro_s;
      rec.events.push_back({onset, labels[static_cast<std::size_t>(t)], fmt::format("trial{:02d}", t + 1)});
    }

    // Ramp up over the task, linear return during the rest.
    std::vector<double> response(n, 0.0);
    for (const auto& ev : rec.events) {
      const double sign = ev.label == 1 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fs - ev.onset;
        if (t >= 0.0 && t < spec.task_s) {
          response[i] += sign * spec.amplitude * t / spec.task_s;
        } else if (t >= spec.task_s && t < spec.task_s + spec.rest_s) {
          response[i] += sign * spec.amplitude * (1.0 - (t - spec.task_s) / spec.rest_s);
        }
      }
    }

    for (int p = 0; p < spec.optode_pairs; ++p) {
      const std::string src = fmt::format("S{}", p + 1), det = fmt::format("D{}", p + 1);
      const double gain = 1.0 + 0.25 * p;
      const double drift_phase = 2.0 * pi * rng.uniform();
      std::vector<double> hbo(n), hbr(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fs;
        const double drift = 2.0 * std::sin(2.0 * pi * 0.002 * t + drift_phase);
        hbo[i] = gain * response[i] + drift + spec.noise * rng.normal();
        hbr[i] = -0.5 * gain * response[i] + 0.5 * drift + spec.noise * rng.normal();
      }
      if (!spec.wavelengths) {
        rec.samples.push_back(std::move(hbo));
        rec.channels.push_back({src, det, ChannelKind::hbo, 0.0});
        rec.samples.push_back(std::move(hbr));
        rec.channels.push_back({src, det, ChannelKind::hbr, 0.0});
        continue;
      }
      for (const auto& [nm, eps] : spec.optics.extinction) {
        const double scale = spec.optics.separation * spec.optics.dpf.at(nm);
        std::vector<double> od(n);
        for (std::size_t i = 0; i < n; ++i) od[i] = scale * (eps.first * hbo[i] + eps.second * hbr[i]);
        rec.samples.push_back(std::move(od));
        rec.channels.push_back({src, det, ChannelKind::wavelength, nm});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace calib
