#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "calib/butterworth.hpp"
#include "calib/error.hpp"
#include "calib/signal.hpp"

using namespace calib;

namespace {

// Reference values from an independent design (analog prototype, lp2bp,
// bilinear, zpk-to-sos) evaluated in double precision.
constexpr double kGain6 = 1.2285121086689946e-10;
constexpr double kImpulse6[] = {1.2285121086689946e-10, 1.4525581947209032e-09, 8.565493553029362e-09,
                                3.4056035955350394e-08, 1.040469304690049e-07,  2.6332475577111507e-07,
                                5.794502944910352e-07,  1.145799694603614e-06,  2.083634136931191e-06,
                                3.5432912782244086e-06, 5.704587345026871e-06,  8.776514416273252e-06};
constexpr double kGain3 = 1.1066763798804898e-05;
constexpr double kImpulse3[] = {1.1066763798804898e-05, 6.539110762144719e-05, 0.0001921739650102454,
                                0.0003956083659590588,  0.000668080239898448,  0.00100228208349009,
                                0.001391211363432681,   0.0018281685151202418, 0.0023067545490807755,
                                0.002820868277883015,   0.003364703176886499,  0.003932743892827188};
constexpr double kFreqs[] = {0.005, 0.01, 0.0316227766, 0.05, 0.1, 0.2, 1.0};
constexpr double kMag6[] = {0.00966649869551511,   0.7071067811961942,    1.0000000000017608, 0.9999990620118542,
                            0.7071067811863831,    0.009628134037865456,  4.7084124414586824e-07};
constexpr double kMag3[] = {0.09784883826125203, 0.7071067811895484,  1.000000000000551,    0.9993158708305424,
                            0.707106781186467,   0.09765631022409094, 0.0006861785645548449};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> sine(std::size_t n, double fs, double f, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Least-squares fit of a*sin + b*cos over [lo, hi); returns (amplitude, phase).
std::pair<double, double> fit_sine(const std::vector<double>& y, double fs, double f, std::size_t lo, std::size_t hi) {
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    const double s = std::sin(w), c = std::cos(w);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += y[i] * s;
    yc += y[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

SignalRecording chromophore_recording(std::size_t n, double fs) {
  SignalRecording rec;
  rec.fs = fs;
  rec.subject = "s";
  rec.channels = {{"S1", "D1", ChannelKind::hbo, 0.0}, {"S1", "D1", ChannelKind::hbr, 0.0}};
  rec.samples.assign(2, std::vector<double>(n, 0.0));
  return rec;
}

}  // namespace

TEST_SUITE("signal") {
  TEST_CASE("order-6 design matches the reference") {
    const auto f = butterworth_bandpass(6, 0.01, 0.1, 12.5);
    REQUIRE(f.sections.size() == 6);
    CHECK(rel(f.sections[0].b0, kGain6) < 1e-9);
    std::vector<double> impulse(12, 0.0);
    impulse[0] = 1.0;
    const auto h = sos_filter(f, impulse);
    for (std::size_t i = 0; i < 12; ++i) CHECK(rel(h[i], kImpulse6[i]) < 1e-8);
    for (std::size_t i = 0; i < 7; ++i) CHECK(rel(std::abs(frequency_response(f, kFreqs[i], 12.5)), kMag6[i]) < 1e-8);
  }

  TEST_CASE("order-3 design matches the reference") {
    const auto f = butterworth_bandpass(3, 0.01, 0.1, 12.5);
    REQUIRE(f.sections.size() == 3);
    CHECK(rel(f.sections[0].b0, kGain3) < 1e-9);
    std::vector<double> impulse(12, 0.0);
    impulse[0] = 1.0;
    const auto h = sos_filter(f, impulse);
    for (std::size_t i = 0; i < 12; ++i) CHECK(rel(h[i], kImpulse3[i]) < 1e-8);
    for (std::size_t i = 0; i < 7; ++i) CHECK(rel(std::abs(frequency_response(f, kFreqs[i], 12.5)), kMag3[i]) < 1e-8);
  }

  TEST_CASE("band edges sit at -3 dB for other orders and rates") {
    for (int order : {1, 2, 4, 5}) {
      const auto f = butterworth_bandpass(order, 0.5, 4.0, 100.0);
      CHECK(std::abs(frequency_response(f, 0.5, 100.0)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
      CHECK(std::abs(frequency_response(f, 4.0, 100.0)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    }
  }

  TEST_CASE("invalid filter specs are rejected") {
    CHECK_THROWS(butterworth_bandpass(0, 0.01, 0.1, 12.5));
    CHECK_THROWS(butterworth_bandpass(3, 0.1, 0.01, 12.5));
    CHECK_THROWS(butterworth_bandpass(3, 0.01, 7.0, 12.5));
    FilterSpec s;
    s.low_hz = 0.0;
    CHECK_THROWS(s.check(12.5));
  }

  TEST_CASE("zero-phase filter: reversal symmetry") {
    const auto f = butterworth_bandpass(6, 0.01, 0.1, 12.5);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> noise;
    std::vector<double> x(7500);
    for (auto& v : x) v = noise(gen);
    auto rx = x;
    std::reverse(rx.begin(), rx.end());
    const auto y = zero_phase_filter(f, x);
    auto ry = zero_phase_filter(f, rx);
    std::reverse(ry.begin(), ry.end());
    double worst = 0;
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ry[i]));
    CHECK(worst < 1e-9);
  }

  TEST_CASE("zero-phase filter: DC rejection over ten minutes") {
    const auto f = butterworth_bandpass(6, 0.01, 0.1, 12.5);
    const std::vector<double> dc(7500, 3.0);
    const auto y = zero_phase_filter(f, dc);
    double worst = 0;
    for (double v : y) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-3 * 3.0);
  }

  TEST_CASE("zero-phase filter: mid-band sine keeps amplitude and phase") {
    for (int order : {6, 3}) {
      const auto f = butterworth_bandpass(order, 0.01, 0.1, 12.5);
      const std::size_t n = 45000;
      const auto x = sine(n, 12.5, 0.05, 0.3);
      const auto y = zero_phase_filter(f, x);
      const auto [amp_in, ph_in] = fit_sine(x, 12.5, 0.05, n / 3, 2 * n / 3);
      const auto [amp_out, ph_out] = fit_sine(y, 12.5, 0.05, n / 3, 2 * n / 3);
      CHECK(std::abs(amp_out / amp_in - 1.0) < 0.05);
      CHECK(std::abs(ph_out - ph_in) < 1e-6);
    }
  }

  TEST_CASE("zero-phase magnitude is the squared single-pass response") {
    const auto f = butterworth_bandpass(3, 0.01, 0.1, 12.5);
    const std::size_t n = 45000;
    const auto y = zero_phase_filter(f, sine(n, 12.5, 0.2));
    const auto [amp, ph] = fit_sine(y, 12.5, 0.2, n / 3, 2 * n / 3);
    const double h = std::abs(frequency_response(f, 0.2, 12.5));
    CHECK(amp == doctest::Approx(h * h).epsilon(1e-4));
  }

  TEST_CASE("bandpass is linear") {
    auto a = chromophore_recording(3000, 12.5);
    auto b = a;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> noise;
    for (auto& ch : a.samples) for (auto& v : ch) v = noise(gen);
    for (auto& ch : b.samples) for (auto& v : ch) v = noise(gen);
    auto sum = a;
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < 3000; ++i) sum.samples[c][i] += b.samples[c][i];
    }
    const FilterSpec spec;
    const auto fa = bandpass(a, spec), fb = bandpass(b, spec), fs = bandpass(sum, spec);
    double worst = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < 3000; ++i) {
        worst = std::max(worst, std::abs(fs.samples[c][i] - fa.samples[c][i] - fb.samples[c][i]));
      }
    }
    CHECK(worst < 1e-9);
    CHECK(fs.samples[0].size() == 3000);
  }

  TEST_CASE("short records are rejected") {
    const auto f = butterworth_bandpass(6, 0.01, 0.1, 12.5);
    CHECK_THROWS(zero_phase_filter(f, std::vector<double>(3 * zero_phase_pad(f) - 1, 0.0)));
    CHECK(zero_phase_pad(f) == 3 * (f.length() - 1));
  }

  TEST_CASE("serial and parallel channel filtering agree exactly") {
    const auto f = butterworth_bandpass(3, 0.01, 0.1, 12.5);
    std::vector<std::vector<double>> channels(5, std::vector<double>(2000));
    std::mt19937_64 gen(9);
    std::normal_distribution<double> noise;
    for (auto& ch : channels) for (auto& v : ch) v = noise(gen);
    for (bool zp : {true, false}) CHECK(serial::filter_channels(channels, f, zp) == omp::filter_channels(channels, f, zp));
  }

  TEST_CASE("beer-lambert round trip") {
    BeerLambertConfig cfg;
    cfg.extinction[690.0] = {0.35, 2.1};
    cfg.extinction[830.0] = {1.05, 0.78};
    cfg.dpf[690.0] = 5.5;
    cfg.dpf[830.0] = 4.7;
    cfg.separation = 3.0;

    SignalRecording od;
    od.fs = 10.0;
    od.subject = "s";
    const std::vector<std::pair<double, double>> truth{{1.0, -0.5}, {0.25, 0.125}, {-2.0, 3.0}};
    for (double nm : {690.0, 830.0}) {
      od.channels.push_back({"S1", "D1", ChannelKind::wavelength, nm});
      std::vector<double> ch;
      const auto [eo, er] = cfg.extinction[nm];
      for (const auto& [hbo, hbr] : truth) ch.push_back(cfg.separation * cfg.dpf[nm] * (eo * hbo + er * hbr));
      od.samples.push_back(ch);
    }
    const auto out = beer_lambert(od, cfg);
    REQUIRE(out.channels.size() == 2);
    CHECK(out.channels[0].kind == ChannelKind::hbo);
    CHECK(out.channels[1].kind == ChannelKind::hbr);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      CHECK(std::abs(out.samples[0][i] - truth[i].first) < 1e-10);
      CHECK(std::abs(out.samples[1][i] - truth[i].second) < 1e-10);
    }
  }

  TEST_CASE("beer-lambert identity system and zero input") {
    BeerLambertConfig cfg;
    cfg.extinction[1.0] = {1.0, 0.0};
    cfg.extinction[2.0] = {0.0, 1.0};
    cfg.dpf[1.0] = cfg.dpf[2.0] = 1.0;
    cfg.separation = 1.0;
    SignalRecording od;
    od.fs = 1.0;
    od.channels = {{"S1", "D1", ChannelKind::wavelength, 1.0}, {"S1", "D1", ChannelKind::wavelength, 2.0}};
    od.samples = {{0.3, 0.0}, {-0.7, 0.0}};
    const auto out = beer_lambert(od, cfg);
    CHECK(out.samples[0] == std::vector<double>{0.3, 0.0});
    CHECK(out.samples[1] == std::vector<double>{-0.7, 0.0});
  }

  TEST_CASE("beer-lambert errors") {
    BeerLambertConfig cfg;
    cfg.extinction[760.0] = {1.0, 2.0};
    cfg.extinction[850.0] = {2.0, 4.0};
    cfg.dpf[760.0] = cfg.dpf[850.0] = 6.0;
    SignalRecording od;
    od.fs = 1.0;
    od.channels = {{"S1", "D1", ChannelKind::wavelength, 760.0}, {"S1", "D1", ChannelKind::wavelength, 850.0}};
    od.samples = {{0.1}, {0.2}};
    CHECK_THROWS(beer_lambert(od, cfg));  // singular
    cfg.extinction[850.0] = {2.5, 1.5};
    cfg.dpf.erase(850.0);
    CHECK_THROWS_AS(beer_lambert(od, cfg), ConfigError);
    cfg.dpf[850.0] = 6.0;
    cfg.extinction.erase(850.0);
    CHECK_THROWS_AS(beer_lambert(od, cfg), ConfigError);
  }

  TEST_CASE("baseline correction") {
    auto rec = chromophore_recording(200, 10.0);
    for (std::size_t i = 0; i < 200; ++i) {
      rec.samples[0][i] = 5.0;
      rec.samples[1][i] = static_cast<double>(i) / 10.0;
    }
    rec.events = {{3.0, 0, "a"}, {12.0, 1, "b"}};
    const auto out = baseline_correct(rec, -1.0, 0.0);
    // Trial a spans [2 s, 11 s), trial b [11 s, end).
    for (std::size_t i = 20; i < 200; ++i) CHECK(out.samples[0][i] == doctest::Approx(0.0));
    const double mean_a = (2.0 + 2.9) / 2.0, mean_b = (11.0 + 11.9) / 2.0;
    CHECK(out.samples[1][25] == doctest::Approx(2.5 - mean_a));
    CHECK(out.samples[1][109] == doctest::Approx(10.9 - mean_a));
    CHECK(out.samples[1][150] == doctest::Approx(15.0 - mean_b));

    rec.events = {{0.0, 0, "a"}};
    CHECK_THROWS(baseline_correct(rec, -1.0, 0.0));
  }

  TEST_CASE("epoch counts and shapes") {
    CHECK(windows_per_trial(10.0, 3.0, 1.0) == 8);
    CHECK(windows_per_trial(3.0, 3.0, 1.0) == 1);
    CHECK(window_sample_count(12.5, 3.0) == 37);
    for (double task = 3.0; task <= 20.0; task += 0.5) {
      for (double step : {0.5, 1.0, 2.5}) {
        CHECK(windows_per_trial(task, 3.0, step) == static_cast<std::size_t>(std::floor((task - 3.0) / step)) + 1);
      }
    }

    auto rec = chromophore_recording(1000, 12.5);
    rec.events = {{5.0, 0, "t1"}, {30.0, 1, "t2"}};
    const auto e = epoch(rec, 10.0);
    CHECK(e.windows.size() == 16);
    CHECK(e.num_samples == 37);
    CHECK(e.num_channels == 2);
    for (const auto& w : e.windows) CHECK(w.data.size() == 74);
    CHECK(e.windows[8].trial_id == "t2");
    CHECK(e.windows[8].label == 1);
    CHECK(e.windows[7].window_index == 7);

    rec.events = {{75.0, 0, "late"}};
    CHECK_THROWS(epoch(rec, 10.0));
  }

  TEST_CASE("window starts round to the nearest sample") {
    auto rec = chromophore_recording(400, 12.5);
    for (std::size_t i = 0; i < 400; ++i) rec.samples[0][i] = static_cast<double>(i);
    rec.events = {{2.0, 0, "t"}};
    const auto e = epoch(rec, 10.0);
    for (const auto& w : e.windows) {
      const auto start = static_cast<double>(std::llround(12.5 * (2.0 + w.window_index)));
      CHECK(w.data[0] == start);
    }
  }

  TEST_CASE("window z-score normalization") {
    auto rec = chromophore_recording(500, 12.5);
    std::mt19937_64 gen(6);
    std::normal_distribution<double> noise(4.0, 2.0);
    for (auto& v : rec.samples[0]) v = noise(gen);
    rec.events = {{2.0, 0, "t"}};
    std::vector<std::string> warnings;
    const auto e = normalize(epoch(rec, 10.0), NormalizeMode::window_zscore, &warnings);
    const auto& w = e.windows[0].data;
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 37; ++i) mean += w[i] / 37.0;
    for (std::size_t i = 0; i < 37; ++i) var += (w[i] - mean) * (w[i] - mean) / 37.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
    for (std::size_t i = 37; i < 74; ++i) CHECK(w[i] == 0.0);  // constant HbR channel
    CHECK_FALSE(warnings.empty());

    auto affine = rec;
    for (auto& v : affine.samples[0]) v = 3.0 * v - 7.0;
    const auto e2 = normalize(epoch(affine, 10.0));
    for (std::size_t i = 0; i < 37; ++i) CHECK(e2.windows[0].data[i] == doctest::Approx(w[i]).epsilon(1e-9));
  }

  TEST_CASE("recording min-max normalization") {
    auto rec = chromophore_recording(500, 12.5);
    for (std::size_t i = 0; i < 500; ++i) rec.samples[0][i] = std::sin(0.01 * static_cast<double>(i));
    rec.events = {{2.0, 0, "t"}, {20.0, 1, "u"}};
    const auto e = normalize(epoch(rec, 10.0), NormalizeMode::recording_minmax);
    double lo = 1e9, hi = -1e9;
    for (const auto& w : e.windows) {
      for (std::size_t i = 0; i < 37; ++i) {
        lo = std::min(lo, w.data[i]);
        hi = std::max(hi, w.data[i]);
      }
    }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(1.0));
  }

  TEST_CASE("channel names") {
    const ChannelInfo hbo{"S1", "D2", ChannelKind::hbo, 0.0};
    CHECK(hbo.name() == "S1_D2_HbO");
    const ChannelInfo wl{"S3", "D4", ChannelKind::wavelength, 760.0};
    CHECK(wl.name() == "S3_D4_760");
    const auto p = ChannelInfo::parse("S3_D4_760");
    REQUIRE(p.has_value());
    CHECK(p->kind == ChannelKind::wavelength);
    CHECK(p->wavelength_nm == 760.0);
    CHECK(ChannelInfo::parse("S1_D1_HbR")->kind == ChannelKind::hbr);
    CHECK_FALSE(ChannelInfo::parse("nonsense").has_value());
  }

  TEST_CASE("recording invariants") {
    auto rec = chromophore_recording(100, 10.0);
    rec.samples[1].pop_back();
    CHECK_THROWS_AS(rec.check(), ValidationError);
    rec = chromophore_recording(100, 10.0);
    rec.events = {{50.0, 0, "t"}};
    CHECK_THROWS_AS(rec.check(), ValidationError);
    rec.events.clear();
    rec.fs = 0.0;
    CHECK_THROWS_AS(rec.check(), ValidationError);
  }
}
