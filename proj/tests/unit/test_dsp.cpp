// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "egw/dsp/extract.hpp"
#include "egw/dsp/io.hpp"
#include "egw/dsp/synth.hpp"

using namespace egw;
using namespace egw::dsp;

namespace {

EcgSignal tone(double freq_hz, double amplitude, int fs, Eigen::Index n) {
  EcgSignal s;
  s.sampling_rate = fs;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = amplitude * std::sin(2 * std::numbers::pi * freq_hz * i / fs);
  return s;
}

double rms(const Vector<double>& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

// Direct O(n) single-bin DFT, independent of the FFT used by the filter.
double dft_amplitude(const Vector<double>& x, double freq_hz, int fs) {
  std::complex<double> acc = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -2 * std::numbers::pi * freq_hz * i / fs);
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

Vector<double> random_signal(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

// Isosceles triangle of given peak value and half-base (samples) added at centre.
void add_triangle(Vector<double>& x, Eigen::Index centre, double peak, Eigen::Index half_base) {
  for (Eigen::Index k = -half_base; k <= half_base; ++k) {
    auto i = centre + k;
    if (i >= 0 && i < x.size()) x[i] += peak * (1.0 - static_cast<double>(std::abs(k)) / half_base);
  }
}

}  // namespace

TEST_CASE("db4 taps are orthonormal") {
  long double sumsq = 0, sum = 0;
  for (auto h : kDb4Lowpass) {
    sumsq += h * h;
    sum += h;
  }
  CHECK(std::abs(static_cast<double>(sumsq) - 1.0) < 1e-12);
  CHECK(std::abs(static_cast<double>(sum) - std::sqrt(2.0)) < 1e-12);
  // double-shift orthogonality
  for (int m = 1; m < 4; ++m) {
    long double acc = 0;
    for (int k = 0; k + 2 * m < 8; ++k) acc += kDb4Lowpass[k] * kDb4Lowpass[k + 2 * m];
    CHECK(std::abs(static_cast<double>(acc)) < 1e-12);
  }
}

TEST_CASE("preprocess removes DC") {
  EcgSignal s;
  s.sampling_rate = 500;
  s.samples = Vector<double>::Constant(5000, 1.0);
  auto out = preprocess(s, 0.5, 40.0, 3);
  CHECK(out.size() == s.size());
  CHECK(out.sampling_rate == 500);
  CHECK(std::abs(out.samples.mean()) <= 0.01);
}

TEST_CASE("preprocess attenuates mains and keeps in-band tones") {
  const int fs = 500;
  auto mains = tone(50.0, 1.0, fs, 5000);
  auto out = preprocess(mains, 0.5, 40.0, 3);
  CHECK(rms(out.samples) <= 0.1 * rms(mains.samples));
  CHECK(dft_amplitude(out.samples, 50.0, fs) <= 0.1 * dft_amplitude(mains.samples, 50.0, fs));

  for (double f : {5.0, 7.3, 12.0}) {
    CAPTURE(f);
    auto in = tone(f, 1.0, fs, 5000);
    auto pass = preprocess(in, 0.5, 40.0, 3);
    CHECK(rms(pass.samples) >= 0.7 * rms(in.samples));
    CHECK(dft_amplitude(pass.samples, f, fs) >= 0.7 * dft_amplitude(in.samples, f, fs));
  }
}

TEST_CASE("preprocess is idempotent on in-band content") {
  auto in = tone(5.0, 1.0, 500, 5000);
  auto once = preprocess(in, 0.5, 40.0, 3);
  auto twice = preprocess(once, 0.5, 40.0, 3);
  CHECK(twice.size() == in.size());
  CHECK(std::abs(rms(twice.samples) - rms(once.samples)) / rms(once.samples) < 0.01);
}

TEST_CASE("preprocess validates parameters") {
  auto s = tone(5.0, 1.0, 500, 100);
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::State;
  };
  CHECK(kind_of([&] { preprocess(s, 40.0, 0.5, 3); }) == ErrorKind::Parameter);
  CHECK(kind_of([&] { preprocess(s, 0.0, 40.0, 3); }) == ErrorKind::Parameter);
  CHECK(kind_of([&] { preprocess(s, 0.5, 250.0, 3); }) == ErrorKind::Parameter);
  CHECK(kind_of([&] { preprocess(s, 0.5, 40.0, 0); }) == ErrorKind::Parameter);
  EcgSignal empty;
  empty.sampling_rate = 500;
  CHECK(kind_of([&] { preprocess(empty, 0.5, 40.0, 3); }) == ErrorKind::EmptyInput);
}

TEST_CASE("dwt halves band lengths and constant has no detail") {
  Vector<double> c = Vector<double>::Constant(1000, 3.5);
  for (int levels = 1; levels <= 5; ++levels) {
    auto coeffs = dwt(c, levels);
    Eigen::Index n = 1000;
    for (const auto& lvl : coeffs.levels) {
      n = (n + 1) / 2;
      CHECK(lvl.approx.size() == n);
      CHECK(lvl.detail.size() == n);
      CHECK(lvl.detail.cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  auto one = dwt(random_signal(1024, 3), 1);
  CHECK(one.levels[0].approx.size() == 512);
  CHECK(one.wavelet_id == "db4");
  CHECK(one.original_length == 1024);
}

TEST_CASE("dwt rejects too few samples") {
  CHECK_THROWS_AS(dwt(random_signal(7, 1), 3), Error);
  CHECK_THROWS_AS(dwt(random_signal(64, 1), 0), Error);
  CHECK_NOTHROW(dwt(random_signal(8, 1), 3));
}

TEST_CASE("idwt(dwt(x)) reconstructs power-of-two signals") {
  for (int k = 5; k <= 12; ++k) {
    for (int levels = 1; levels <= 3; ++levels) {
      auto x = random_signal(Eigen::Index{1} << k, static_cast<std::uint64_t>(k * 10 + levels));
      auto back = idwt(dwt(x, levels));
      CAPTURE(k);
      CAPTURE(levels);
      REQUIRE(back.size() == x.size());
      CHECK((back - x).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  auto x128 = random_signal(128, 9);
  CHECK((idwt(dwt(x128, 1)) - x128).cwiseAbs().maxCoeff() < 1e-8);
  auto x1024 = random_signal(1024, 10);
  CHECK((idwt(dwt(x1024, 3)) - x1024).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("idwt reconstructs odd and irregular lengths") {
  for (Eigen::Index n : {33, 100, 187, 999, 5000}) {
    auto x = random_signal(n, static_cast<std::uint64_t>(n));
    auto back = idwt(dwt(x, 3));
    CAPTURE(n);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("idwt of zero coefficients is zero; malformed bands rejected") {
  auto coeffs = dwt(random_signal(256, 4), 2);
  for (auto& lvl : coeffs.levels) {
    lvl.approx.setZero();
    lvl.detail.setZero();
  }
  CHECK(idwt(coeffs).cwiseAbs().maxCoeff() == 0.0);
  coeffs.levels[1].detail.resize(10);
  CHECK_THROWS_AS(idwt(coeffs), Error);
  WaveletCoeffs empty;
  CHECK_THROWS_AS(idwt(empty), Error);
}

TEST_CASE("payload reduction") {
  CHECK(coeff_payload_reduction(1024, 1) == doctest::Approx(0.50));
  CHECK(coeff_payload_reduction(1024, 2) == doctest::Approx(0.75));
  for (int level : {1, 2}) {
    auto r = coeff_payload_reduction(1024, level);
    CHECK(r >= 0.40);
    CHECK(r <= 0.80);
  }
}

TEST_CASE("impulse train R peaks land exactly") {
  EcgSignal s;
  s.sampling_rate = 500;
  s.samples = Vector<double>::Zero(4000);
  std::vector<Eigen::Index> expected;
  for (Eigen::Index i = 0; i < 4000; i += 400) {
    s.samples[i] = 1.2;
    expected.push_back(i);
  }
  auto marks = detect_waves(s, 1.0, 0.08, 0.1, 200.0);
  CHECK(marks.r_peaks == expected);
  CHECK(marks.p_peaks.empty());
  CHECK(marks.t_peaks.empty());
}

TEST_CASE("all-zero signal yields no marks; defaults match the reference thresholds") {
  EcgSignal s;
  s.sampling_rate = 250;
  s.samples = Vector<double>::Zero(2500);
  auto marks = detect_waves(s);
  CHECK(marks.r_peaks.empty());
  CHECK(marks.p_peaks.empty());
  CHECK(marks.t_peaks.empty());
  DetectionConfig cfg;
  CHECK(cfg.r_threshold_mv == 1.0);
  CHECK(cfg.p_threshold_mv == 0.08);
  CHECK(cfg.t_threshold_mv == 0.1);
  CHECK(cfg.refractory_ms == 200.0);
}

TEST_CASE("refractory keeps the taller of two close peaks") {
  EcgSignal s;
  s.sampling_rate = 500;
  s.samples = Vector<double>::Zero(1000);
  s.samples[100] = 1.5;
  s.samples[150] = 1.3;  // 100 ms later
  s.samples[600] = 1.4;
  auto marks = detect_waves(s, 1.0, 0.08, 0.1, 200.0);
  CHECK(marks.r_peaks == std::vector<Eigen::Index>{100, 600});
  auto loose = detect_waves(s, 1.0, 0.08, 0.1, 50.0);
  CHECK(loose.r_peaks == std::vector<Eigen::Index>{100, 150, 600});
}

TEST_CASE("detect_waves marks are sorted, in bounds and above threshold") {
  SynthOptions opt;
  opt.noise_mv = 0.02;
  opt.seed = 5;
  auto sig = preprocess(synthesize_ecg({{20, 75}, {10, 130, BeatMorphology::ventricular()}}, opt), 0.5, 40.0, 3);
  DetectionConfig cfg;
  auto marks = detect_waves(sig, cfg);
  REQUIRE(marks.r_peaks.size() > 10);
  const double iso = isoelectric_level(sig);
  auto check = [&](const std::vector<Eigen::Index>& idx, double thr) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      CHECK(idx[i] >= 0);
      CHECK(idx[i] < sig.size());
      CHECK(sig.samples[idx[i]] - iso > thr);
      if (i) CHECK(idx[i] > idx[i - 1]);
    }
  };
  check(marks.r_peaks, cfg.r_threshold_mv);
  check(marks.p_peaks, cfg.p_threshold_mv);
  check(marks.t_peaks, cfg.t_threshold_mv);
  for (std::size_t i = 1; i < marks.r_peaks.size(); ++i)
    CHECK(1000.0 * (marks.r_peaks[i] - marks.r_peaks[i - 1]) / sig.sampling_rate >= cfg.refractory_ms);
}

TEST_CASE("heart rate is 60 / RR") {
  CHECK(heart_rate({0, 375}, 500) == std::vector<double>{80.0});
  CHECK(heart_rate({0, 250}, 500) == std::vector<double>{120.0});
  CHECK(heart_rate({0, 500, 1000}, 500) == std::vector<double>{60.0, 60.0});
  CHECK(heart_rate({42}, 500).empty());
  CHECK(heart_rate({}, 500).empty());

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> gap(50, 900);
  std::vector<Eigen::Index> peaks{0};
  for (int i = 0; i < 500; ++i) peaks.push_back(peaks.back() + gap(rng));
  auto hr = heart_rate(peaks, 360);
  for (std::size_t i = 0; i < hr.size(); ++i) {
    const double rr = static_cast<double>(peaks[i + 1] - peaks[i]) / 360.0;
    CHECK(std::abs(hr[i] - 60.0 / rr) <= 1e-12);
  }
}

TEST_CASE("extract_features recovers a constructed template") {
  // fs = 500 Hz, 2 ms per sample. Landmarks relative to R (samples):
  //   P +0.15 mV at -80, Q -0.2 mV at -15, S -0.3 mV at +15,
  //   T +0.35 mV at +125 with half-base 40, so half-amplitude at +105 / +145.
  // Expected: QRS = 30 samples = 60 ms, PR = Q - P = 65 samples = 130 ms,
  //           T = 40 samples = 80 ms, ST = 105 - 15 = 90 samples = 180 ms,
  //           RR = 400 samples = 0.8 s, HR = 75 bpm.
  EcgSignal s;
  s.sampling_rate = 500;
  s.samples = Vector<double>::Zero(2000);
  std::vector<Eigen::Index> r_peaks{200, 600, 1000, 1400};
  for (auto r : r_peaks) {
    add_triangle(s.samples, r - 80, 0.15, 15);
    add_triangle(s.samples, r - 15, -0.2, 5);
    add_triangle(s.samples, r, 1.5, 10);
    add_triangle(s.samples, r + 15, -0.3, 5);
    add_triangle(s.samples, r + 125, 0.35, 40);
  }
  auto marks = detect_waves(s);
  CHECK(marks.r_peaks == r_peaks);
  auto feats = extract_features(s, marks);
  REQUIRE(feats.size() == 3);
  const double period_ms = 2.0;
  for (const auto& f : feats) {
    REQUIRE(f.qrs_duration_ms);
    REQUIRE(f.pr_interval_ms);
    REQUIRE(f.t_wave_duration_ms);
    REQUIRE(f.st_segment_ms);
    CHECK(std::abs(*f.qrs_duration_ms - 60.0) <= period_ms);
    CHECK(std::abs(*f.pr_interval_ms - 130.0) <= period_ms);
    CHECK(std::abs(*f.t_wave_duration_ms - 80.0) <= period_ms);
    CHECK(std::abs(*f.st_segment_ms - 180.0) <= period_ms);
    CHECK(*f.rr_interval_s == doctest::Approx(0.8));
    CHECK(*f.heart_rate_bpm == doctest::Approx(75.0));
  }
}

TEST_CASE("extract_features with only R marks leaves other fields absent") {
  EcgSignal s;
  s.sampling_rate = 500;
  s.samples = Vector<double>::Zero(1000);
  s.samples[100] = 1.2;
  s.samples[475] = 1.2;  // RR = 0.75 s
  WaveMarks marks{{100, 475}, {}, {}};
  auto feats = extract_features(s, marks);
  REQUIRE(feats.size() == 1);
  CHECK(*feats[0].rr_interval_s == doctest::Approx(0.75));
  CHECK(*feats[0].heart_rate_bpm == doctest::Approx(80.0));
  CHECK_FALSE(feats[0].qrs_duration_ms);
  CHECK_FALSE(feats[0].pr_interval_ms);
  CHECK_FALSE(feats[0].t_wave_duration_ms);
  CHECK_FALSE(feats[0].st_segment_ms);
  CHECK(extract_features(s, WaveMarks{{100}, {}, {}}).empty());
}

TEST_CASE("feature heart rate agrees with heart_rate op") {
  auto sig = synthesize_ecg({{30, 80}}, SynthOptions{});
  auto ex = extract(sig);
  REQUIRE(ex.features.size() == ex.heart_rate_bpm.size());
  for (std::size_t i = 0; i < ex.features.size(); ++i) CHECK(*ex.features[i].heart_rate_bpm == ex.heart_rate_bpm[i]);
}

TEST_CASE("synthetic 80 bpm recording measures 80 bpm through the full chain") {
  auto sig = synthesize_ecg({{30, 80}}, SynthOptions{});
  auto ex = extract(sig);
  REQUIRE(ex.heart_rate_bpm.size() >= 30);
  for (double hr : ex.heart_rate_bpm) CHECK(std::abs(hr - 80.0) <= 1e-12);
  // normal synthetic beats carry every landmark
  for (const auto& f : ex.features) {
    CHECK(f.qrs_duration_ms);
    CHECK(f.pr_interval_ms);
    CHECK(f.t_wave_duration_ms);
    CHECK(f.st_segment_ms);
  }
  CHECK(ex.coeffs.levels.size() == 2);
  CHECK(ex.coeffs.final_approx().size() == (sig.size() + 3) / 4);
}

TEST_CASE("signal and feature CSV formats") {
  EcgSignal s;
  s.sampling_rate = 360;
  s.samples = random_signal(50, 8);
  std::stringstream buf;
  write_signal_csv(buf, s);
  CHECK(buf.str().rfind("fs=360\n", 0) == 0);
  auto back = read_signal_csv(buf);
  CHECK(back.sampling_rate == 360);
  CHECK(back.samples == s.samples);

  std::stringstream bad("fs=abc\n1.0\n");
  CHECK_THROWS_AS(read_signal_csv(bad), Error);
  std::stringstream bad2("fs=100\n1.0\nxyz\n");
  CHECK_THROWS_AS(read_signal_csv(bad2), Error);

  std::vector<BeatFeatures> feats(2);
  feats[0].rr_interval_s = 0.75;
  feats[0].heart_rate_bpm = 80;
  feats[1].qrs_duration_ms = 96;
  std::stringstream fcsv;
  write_features_csv(fcsv, feats);
  CHECK(fcsv.str() == "qrs_ms,t_ms,rr_s,pr_ms,st_ms,hr_bpm\n,,0.75,,,80\n96,,,,,\n");
  auto parsed = read_features_csv(fcsv);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].as_array() == feats[0].as_array());
  CHECK(parsed[1].as_array() == feats[1].as_array());
}
