// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "egw/arrhythmia/model.hpp"
#include "egw/common/hash.hpp"
#include "egw/dsp/synth.hpp"

using namespace egw;
using namespace egw::arrhythmia;

namespace {

std::vector<BeatRecord> two_class(std::size_t a, std::size_t b) {
  std::vector<BeatRecord> out;
  for (std::size_t i = 0; i < a + b; ++i) out.push_back({std::vector<double>(3, static_cast<double>(i)), i < a ? 0 : 1});
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("egw_test_" + std::to_string(::getpid()) + "_" + name);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an egw::Error");
  return ErrorKind::Parameter;
}

ModelConfig small_config() {
  ModelConfig c;
  c.conv_filters = 8;
  c.fc_neurons = 16;
  return c;
}

}  // namespace

TEST_CASE("read_beats parses rows and rejects malformed input") {
  std::istringstream ok("0.1,0.2,0.3,1\n0.5,0.5,0.5,4.0\n");
  auto r = read_beats(ok, 3);
  REQUIRE(r.size() == 2);
  CHECK(r[1].label == 4);
  CHECK(r[0].samples[2] == 0.3);

  std::istringstream ragged("0.1,0.2,0.3,1\n0.1,0.2,1\n");
  try {
    read_beats(ragged, 3);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::istringstream bad_label("0.1,0.2,0.3,5\n");
  CHECK(kind_of([&] { read_beats(bad_label, 3); }) == ErrorKind::Format);
  std::istringstream frac_label("0.1,0.2,0.3,1.5\n");
  CHECK(kind_of([&] { read_beats(frac_label, 3); }) == ErrorKind::Format);

  std::istringstream empty("");
  auto e = read_beats(empty, 3);
  CHECK(e.empty());
  CHECK(class_histogram(e) == Histogram{});
}

TEST_CASE("standard beat files have the expected class counts") {
  const char* dir = std::getenv("EGW_MITBIH_DIR");
  if (!dir) {
    MESSAGE("EGW_MITBIH_DIR not set; skipping dataset count check");
    return;
  }
  const auto train = load_beats(std::filesystem::path(dir) / "mitbih_train.csv");
  const auto test = load_beats(std::filesystem::path(dir) / "mitbih_test.csv");
  CHECK(class_histogram(train) == Histogram{72471, 2223, 5788, 641, 6431});
  CHECK(class_histogram(test)[0] == 18118);
}

TEST_CASE("resampling strategies") {
  const auto in = two_class(100, 10);
  const auto same = resample(in, {Sampling::Unbalanced, 1});
  REQUIRE(same.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(same[i].samples == in[i].samples);

  auto over = resample(in, {Sampling::Oversampled, 1});
  CHECK(class_histogram(over) == Histogram{100, 100, 0, 0, 0});
  auto under = resample(in, {Sampling::Undersampled, 1});
  CHECK(class_histogram(under) == Histogram{10, 10, 0, 0, 0});

  auto under2 = resample(in, {Sampling::Undersampled, 1});
  for (std::size_t i = 0; i < under.size(); ++i) CHECK(under[i].samples == under2[i].samples);
  auto under3 = resample(in, {Sampling::Undersampled, 2});
  bool differs = false;
  for (std::size_t i = 0; i < under.size(); ++i) differs |= under[i].samples != under3[i].samples;
  CHECK(differs);

  // oversampled copies come from the right class
  for (const auto& r : over)
    if (r.label == 1) CHECK(r.samples[0] >= 100);

  std::vector<BeatRecord> gap{{{0.0}, 0}, {{0.0}, 2}};
  CHECK(kind_of([&] { resample(gap, {Sampling::Oversampled, 1}); }) == ErrorKind::Data);
  CHECK(kind_of([&] { resample({}, {Sampling::Undersampled, 1}); }) == ErrorKind::Data);
}

TEST_CASE("stratified split keeps class proportions") {
  auto recs = synthetic_beats({200, 30, 50, 10, 20}, 3);
  auto s = stratified_split(recs, 0.1, 9);
  CHECK(class_histogram(s.second) == Histogram{20, 3, 5, 1, 2});
  CHECK(s.first.size() + s.second.size() == recs.size());
}

TEST_CASE("metrics against hand arithmetic") {
  // rows true, columns predicted
  Confusion c{{{50, 2, 0, 0, 3}, {4, 30, 1, 0, 0}, {0, 0, 20, 5, 0}, {0, 1, 0, 9, 0}, {2, 0, 0, 0, 8}}};
  auto m = metrics_from_confusion(c);
  CHECK(m.total == 135);
  CHECK(m.overall_accuracy == doctest::Approx(117.0 / 135));
  // class 0: tp 50, fp 6, fn 5, tn 74
  CHECK(m.per_class[0].precision == doctest::Approx(50.0 / 56));
  CHECK(m.per_class[0].recall == doctest::Approx(50.0 / 55));
  CHECK(m.per_class[0].accuracy == doctest::Approx(124.0 / 135));
  CHECK(m.per_class[0].f1 == doctest::Approx(100.0 / 111));
  // class 3: tp 9, fp 5, fn 1
  CHECK(m.per_class[3].precision == doctest::Approx(9.0 / 14));
  CHECK(m.per_class[3].recall == doctest::Approx(0.9));
  CHECK(m.per_class[3].f1 == doctest::Approx(18.0 / 24));
  CHECK(m.per_class[4].support == 10);

  double f1_mean = 0, recall_weighted = 0;
  for (const auto& s : m.per_class) {
    f1_mean += s.f1 / 5;
    recall_weighted += s.recall * static_cast<double>(s.support) / 135;
  }
  CHECK(std::abs(m.macro.f1 - f1_mean) < 1e-12);
  CHECK(m.weighted.recall == doctest::Approx(recall_weighted));
  CHECK(m.weighted.recall == doctest::Approx(m.overall_accuracy));

  std::size_t cells = 0;
  for (std::size_t t = 0; t < 5; ++t) {
    std::size_t row = 0;
    for (auto v : m.confusion[t]) row += v;
    CHECK(row == m.per_class[t].support);
    cells += row;
  }
  CHECK(cells == m.total);

  const auto j = metrics_to_json(m);
  CHECK(j["per_class"]["AP"]["recall"].get<double>() == doctest::Approx(0.9));
  CHECK(canonical_json(j).find("\"confusion_matrix\"") != std::string::npos);
  const auto report = metrics_report(m, Sampling::Unbalanced);
  CHECK(report.find("reference avg") != std::string::npos);
  CHECK(report.find("0.9908") != std::string::npos);
}

TEST_CASE("degenerate metric cases") {
  Confusion zeros{};
  CHECK(kind_of([&] { metrics_from_confusion(zeros); }) == ErrorKind::Data);

  auto all0 = metrics_from_confusion(confusion_matrix({0, 0, 0}, {0, 0, 0}));
  CHECK(all0.overall_accuracy == 1.0);

  std::vector<int> t{0, 1, 2, 3, 4, 4, 2};
  auto perfect = metrics_from_confusion(confusion_matrix(t, t));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 5; ++k)
      if (i != k) CHECK(perfect.confusion[i][k] == 0);
  for (const auto& s : perfect.per_class) {
    CHECK(s.accuracy == 1.0);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  CHECK(perfect.macro.f1 == 1.0);
}

TEST_CASE("default network shape") {
  ModelConfig c;
  CHECK(flattened_length(c) == 47);
  auto m = build_model(c, Precision::F64, 1);
  std::size_t params = 0;
  for (const auto& [name, size] : m.layout()) params += size;
  // bn 2 + conv 2*1*64+64 + conv 2*64*64+64 + dense 3008*512+512 + dense 512*5+5 + bn buffers 2
  CHECK(params == 2 + 192 + 8256 + 1540608 + 2565 + 2);
}

TEST_CASE("training is deterministic and lr 0 keeps the initial weights") {
  const auto recs = synthetic_beats({40, 40, 40, 40, 40}, 5);
  TrainOptions opt;
  opt.epochs = 5;
  opt.seed = 11;
  const ModelConfig c;
  auto a = train_model(recs, c, opt);
  auto b = train_model(recs, c, opt);
  CHECK(a.flat_weights() == b.flat_weights());
  CHECK(a.history.size() == 5);

  opt.learning_rate = 0;
  opt.epochs = 2;
  auto z = train_model(recs, c, opt);
  const auto init = build_model(c, Precision::F64, 11);
  const auto wz = z.flat_weights(), wi = init.flat_weights();
  // trainable blocks come first; running statistics (the tail) do move
  const std::size_t trainable = wz.size() - 2;
  CHECK(std::equal(wz.begin(), wz.begin() + static_cast<std::ptrdiff_t>(trainable), wi.begin()));
}

TEST_CASE("network overfits a small balanced set") {
  const auto recs = synthetic_beats({50, 50, 50, 50, 50}, 17);
  TrainOptions opt;
  opt.epochs = 30;
  opt.validation_fraction = 0;
  opt.seed = 3;
  auto m = train_model(recs, ModelConfig{}, opt);
  const auto metrics = evaluate(m, recs);
  CHECK(metrics.overall_accuracy >= 0.95);
  CHECK(m.history.back().train_loss < m.history.front().train_loss);
}

TEST_CASE("divergence is a training error") {
  auto recs = synthetic_beats({20, 20, 20, 20, 20}, 1);
  TrainOptions opt;
  opt.epochs = 3;
  opt.learning_rate = 1e6;
  CHECK(kind_of([&] { train_model(recs, small_config(), opt); }) == ErrorKind::Training);
}

TEST_CASE("model file roundtrip and failure modes") {
  auto recs = synthetic_beats({10, 10, 10, 10, 10}, 2);
  TrainOptions opt;
  opt.epochs = 1;
  auto m = train_model(recs, ModelConfig{}, opt);
  const auto path = temp_path("model.egw");
  save_model(m, path);
  auto back = load_model(path, ModelConfig{});
  CHECK(back.flat_weights() == m.flat_weights());

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> beats(100, std::vector<double>(kBeatLength));
  for (auto& b : beats)
    for (auto& v : b) v = u(rng);
  CHECK(m.predict(beats) == back.predict(beats));
  CHECK(m.probabilities(beats) == back.probabilities(beats));

  Bytes bytes = serialize_model(m);
  Bytes corrupt = bytes;
  corrupt[corrupt.size() - 100] ^= 0x01;
  CHECK(kind_of([&] { deserialize_model(corrupt); }) == ErrorKind::Checksum);
  Bytes cut(bytes.begin(), bytes.end() - 17);
  CHECK(kind_of([&] { deserialize_model(cut); }) == ErrorKind::Format);
  Bytes magic = bytes;
  magic[3] = '2';
  CHECK(kind_of([&] { deserialize_model(magic); }) == ErrorKind::Format);

  // bump format_version in the header and re-seal the checksum
  Bytes version = bytes;
  const std::string hdr(version.begin(), version.end());
  const auto at = hdr.find("\"format_version\":1");
  REQUIRE(at != std::string::npos);
  version[at + 17] = '9';
  const auto crc = hash::crc32(ByteView(version).first(version.size() - 4));
  for (int i = 0; i < 4; ++i) version[version.size() - 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
  CHECK(kind_of([&] { deserialize_model(version); }) == ErrorKind::Format);

  ModelConfig four = small_config();
  four.output_classes = 4;
  auto m4 = build_model(four, Precision::F64, 1);
  const auto p4 = temp_path("model4.egw");
  save_model(m4, p4);
  CHECK(kind_of([&] { load_model(p4, ModelConfig{}); }) == ErrorKind::ConfigMismatch);
  CHECK(kind_of([&] { evaluate(load_model(p4), recs); }) == ErrorKind::ConfigMismatch);
  std::filesystem::remove(path);
  std::filesystem::remove(p4);
}

TEST_CASE("single precision training and roundtrip") {
  auto recs = synthetic_beats({20, 20, 20, 20, 20}, 4);
  TrainOptions opt;
  opt.epochs = 2;
  opt.precision = Precision::F32;
  auto m = train_model(recs, small_config(), opt);
  CHECK(m.precision() == Precision::F32);
  auto back = deserialize_model(serialize_model(m));
  CHECK(back.precision() == Precision::F32);
  CHECK(back.predict(recs) == m.predict(recs));
}

TEST_CASE("evaluation is deterministic") {
  auto recs = synthetic_beats({10, 10, 10, 10, 10}, 8);
  auto m = build_model(small_config(), Precision::F64, 2);
  CHECK(kind_of([&] { evaluate(m, recs); }) == ErrorKind::State);  // no running statistics yet
  TrainOptions opt;
  opt.epochs = 1;
  auto t = train_model(recs, small_config(), opt);
  CHECK(evaluate(t, recs).confusion == evaluate(t, recs).confusion);
  CHECK(kind_of([&] { evaluate(t, {}); }) == ErrorKind::Data);
}

TEST_CASE("beat windows follow the beat-file layout") {
  dsp::SynthOptions so;
  so.sampling_rate = 360;
  const std::vector<dsp::SynthSegment> seg{{10.0, 75.0, dsp::BeatMorphology::normal()}};
  const auto sig = dsp::synthesize_ecg(seg, so);
  const auto r = dsp::synthetic_r_positions(seg, so.sampling_rate);
  const auto w = beat_windows(sig, r);
  REQUIRE(w.size() == r.size());
  for (const auto& b : w) {
    CHECK(b.size() == static_cast<std::size_t>(kBeatLength));
    CHECK(*std::max_element(b.begin(), b.end()) <= 1.0);
    CHECK(*std::min_element(b.begin(), b.end()) >= 0.0);
  }
  // RR 0.8 s at 125 Hz is 100 samples; the window covers 120, the rest is padding
  CHECK(w[1][119] != 0.0);
  CHECK(w[1][121] == 0.0);
  CHECK(w[1][0] > 0.9);  // starts on the R peak
  CHECK(beat_windows(sig, {r[0]}).empty());
}
