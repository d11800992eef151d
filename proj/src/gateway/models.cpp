// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <fstream>

#include "egw/arrhythmia/beats.hpp"
#include "egw/common/error.hpp"
#include "egw/common/random.hpp"
#include "egw/dsp/extract.hpp"
#include "egw/dsp/synth.hpp"
#include "egw/gateway/pipeline.hpp"

namespace egw::gateway {

namespace {

double unit(Drbg& rng) { return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53; }

dsp::EcgSignal synth_rhythm(bool ventricular, double hr, int fs, std::uint64_t seed) {
  dsp::SynthSegment seg{10.0, hr, ventricular ? dsp::BeatMorphology::ventricular() : dsp::BeatMorphology::normal()};
  dsp::SynthOptions opt;
  opt.sampling_rate = fs;
  opt.noise_mv = 0.02;
  opt.wander_mv = 0.05;
  opt.seed = seed;
  return dsp::synthesize_ecg({seg}, opt);
}

}  // namespace

triage::BinaryScreen bootstrap_screen(const std::string& classifier, std::uint64_t seed, int sampling_rate) {
  Drbg rng(seed);
  std::vector<dsp::BeatFeatures> rows;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const bool ventricular = i % 2 == 1;
    const double hr = ventricular ? 55 + 95 * unit(rng) : 55 + 55 * unit(rng);
    const auto ex = dsp::extract(synth_rhythm(ventricular, hr, sampling_rate, rng.next_u64()));
    for (const auto& f : ex.features) {
      rows.push_back(f);
      labels.push_back(ventricular ? 1 : -1);
    }
  }
  require(!rows.empty(), ErrorKind::Training, "bootstrap screen: no beats extracted");
  triage::BinaryScreen screen{triage::Standardizer::fit(rows), triage::LinearSvmModel{}};
  const auto x = screen.standardizer.transform(rows);
  if (classifier == "svm") {
    triage::SvmOptions opt;
    opt.seed = seed;
    screen.model = triage::svm_train(x, labels, opt);
  } else {
    screen.model = triage::nb_train(x, labels);
  }
  return screen;
}

arrhythmia::TrainedModel bootstrap_cnn(const CnnBootstrap& opts, int sampling_rate) {
  Drbg rng(opts.seed);
  std::vector<arrhythmia::BeatRecord> records;
  for (const bool ventricular : {false, true}) {
    int have = 0;
    while (have < opts.windows_per_class) {
      const double hr = 55 + 75 * unit(rng);
      const auto sig = synth_rhythm(ventricular, hr, sampling_rate, rng.next_u64());
      const auto ex = dsp::extract(sig);
      for (auto& w : arrhythmia::beat_windows(ex.filtered, ex.marks.r_peaks)) {
        if (have == opts.windows_per_class) break;
        records.push_back({std::move(w), ventricular ? 2 : 0});
        ++have;
      }
    }
  }
  const auto n = static_cast<std::size_t>(opts.windows_per_class);
  for (auto& r : arrhythmia::synthetic_beats({0, n, 0, n, n}, opts.seed ^ 0x5eedULL)) records.push_back(std::move(r));

  arrhythmia::TrainOptions t;
  t.epochs = opts.epochs;
  t.batch_size = 32;
  t.learning_rate = 0.01;
  t.seed = opts.seed;
  t.validation_fraction = 0;
  auto model = arrhythmia::train_model(records, arrhythmia::ModelConfig{}, t);
  model.summary["bootstrap"] = {{"epochs", opts.epochs},
                                {"seed", opts.seed},
                                {"windows_per_class", opts.windows_per_class}};
  return model;
}

Models load_models(const GatewayConfig& config) {
  Models m;
  if (!config.triage_model.empty()) {
    std::ifstream in(config.triage_model);
    require(in.good(), ErrorKind::Io, "cannot open triage model '" + config.triage_model + "'");
    try {
      m.screen = triage::screen_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
      fail(ErrorKind::Format, "triage model '" + config.triage_model + "': " + e.what());
    }
  } else {
    m.screen = bootstrap_screen(config.triage_classifier, config.triage_seed, config.sampling_rate);
  }
  if (!config.cnn_model.empty())
    m.cnn = arrhythmia::load_model(config.cnn_model);
  else
    m.cnn = bootstrap_cnn(config.cnn_bootstrap, config.sampling_rate);
  return m;
}

}  // namespace egw::gateway
