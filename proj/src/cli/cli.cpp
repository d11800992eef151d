// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <map>
#include <set>
#include <sstream>

#include "egw/access/bench.hpp"
#include "egw/arrhythmia/beats.hpp"
#include "egw/arrhythmia/metrics.hpp"
#include "egw/arrhythmia/model.hpp"
#include "egw/common/error.hpp"
#include "egw/common/random.hpp"
#include "egw/dsp/extract.hpp"
#include "egw/dsp/io.hpp"
#include "egw/dsp/synth.hpp"
#include "egw/gateway/pipeline.hpp"
#include "egw/market/sim.hpp"

namespace egw::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs fn, prefixing any egw::Error with the step name.
template <class F>
decltype(auto) step(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  }
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorKind::Io, "write failed: " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Config, where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) require(ok.contains(k), ErrorKind::Config, where + ": unknown key '" + k + "'");
}

// Config value unless the flag was given on the command line.
template <class T>
void merge(const Json& j, const char* key, T& value, const CLI::Option* flag) {
  if (!j.contains(key) || (flag != nullptr && flag->count() > 0)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
  }
}

// ---- ecg-extract -----------------------------------------------------------

struct ExtractArgs {
  std::string signal, config, out;
  double synth_hr = 0;
  double synth_seconds = 10;
  int sampling_rate = 500;
  int dwt_levels = 2;
  double r_threshold = 1.0;
  std::uint64_t seed = 1;
  CLI::Option *dwt_flag = nullptr, *r_flag = nullptr, *hr_flag = nullptr, *fs_flag = nullptr, *secs_flag = nullptr;
};

Json extraction_json(const dsp::EcgSignal& sig, const dsp::Extraction& ex) {
  Json bands = Json::array();
  for (std::size_t l = 0; l < ex.coeffs.levels.size(); ++l)
    bands.push_back({{"approx", ex.coeffs.levels[l].approx.size()},
                     {"detail", ex.coeffs.levels[l].detail.size()},
                     {"level", l + 1}});
  const auto& hr = ex.heart_rate_bpm;
  const double mean_hr = hr.empty() ? 0.0 : std::accumulate(hr.begin(), hr.end(), 0.0) / static_cast<double>(hr.size());
  return Json{{"beats", ex.features.size()},
              {"duration_s", static_cast<double>(sig.size()) / sig.sampling_rate},
              {"dwt",
               {{"bands", bands},
                {"levels", ex.coeffs.levels.size()},
                {"payload_reduction",
                 dsp::coeff_payload_reduction(sig.size(), static_cast<int>(ex.coeffs.levels.size()))},
                {"wavelet", ex.coeffs.wavelet_id}}},
              {"heart_rate_bpm", hr},
              {"mean_heart_rate_bpm", hr.empty() ? Json(nullptr) : Json(mean_hr)},
              {"p_peaks", ex.marks.p_peaks},
              {"r_peaks", ex.marks.r_peaks},
              {"samples", sig.size()},
              {"sampling_rate", sig.sampling_rate},
              {"t_peaks", ex.marks.t_peaks}};
}

int cmd_extract(ExtractArgs& a, std::ostream& out) {
  dsp::ExtractionConfig cfg;
  if (!a.config.empty()) {
    const Json j = step("load config", [&] { return read_json(a.config); });
    step("load config", [&] {
      only_keys(j,
                {"band_high_hz", "band_low_hz", "dwt_levels", "ma_window", "p_threshold_mv", "r_threshold_mv",
                 "refractory_ms", "sampling_rate", "synth_hr", "synth_seconds", "t_threshold_mv"},
                "extract config");
      merge(j, "dwt_levels", a.dwt_levels, a.dwt_flag);
      merge(j, "r_threshold_mv", a.r_threshold, a.r_flag);
      merge(j, "synth_hr", a.synth_hr, a.hr_flag);
      merge(j, "synth_seconds", a.synth_seconds, a.secs_flag);
      merge(j, "sampling_rate", a.sampling_rate, a.fs_flag);
      merge(j, "band_low_hz", cfg.filter.band_low_hz, nullptr);
      merge(j, "band_high_hz", cfg.filter.band_high_hz, nullptr);
      merge(j, "ma_window", cfg.filter.ma_window, nullptr);
      merge(j, "p_threshold_mv", cfg.detection.p_threshold_mv, nullptr);
      merge(j, "t_threshold_mv", cfg.detection.t_threshold_mv, nullptr);
      merge(j, "refractory_ms", cfg.detection.refractory_ms, nullptr);
      return 0;
    });
  }
  if (a.signal.empty() == (a.synth_hr <= 0)) throw UsageError("give exactly one of --signal or --synth-hr");
  cfg.dwt_levels = a.dwt_levels;
  cfg.detection.r_threshold_mv = a.r_threshold;

  const auto dir = prepare_out(a.out);
  dsp::EcgSignal sig;
  if (!a.signal.empty()) {
    sig = step("load signal", [&] { return dsp::read_signal_csv(a.signal); });
  } else {
    sig = step("synthesize", [&] {
      require(a.synth_seconds > 0 && a.sampling_rate > 0, ErrorKind::Parameter,
              "--synth-seconds and --sampling-rate must be positive");
      dsp::SynthOptions o;
      o.sampling_rate = a.sampling_rate;
      o.noise_mv = 0.02;
      o.seed = a.seed;
      return dsp::synthesize_ecg({{a.synth_seconds, a.synth_hr, dsp::BeatMorphology::normal()}}, o);
    });
    dsp::write_signal_csv(dir / "signal.csv", sig);
  }
  const auto ex = step("extract", [&] { return dsp::extract(sig, cfg); });

  std::ostringstream csv;
  dsp::write_features_csv(csv, ex.features);
  write_file(dir / "features.csv", csv.str());
  const Json summary = extraction_json(sig, ex);
  write_json(dir / "extraction.json", summary);
  out << "beats " << ex.features.size() << ", R peaks " << ex.marks.r_peaks.size() << ", mean HR "
      << summary["mean_heart_rate_bpm"].dump() << " bpm -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- train / eval / infer ----------------------------------------------------

struct TrainArgs {
  std::string data, config = "default", out;
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double validation = 0.1;
  std::string precision = "f64";
  std::string sampling = "unbalanced";
  double subset = 1.0;
  double time_budget = 0;
  std::uint64_t seed = 1;
  CLI::Option *epochs_flag = nullptr, *batch_flag = nullptr, *lr_flag = nullptr, *momentum_flag = nullptr,
              *validation_flag = nullptr, *precision_flag = nullptr, *sampling_flag = nullptr,
              *subset_flag = nullptr, *budget_flag = nullptr, *seed_flag = nullptr;
};

Json histogram_json(const arrhythmia::Histogram& h) {
  Json j = Json::object();
  for (std::size_t k = 0; k < arrhythmia::kNumClasses; ++k) j[std::string(arrhythmia::kClassShort[k])] = h[k];
  return j;
}

int cmd_train(TrainArgs& a, std::ostream& out) {
  arrhythmia::ModelConfig model_cfg;
  if (a.config != "default") {
    const Json j = step("load config", [&] { return read_json(a.config); });
    step("load config", [&] {
      only_keys(j, {"model", "train"}, "train config");
      if (j.contains("model")) model_cfg = arrhythmia::config_from_json(j["model"]);
      if (j.contains("train")) {
        const auto& t = j["train"];
        only_keys(t,
                  {"batch_size", "epochs", "learning_rate", "momentum", "precision", "sampling", "seed", "subset",
                   "time_budget_s", "validation_fraction"},
                  "train");
        merge(t, "epochs", a.epochs, a.epochs_flag);
        merge(t, "batch_size", a.batch_size, a.batch_flag);
        merge(t, "learning_rate", a.learning_rate, a.lr_flag);
        merge(t, "momentum", a.momentum, a.momentum_flag);
        merge(t, "validation_fraction", a.validation, a.validation_flag);
        merge(t, "precision", a.precision, a.precision_flag);
        merge(t, "sampling", a.sampling, a.sampling_flag);
        merge(t, "subset", a.subset, a.subset_flag);
        merge(t, "time_budget_s", a.time_budget, a.budget_flag);
        merge(t, "seed", a.seed, a.seed_flag);
      }
      return 0;
    });
  }
  const auto precision = step("options", [&] { return arrhythmia::precision_from_string(a.precision); });
  const auto sampling = step("options", [&] { return arrhythmia::sampling_from_string(a.sampling); });
  if (!(a.subset > 0 && a.subset <= 1)) throw UsageError("--subset must be in (0, 1]");

  const auto dir = prepare_out(a.out);
  auto records = step("load data", [&] { return arrhythmia::load_beats(a.data, model_cfg.input_length); });
  const auto loaded = arrhythmia::class_histogram(records);
  if (a.subset < 1) records = arrhythmia::stratified_split(records, a.subset, a.seed).second;
  records = step("resample", [&] { return arrhythmia::resample(records, {sampling, a.seed}); });

  arrhythmia::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch_size;
  opt.learning_rate = a.learning_rate;
  opt.momentum = a.momentum;
  opt.validation_fraction = a.validation;
  opt.precision = precision;
  opt.seed = a.seed;
  opt.time_budget_s = a.time_budget;
  opt.on_epoch = [&](const arrhythmia::EpochLog& e) {
    out << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.validation_accuracy >= 0) out << " val_acc " << e.validation_accuracy;
    out << " (" << e.seconds << " s)\n";
  };
  const auto model = step("train", [&] { return arrhythmia::train_model(records, model_cfg, opt); });
  step("save model", [&] {
    arrhythmia::save_model(model, dir / "model.egw");
    return 0;
  });

  Json history = Json::array();
  for (const auto& h : model.history)
    history.push_back({{"epoch", h.epoch},
                       {"train_loss", h.train_loss},
                       {"validation_accuracy", h.validation_accuracy >= 0 ? Json(h.validation_accuracy) : Json()}});
  write_json(dir / "training.json",
             Json{{"data", a.data},
                  {"history", history},
                  {"loaded", histogram_json(loaded)},
                  {"model", arrhythmia::config_to_json(model_cfg)},
                  {"options",
                   {{"batch_size", a.batch_size},
                    {"epochs", a.epochs},
                    {"learning_rate", a.learning_rate},
                    {"momentum", a.momentum},
                    {"precision", a.precision},
                    {"sampling", a.sampling},
                    {"seed", a.seed},
                    {"subset", a.subset},
                    {"time_budget_s", a.time_budget},
                    {"validation_fraction", a.validation}}},
                  {"summary", model.summary},
                  {"trained_on", histogram_json(arrhythmia::class_histogram(records))}});
  out << "model -> " << (dir / "model.egw").string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model, data, out, sampling = "unbalanced";
};

int cmd_eval(EvalArgs& a, std::ostream& out) {
  const auto sampling = step("options", [&] { return arrhythmia::sampling_from_string(a.sampling); });
  const auto dir = prepare_out(a.out);
  const auto model = step("load model", [&] { return arrhythmia::load_model(a.model); });
  const auto records = step("load data", [&] { return arrhythmia::load_beats(a.data, model.config().input_length); });
  const auto m = step("evaluate", [&] { return arrhythmia::evaluate(model, records); });
  Json j = arrhythmia::metrics_to_json(m);
  j["data"] = a.data;
  j["model"] = a.model;
  write_json(dir / "metrics.json", j);
  const auto report = arrhythmia::metrics_report(m, sampling);
  write_file(dir / "report.txt", report);
  out << report;
  return kExitOk;
}

struct InferArgs {
  std::string model, data, signal, out;
};

int cmd_infer(InferArgs& a, std::ostream& out) {
  if (a.data.empty() == a.signal.empty()) throw UsageError("give exactly one of --data or --signal");
  const auto dir = prepare_out(a.out);
  const auto model = step("load model", [&] { return arrhythmia::load_model(a.model); });

  std::vector<std::vector<double>> beats;
  std::vector<Eigen::Index> r_peaks;
  if (!a.data.empty()) {
    for (auto& r : step("load data", [&] { return arrhythmia::load_beats(a.data, model.config().input_length); }))
      beats.push_back(std::move(r.samples));
  } else {
    const auto sig = step("load signal", [&] { return dsp::read_signal_csv(a.signal); });
    const auto ex = step("extract", [&] { return dsp::extract(sig); });
    beats = arrhythmia::beat_windows(ex.filtered, ex.marks.r_peaks, model.config().input_length);
    r_peaks.assign(ex.marks.r_peaks.begin(), ex.marks.r_peaks.begin() + static_cast<std::ptrdiff_t>(beats.size()));
  }
  const auto probs = step("infer", [&] { return model.probabilities(beats); });

  std::ostringstream csv;
  csv << "index," << (r_peaks.empty() ? "" : "r_peak,") << "label,class";
  for (auto c : arrhythmia::kClassShort) csv << ",p_" << c;
  csv << "\n";
  arrhythmia::Histogram hist{};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    const auto label = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    ++hist[label];
    csv << i << ',';
    if (!r_peaks.empty()) csv << r_peaks[i] << ',';
    csv << label << ',' << arrhythmia::kClassShort[label];
    for (double v : p) csv << ',' << v;
    csv << "\n";
  }
  write_file(dir / "predictions.csv", csv.str());
  write_json(dir / "summary.json", Json{{"beats", probs.size()}, {"predicted", histogram_json(hist)}});
  out << probs.size() << " beats classified -> " << (dir / "predictions.csv").string() << "\n";
  return kExitOk;
}

// ---- simulate-market ---------------------------------------------------------

struct MarketArgs {
  std::string scenario, out, suite = "classical";
  int traces = 1;
  int steps = 40;
  int participants = 4;
  int batches = 3;
  std::uint64_t seed = 1;
  CLI::Option *seed_flag = nullptr, *suite_flag = nullptr;
};

std::string trace_text(const market::Market& m) {
  std::ostringstream os;
  m.write_trace(os);
  return os.str();
}

bool replays_equal(const market::Market& m, const std::string& suite) {
  return market::Market::replay(access::make_suite(suite), m.chain().blocks()).state_json() == m.state_json();
}

int cmd_market(MarketArgs& a, std::ostream& out) {
  const auto dir = prepare_out(a.out);
  if (!a.scenario.empty()) {
    Json sc = step("load scenario", [&] { return read_json(a.scenario); });
    if (a.seed_flag->count()) sc["seed"] = a.seed;
    if (a.suite_flag->count()) sc["suite"] = a.suite;
    const auto res = step("scenario", [&] { return market::run_scenario(sc); });
    std::string log;
    for (const auto& l : res.log) log += canonical_json(l) + "\n";
    write_file(dir / "log.ndjson", log);
    write_file(dir / "trace.ndjson", trace_text(res.run.market));
    write_json(dir / "state.json", res.run.market.state_json());
    const auto suite = sc.value("suite", std::string("classical"));
    const Json summary{{"accepted", res.run.accepted},
                       {"blocks", res.run.market.chain().size()},
                       {"operations", res.log.size()},
                       {"quiesced", res.run.quiesced},
                       {"replay_equal", replays_equal(res.run.market, suite)},
                       {"units_conserved", res.run.market.total_units() == res.run.market.minted_units()}};
    write_json(dir / "summary.json", summary);
    out << summary.dump() << "\n";
    return kExitOk;
  }

  if (a.traces < 1) throw UsageError("--traces must be >= 1");
  const auto suite = step("options", [&] { return access::make_suite(a.suite); });
  market::TraceOptions opts;
  opts.steps = a.steps;
  opts.participants = a.participants;
  opts.batches = a.batches;
  std::size_t conserved = 0, quiesced = 0, replayed = 0, accepted = 0;
  std::map<std::string, std::size_t> final_states;
  for (int i = 0; i < a.traces; ++i) {
    const auto run = step("trace " + std::to_string(i), [&] {
      return market::run_random_trace(suite, a.seed + static_cast<std::uint64_t>(i), opts);
    });
    const auto minted = run.market.minted_units();
    bool ok = run.market.total_units() == minted;
    for (const auto& op : run.ops) ok = ok && op.total_after == minted;
    conserved += ok;
    quiesced += run.quiesced;
    replayed += replays_equal(run.market, a.suite);
    accepted += run.accepted;
    for (const auto& d : run.market.deals()) ++final_states[std::string(market::to_string(d.state))];
    if (i == 0) {
      write_file(dir / "trace.ndjson", trace_text(run.market));
      write_json(dir / "state.json", run.market.state_json());
    }
  }
  const auto n = static_cast<std::size_t>(a.traces);
  const Json summary{{"accepted_operations", accepted},
                     {"final_deal_states", final_states},
                     {"quiesced", quiesced},
                     {"replay_equal", replayed},
                     {"seed", a.seed},
                     {"suite", a.suite},
                     {"traces", n},
                     {"units_conserved", conserved}};
  write_json(dir / "summary.json", summary);
  out << summary.dump() << "\n";
  require(conserved == n && quiesced == n && replayed == n, ErrorKind::Integrity,
          "market invariant violated, see " + (dir / "summary.json").string());
  return kExitOk;
}

// ---- bench-crypto ------------------------------------------------------------

struct BenchArgs {
  std::string suite = "all", out;
  int iterations = 100;
  std::uint64_t seed = 1;
};

int cmd_bench(BenchArgs& a, std::ostream& out) {
  if (a.iterations < 1) throw UsageError("--iterations must be >= 1");
  std::vector<std::string> names;
  if (a.suite == "all")
    names = {"classical", "pq"};
  else
    names = {a.suite};
  const auto dir = prepare_out(a.out);
  Drbg rng(a.seed);
  Json j = Json::object();
  std::string text;
  for (const auto& name : names) {
    const auto suite = step("options", [&] { return access::make_suite(name); });
    const auto report = step("bench " + name, [&] { return access::bench_crypto(suite, a.iterations, rng); });
    j[name] = report.to_json();
    text += "suite " + name + "\n" + report.to_text() + "\n";
  }
  write_json(dir / "bench.json", Json{{"iterations", a.iterations}, {"seed", a.seed}, {"suites", j}});
  write_file(dir / "bench.txt", text);
  out << text;
  return kExitOk;
}

// ---- gateway run -------------------------------------------------------------

struct GatewayArgs {
  std::string signal, config, out;
  std::uint64_t seed = 1;
  bool threaded = false;
  CLI::Option *seed_flag = nullptr, *threaded_flag = nullptr;
};

void gateway_options(CLI::App* app, GatewayArgs& a) {
  app->add_option("--signal", a.signal, "ECG signal CSV (first line fs=<Hz>, one sample in mV per line)")->required();
  app->add_option("--config", a.config, "gateway config JSON; defaults are used when omitted");
  app->add_option("--out", a.out, "output directory")->required();
  a.seed_flag = app->add_option("--seed", a.seed, "seed for keys and nonces (overrides the config)");
  a.threaded_flag = app->add_flag("--threaded", a.threaded, "run monitor and analyze on their own threads");
}

int cmd_gateway(GatewayArgs& a, std::ostream& out) {
  auto cfg = step("config", [&] {
    return a.config.empty() ? gateway::GatewayConfig{} : gateway::GatewayConfig::load(a.config);
  });
  if (a.seed_flag->count()) cfg.seed = a.seed;
  if (a.threaded_flag->count()) cfg.threaded = a.threaded;
  step("config", [&] {
    cfg.validate();
    return 0;
  });
  const auto sig = step("load signal", [&] { return dsp::read_signal_csv(a.signal); });
  const auto outputs = gateway::run_replay(sig, cfg, prepare_out(a.out));
  const Json summary = read_json(outputs.summary);
  out << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"egw: edge-gateway ECG processing, arrhythmia models, key delivery and data market", "egw"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "egw 0.1.0");

  std::string verb;
  std::function<int()> action;
  auto bind = [&](CLI::App* sub, auto& args, auto fn) {
    auto* a = &args;
    sub->callback([&verb, &action, &out, &app, sub, fn, a] {
      const auto* parent = sub->get_parent();
      verb = parent != &app ? parent->get_name() + " " + sub->get_name() : sub->get_name();
      action = [&out, fn, a] { return fn(*a, out); };
    });
  };

  ExtractArgs ex;
  auto* extract = app.add_subcommand("ecg-extract", "filter, decompose and measure an ECG recording");
  extract->add_option("--signal", ex.signal, "ECG signal CSV (first line fs=<Hz>)");
  ex.hr_flag = extract->add_option("--synth-hr", ex.synth_hr, "synthesize a recording at this heart rate instead");
  ex.secs_flag = extract->add_option("--synth-seconds", ex.synth_seconds, "length of the synthesized recording");
  ex.fs_flag = extract->add_option("--sampling-rate", ex.sampling_rate, "sampling rate of the synthesized recording");
  extract->add_option("--config", ex.config, "extraction config JSON (filter, wavelet and detection settings)");
  ex.dwt_flag = extract->add_option("--dwt-levels", ex.dwt_levels, "db4 decomposition levels");
  ex.r_flag = extract->add_option("--r-threshold", ex.r_threshold, "R-peak threshold in mV");
  extract->add_option("--seed", ex.seed, "noise seed for --synth-hr");
  extract->add_option("--out", ex.out, "output directory")->required();
  bind(extract, ex, cmd_extract);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train the beat classifier");
  train->add_option("--data", tr.data, "beat CSV: 187 samples then the class label per row")->required();
  train->add_option("--config", tr.config, "'default' or a JSON file with \"model\" and \"train\" sections");
  tr.epochs_flag = train->add_option("--epochs", tr.epochs, "training epochs");
  tr.batch_flag = train->add_option("--batch-size", tr.batch_size, "mini-batch size");
  tr.lr_flag = train->add_option("--lr", tr.learning_rate, "learning rate");
  tr.momentum_flag = train->add_option("--momentum", tr.momentum, "SGD momentum");
  tr.validation_flag = train->add_option("--validation", tr.validation, "stratified validation fraction");
  tr.precision_flag = train->add_option("--precision", tr.precision, "f64 or f32");
  tr.sampling_flag = train->add_option("--sampling", tr.sampling, "unbalanced, oversampled or undersampled");
  tr.subset_flag = train->add_option("--subset", tr.subset, "train on a stratified fraction of the data");
  tr.budget_flag = train->add_option("--time-budget", tr.time_budget, "stop after the epoch that exceeds this many seconds");
  tr.seed_flag = train->add_option("--seed", tr.seed, "seed for weights, shuffling, subsets and dropout");
  train->add_option("--out", tr.out, "output directory")->required();
  bind(train, tr, cmd_train);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score a model on a labelled beat CSV");
  eval->add_option("--model", ev.model, "model file written by train")->required();
  eval->add_option("--data", ev.data, "labelled beat CSV")->required();
  eval->add_option("--sampling", ev.sampling, "strategy whose reference figures are shown alongside");
  eval->add_option("--out", ev.out, "output directory")->required();
  bind(eval, ev, cmd_eval);

  InferArgs in;
  auto* infer = app.add_subcommand("infer", "classify beats from a beat CSV or an ECG recording");
  infer->add_option("--model", in.model, "model file written by train")->required();
  infer->add_option("--data", in.data, "beat CSV (a label column is read and ignored)");
  infer->add_option("--signal", in.signal, "ECG signal CSV; beats are cut at detected R peaks");
  infer->add_option("--out", in.out, "output directory")->required();
  bind(infer, in, cmd_infer);

  MarketArgs mk;
  auto* sim = app.add_subcommand("simulate-market", "run data-market traces or a scripted scenario");
  sim->add_option("--scenario", mk.scenario, "scenario JSON; random traces when omitted");
  sim->add_option("--traces", mk.traces, "number of random traces");
  sim->add_option("--steps", mk.steps, "operations per random trace");
  sim->add_option("--participants", mk.participants, "participants per random trace");
  sim->add_option("--batches", mk.batches, "listed batches per random trace");
  mk.suite_flag = sim->add_option("--suite", mk.suite, "classical or pq");
  mk.seed_flag = sim->add_option("--seed", mk.seed, "seed of the first trace, or the scenario seed");
  sim->add_option("--out", mk.out, "output directory")->required();
  bind(sim, mk, cmd_market);

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench-crypto", "time key generation, encapsulation and signatures");
  bench->add_option("--suite", bn.suite, "classical, pq or all");
  bench->add_option("--iterations", bn.iterations, "timed calls per operation");
  bench->add_option("--seed", bn.seed, "key material seed");
  bench->add_option("--out", bn.out, "output directory")->required();
  bind(bench, bn, cmd_bench);

  GatewayArgs gw;
  auto* gw_run = app.add_subcommand("gateway-run", "replay a recording through the gateway pipeline");
  gateway_options(gw_run, gw);
  bind(gw_run, gw, cmd_gateway);
  auto* gw_group = app.add_subcommand("gateway", "gateway commands");
  gw_group->require_subcommand(1);
  auto* gw_sub = gw_group->add_subcommand("run", "same as gateway-run");
  GatewayArgs gw2;
  gateway_options(gw_sub, gw2);
  bind(gw_sub, gw2, cmd_gateway);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "egw " << verb << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "egw " << verb << ": " << e.what() << " [" << to_string(e.kind()) << "]\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "egw " << verb << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace egw::cli
