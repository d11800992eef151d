// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "egw/arrhythmia/beats.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/hash.hpp"
#include "egw/dsp/io.hpp"
#include "egw/dsp/synth.hpp"

namespace fs = std::filesystem;
using namespace egw;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "egw_cli_e2e";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run_egw(const std::string& args) {
  const auto o = work() / "stdout.txt", e = work() / "stderr.txt";
  const std::string cmd = std::string(EGW_BINARY) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

std::string p(const fs::path& x) { return x.string(); }

const fs::path& beats_csv(const char* name, std::size_t per_class, std::uint64_t seed) {
  static std::map<std::string, fs::path> made;
  auto& path = made[name];
  if (path.empty()) {
    path = work() / name;
    std::ofstream out(path);
    arrhythmia::write_beats(out, arrhythmia::synthetic_beats({per_class, per_class, per_class, per_class, per_class}, seed));
  }
  return path;
}

fs::path signal_csv() {
  const auto path = work() / "ecg.csv";
  if (!fs::exists(path)) {
    dsp::SynthOptions o;
    o.noise_mv = 0.02;
    o.seed = 4;
    dsp::write_signal_csv(path, dsp::synthesize_ecg({{40, 72, dsp::BeatMorphology::normal()},
                                                     {20, 130, dsp::BeatMorphology::ventricular()},
                                                     {25, 72, dsp::BeatMorphology::normal()}},
                                                    o));
  }
  return path;
}

const fs::path& trained_model() {
  static const fs::path path = [] {
    const auto r = run_egw("train --data " + p(beats_csv("train.csv", 40, 1)) +
                       " --epochs 3 --batch-size 32 --seed 7 --out " + p(work() / "model_shared"));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return work() / "model_shared" / "model.egw";
  }();
  return path;
}

Json json_file(const fs::path& f) {
  std::ifstream in(f);
  REQUIRE(in.good());
  return Json::parse(in);
}

}  // namespace

TEST_CASE("top level: help, version, usage errors") {
  auto r = run_egw("--help");
  CHECK(r.code == 0);
  for (const char* verb : {"ecg-extract", "train", "eval", "infer", "simulate-market", "bench-crypto", "gateway-run"})
    CHECK_MESSAGE(r.out.find(verb) != std::string::npos, verb);
  CHECK(run_egw("--version").code == 0);
  CHECK(run_egw("").code == 2);
  CHECK(run_egw("frobnicate").code == 2);
  CHECK(run_egw("train --data x.csv --out o --no-such-flag").code == 2);
  CHECK(run_egw("bench-crypto --iterations notanumber --out o").code == 2);
}

TEST_CASE("every verb documents its flags") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"ecg-extract", {"--signal", "--synth-hr", "--synth-seconds", "--sampling-rate", "--config", "--dwt-levels",
                       "--r-threshold", "--seed", "--out"}},
      {"train", {"--data", "--config", "--epochs", "--batch-size", "--lr", "--momentum", "--validation", "--precision",
                 "--sampling", "--subset", "--time-budget", "--seed", "--out"}},
      {"eval", {"--model", "--data", "--sampling", "--out"}},
      {"infer", {"--model", "--data", "--signal", "--out"}},
      {"simulate-market", {"--scenario", "--traces", "--steps", "--participants", "--batches", "--suite", "--seed",
                           "--out"}},
      {"bench-crypto", {"--suite", "--iterations", "--seed", "--out"}},
      {"gateway-run", {"--signal", "--config", "--out", "--seed", "--threaded"}},
      {"gateway run", {"--signal", "--config", "--out", "--seed", "--threaded"}},
  };
  for (const auto& [verb, list] : flags) {
    const auto r = run_egw(verb + " --help");
    CHECK_MESSAGE(r.code == 0, verb);
    std::size_t listed = 0;
    for (std::size_t pos = r.out.find("  --"); pos != std::string::npos; pos = r.out.find("  --", pos + 1)) ++listed;
    for (const auto& f : list) CHECK_MESSAGE(r.out.find(f) != std::string::npos, verb << " " << f);
    CHECK_MESSAGE(listed == list.size(), verb);  // nothing undocumented, nothing hidden
  }
}

TEST_CASE("ecg-extract") {
  const auto out = work() / "extract";
  auto r = run_egw("ecg-extract --synth-hr 80 --synth-seconds 20 --seed 3 --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = json_file(out / "extraction.json");
  CHECK(j["mean_heart_rate_bpm"].get<double>() == doctest::Approx(80.0).epsilon(1e-3));
  CHECK(j["dwt"]["payload_reduction"] == 0.75);
  CHECK(slurp(out / "features.csv").rfind("qrs_ms,t_ms,rr_s,pr_ms,st_ms,hr_bpm", 0) == 0);

  // the synthesized recording read back gives the same extraction
  const auto again = work() / "extract2";
  r = run_egw("ecg-extract --signal " + p(out / "signal.csv") + " --out " + p(again));
  REQUIRE(r.code == 0);
  CHECK(slurp(again / "extraction.json") == slurp(out / "extraction.json"));

  // config file overrides defaults, an explicit flag overrides the config
  const auto cfg = work() / "extract.json";
  std::ofstream(cfg) << R"({"dwt_levels": 3, "r_threshold_mv": 0.9})";
  r = run_egw("ecg-extract --signal " + p(out / "signal.csv") + " --config " + p(cfg) + " --out " + p(work() / "ex3"));
  REQUIRE(r.code == 0);
  CHECK(json_file(work() / "ex3" / "extraction.json")["dwt"]["levels"] == 3);
  r = run_egw("ecg-extract --signal " + p(out / "signal.csv") + " --config " + p(cfg) + " --dwt-levels 1 --out " +
          p(work() / "ex4"));
  REQUIRE(r.code == 0);
  CHECK(json_file(work() / "ex4" / "extraction.json")["dwt"]["levels"] == 1);

  CHECK(run_egw("ecg-extract --out " + p(work() / "ex5")).code == 2);
  r = run_egw("ecg-extract --signal " + p(work() / "absent.csv") + " --out " + p(work() / "ex6"));
  CHECK(r.code == 1);
  CHECK(r.err.find("absent.csv") != std::string::npos);
  CHECK(r.err.find("load signal") != std::string::npos);
}

TEST_CASE("train is reproducible per seed and honours its config") {
  const auto data = p(beats_csv("train.csv", 40, 1));
  const auto a = work() / "train_a", b = work() / "train_b", c = work() / "train_c";
  for (const auto& dir : {a, b})
    REQUIRE(run_egw("train --data " + data + " --config default --epochs 2 --seed 7 --out " + p(dir)).code == 0);
  CHECK(slurp(a / "model.egw") == slurp(b / "model.egw"));
  REQUIRE(run_egw("train --data " + data + " --epochs 2 --seed 8 --out " + p(c)).code == 0);
  CHECK(slurp(a / "model.egw") != slurp(c / "model.egw"));

  const auto cfg = work() / "train.json";
  std::ofstream(cfg) << R"({"model": {"fc_neurons": 32}, "train": {"epochs": 1, "subset": 0.5, "seed": 3}})";
  const auto d = work() / "train_d";
  auto r = run_egw("train --data " + data + " --config " + p(cfg) + " --epochs 2 --out " + p(d));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto log = json_file(d / "training.json");
  CHECK(log["model"]["fc_neurons"] == 32);
  CHECK(log["options"]["epochs"] == 2);  // flag beats config
  CHECK(log["options"]["seed"] == 3);    // config beats default
  CHECK(log["history"].size() == 2);
  CHECK(log["trained_on"]["N"] == 20);

  std::ofstream(work() / "bad.json") << R"({"train": {"epoch": 1}})";
  r = run_egw("train --data " + data + " --config " + p(work() / "bad.json") + " --out " + p(work() / "train_e"));
  CHECK(r.code == 1);
  CHECK(r.err.find("epoch") != std::string::npos);
  r = run_egw("train --data " + p(work() / "missing_beats.csv") + " --out " + p(work() / "train_f"));
  CHECK(r.code == 1);
  CHECK(r.err.find("missing_beats.csv") != std::string::npos);
}

TEST_CASE("eval writes metrics with macro and weighted rows") {
  const auto out = work() / "eval";
  const auto r = run_egw("eval --model " + p(trained_model()) + " --data " + p(beats_csv("test.csv", 20, 2)) + " --out " +
                     p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto m = json_file(out / "metrics.json");
  for (const char* key : {"accuracy", "macro_avg", "weighted_avg", "per_class", "confusion_matrix"})
    CHECK_MESSAGE(m.contains(key), key);
  CHECK(m["total"] == 100);
  CHECK(m["accuracy"].get<double>() > 0.5);
  CHECK(r.out.find("macro") != std::string::npos);
  CHECK(fs::exists(out / "report.txt"));

  const auto bad = run_egw("eval --model " + p(work() / "nope.egw") + " --data x.csv --out " + p(out));
  CHECK(bad.code == 1);
  CHECK(bad.err.find("nope.egw") != std::string::npos);
}

TEST_CASE("infer on beats and on a recording") {
  auto r = run_egw("infer --model " + p(trained_model()) + " --data " + p(beats_csv("test.csv", 20, 2)) + " --out " +
               p(work() / "infer_beats"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(json_file(work() / "infer_beats" / "summary.json")["beats"] == 100);
  const auto csv = slurp(work() / "infer_beats" / "predictions.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);

  r = run_egw("infer --model " + p(trained_model()) + " --signal " + p(signal_csv()) + " --out " +
          p(work() / "infer_sig"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(work() / "infer_sig" / "predictions.csv").rfind("index,r_peak,label,class", 0) == 0);
  CHECK(json_file(work() / "infer_sig" / "summary.json")["beats"].get<int>() > 50);

  CHECK(run_egw("infer --model " + p(trained_model()) + " --out " + p(work() / "infer_x")).code == 2);
}

TEST_CASE("simulate-market: random traces and a scenario") {
  const auto out = work() / "market";
  auto r = run_egw("simulate-market --traces 20 --seed 5 --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto s = json_file(out / "summary.json");
  CHECK(s["traces"] == 20);
  CHECK(s["units_conserved"] == 20);
  CHECK(s["quiesced"] == 20);
  CHECK(s["replay_equal"] == 20);
  const auto first = slurp(out / "trace.ndjson");
  REQUIRE(run_egw("simulate-market --traces 20 --seed 5 --out " + p(out)).code == 0);
  CHECK(slurp(out / "trace.ndjson") == first);

  const auto sc = work() / "scenario.json";
  std::ofstream(sc) << R"({"seed": 2, "participants": [
      {"id": "alice", "gateway": "gw0", "balance": 0}, {"id": "bob", "gateway": "gw1", "balance": 50}],
    "batches": [{"id": "b1", "owner": "alice", "data_type": "ecg", "min_deposit": 10, "plaintext": "hello"}],
    "operations": [{"op": "request", "buyer": "bob", "batch": "b1", "deposit": 10}, {"op": "settle"},
                   {"op": "deliver", "deal": "deal-1"}, {"op": "finalize", "deal": "deal-1", "satisfied": true}]})";
  r = run_egw("simulate-market --scenario " + p(sc) + " --out " + p(work() / "market_sc"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto ss = json_file(work() / "market_sc" / "summary.json");
  CHECK(ss["operations"] == 4);
  CHECK(ss["replay_equal"] == true);
  CHECK(json_file(work() / "market_sc" / "state.json").dump().find("\"Finalized\"") != std::string::npos);

  std::ofstream(work() / "bad_sc.json") << R"({"operations": [{"op": "teleport"}]})";
  r = run_egw("simulate-market --scenario " + p(work() / "bad_sc.json") + " --out " + p(work() / "market_bad"));
  CHECK(r.code == 1);
  CHECK(r.err.find("scenario") != std::string::npos);
}

TEST_CASE("bench-crypto report structure") {
  const auto out = work() / "bench";
  const auto r = run_egw("bench-crypto --iterations 3 --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = json_file(out / "bench.json");
  for (const char* suite : {"classical", "pq"}) {
    const auto& rows = j["suites"][suite]["rows"];
    REQUIRE(rows.size() == 6);
    for (const auto& row : rows) {
      CHECK(row["iterations"] == 3);
      CHECK(row["unit"] == "ms");
      CHECK(row["min_ms"].get<double>() <= row["max_ms"].get<double>());
    }
  }
  CHECK(run_egw("bench-crypto --suite rsa --out " + p(out)).code == 1);
}

TEST_CASE("gateway run: both spellings, determinism, config and stage errors") {
  const auto a = work() / "gw_a", b = work() / "gw_b", c = work() / "gw_c";
  const auto cfg = work() / "gw.json";
  std::ofstream(cfg) << R"({"cnn": {"bootstrap": {"windows_per_class": 40, "epochs": 1}}, "seed": 9})";
  auto r = run_egw("gateway run --signal " + p(signal_csv()) + " --config " + p(cfg) + " --out " + p(a));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = run_egw("gateway-run --signal " + p(signal_csv()) + " --config " + p(cfg) + " --threaded --out " + p(b));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto events = slurp(a / "events.ndjson");
  CHECK(events == slurp(b / "events.ndjson"));
  CHECK(events.find("\"kind\":\"alert\"") != std::string::npos);
  CHECK(events.find("\"kind\":\"block_committed\"") != std::string::npos);
  const auto summary = json_file(a / "summary.json");
  CHECK(summary["chain_height"].get<int>() >= 2);
  CHECK(summary["event_log_sha256"] == to_hex(hash::sha256(as_bytes(events))));

  r = run_egw("gateway run --signal " + p(signal_csv()) + " --config " + p(cfg) + " --seed 10 --out " + p(c));
  REQUIRE(r.code == 0);
  CHECK(slurp(c / "chain.ndjson") != slurp(a / "chain.ndjson"));  // flag seed beats config seed

  std::ofstream(work() / "gw_bad.json") << R"({"batch": {"period": 5}})";
  r = run_egw("gateway run --signal " + p(signal_csv()) + " --config " + p(work() / "gw_bad.json") + " --out " + p(c));
  CHECK(r.code == 1);
  CHECK(r.err.find("period") != std::string::npos);

  std::ofstream(work() / "gw_rate.json") << R"({"sampling_rate": 360, "cnn": {"bootstrap": {"windows_per_class": 40, "epochs": 1}}})";
  r = run_egw("gateway run --signal " + p(signal_csv()) + " --config " + p(work() / "gw_rate.json") + " --out " + p(c));
  CHECK(r.code == 1);
  CHECK(r.err.find("monitor:") != std::string::npos);

  CHECK(run_egw("gateway run --config " + p(cfg) + " --out " + p(c)).code == 2);
  CHECK(run_egw("gateway --out " + p(c)).code == 2);
}
