// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "egw/arrhythmia/beats.hpp"
#include "egw/arrhythmia/metrics.hpp"
#include "egw/common/canonical.hpp"
#include "egw/nn/model.hpp"

namespace egw::arrhythmia {

/// Network shape. Dropout values are drop rates, so a unit is kept with
/// probability 1 - rate.
struct ModelConfig {
  int input_length = kBeatLength;
  int input_channels = 1;
  int conv_filters = 64;
  int receptive_field = 2;
  int stride = 1;
  double conv_dropout = 0.4;
  int pool_size = 2;
  int num_conv_layers = 2;
  int fc_neurons = 512;
  double fc_dropout = 0.2;
  int output_classes = kNumClasses;

  bool operator==(const ModelConfig&) const = default;
  void validate() const;
};

Json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are a config error.
ModelConfig config_from_json(const Json& j);

enum class Precision { F64, F32 };
std::string_view to_string(Precision p);
Precision precision_from_string(std::string_view s);

/// Sequence length reaching the flatten layer.
int flattened_length(const ModelConfig& c);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;            // mean over the epoch's batches
  double validation_accuracy = -1;  // -1 without a validation split
  double seconds = 0;
};

struct TrainOptions {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  Precision precision = Precision::F64;
  double time_budget_s = 0;  // stop after the epoch that exceeds it; 0 = none
  std::function<void(const EpochLog&)> on_epoch;
};

class TrainedModel {
 public:
  TrainedModel(const ModelConfig& config, Precision precision, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Precision precision() const { return precision_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<EpochLog> history;
  Json summary = Json::object();  // stored in the model file header

  /// Class index per beat, in inference mode. Beats must have input_length samples.
  std::vector<int> predict(std::span<const std::vector<double>> beats) const;
  std::vector<int> predict(const std::vector<BeatRecord>& records) const;
  /// Softmax probabilities per beat.
  std::vector<std::vector<double>> probabilities(std::span<const std::vector<double>> beats) const;

  /// Trainable parameters then running statistics, in layer order.
  std::vector<std::pair<std::string, std::size_t>> layout() const;
  std::vector<double> flat_weights() const;
  void set_flat_weights(std::span<const double> values);

  template <class F>
  decltype(auto) visit(F&& f) {
    return std::visit(std::forward<F>(f), net_);
  }
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), net_);
  }

 private:
  ModelConfig config_;
  Precision precision_;
  std::uint64_t seed_;
  std::variant<nn::Sequential<double>, nn::Sequential<float>> net_;
};

/// Builds the network for `config` and draws initial weights from `seed`.
TrainedModel build_model(const ModelConfig& config, Precision precision, std::uint64_t seed);

/// Mini-batch SGD on softmax cross-entropy. With validation_fraction > 0 a
/// stratified part of `records` is held out and scored after every epoch.
/// Reproducible for a given seed on a given platform.
TrainedModel train_model(const std::vector<BeatRecord>& records, const ModelConfig& config,
                         const TrainOptions& options);

Metrics evaluate(const TrainedModel& model, const std::vector<BeatRecord>& records);

inline constexpr int kModelFormatVersion = 1;

/// File: "EGW1", u32 LE header length, canonical JSON header (config, seed,
/// precision, summary, layout, format_version), f64 LE weight blocks, u32 LE
/// CRC-32 of everything before it.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);
/// As above, and the stored config must equal `expected`.
TrainedModel load_model(const std::filesystem::path& path, const ModelConfig& expected);

Bytes serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(ByteView data);

}  // namespace egw::arrhythmia
