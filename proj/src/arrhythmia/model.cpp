// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/arrhythmia/model.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::arrhythmia {
namespace {

constexpr char kMagic[4] = {'E', 'G', 'W', '1'};
constexpr std::size_t kEvalChunk = 512;

template <class S>
nn::Sequential<S> build_network(const ModelConfig& c, std::uint64_t seed) {
  using namespace nn;
  Sequential<S> net(seed);
  net.add(BatchNormLayer<S>(c.input_channels));
  Index channels = c.input_channels;
  for (int i = 0; i < c.num_conv_layers; ++i) {
    net.add(Conv1DLayer<S>(c.receptive_field, channels, c.conv_filters, c.stride, Padding::Same));
    net.add(ActivationLayer<S>(Activation::Relu));
    net.add(DropoutLayer<S>(DropoutSpec(1.0 - c.conv_dropout)));
    net.add(MaxPoolLayer<S>(c.pool_size));
    channels = c.conv_filters;
  }
  net.add(FlattenLayer<S>());
  net.add(DenseLayer<S>(Index{flattened_length(c)} * channels, c.fc_neurons));
  net.add(ActivationLayer<S>(Activation::LeakyRelu));
  net.add(DropoutLayer<S>(DropoutSpec(1.0 - c.fc_dropout)));
  net.add(DenseLayer<S>(c.fc_neurons, c.output_classes));
  net.init(seed);
  return net;
}

template <class S>
nn::Tensor<S> make_batch(const ModelConfig& c, std::span<const std::vector<double>* const> rows) {
  nn::Tensor<S> x({static_cast<nn::Index>(rows.size()), c.input_length, c.input_channels});
  S* out = x.data();
  const auto width = static_cast<std::size_t>(c.input_length) * static_cast<std::size_t>(c.input_channels);
  for (const auto* r : rows) {
    require(r->size() == width, ErrorKind::Shape,
            "model: beat has " + std::to_string(r->size()) + " samples, expected " + std::to_string(width));
    for (double v : *r) *out++ = static_cast<S>(v);
  }
  return x;
}

void put_u32(Bytes& b, std::uint32_t v) { append_u32_le(b, v); }

std::uint32_t get_u32(ByteView b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  require(input_length >= 1 && input_channels >= 1 && conv_filters >= 1 && receptive_field >= 1 && stride >= 1 &&
              pool_size >= 1 && num_conv_layers >= 0 && fc_neurons >= 1 && output_classes >= 2,
          ErrorKind::Config, "model config: sizes must be positive");
  require(conv_dropout >= 0 && conv_dropout < 1 && fc_dropout >= 0 && fc_dropout < 1, ErrorKind::Config,
          "model config: dropout rates must be in [0,1)");
}

Json config_to_json(const ModelConfig& c) {
  return Json{{"conv_dropout", c.conv_dropout},   {"conv_filters", c.conv_filters},
              {"fc_dropout", c.fc_dropout},       {"fc_neurons", c.fc_neurons},
              {"input_channels", c.input_channels}, {"input_length", c.input_length},
              {"num_conv_layers", c.num_conv_layers}, {"output_classes", c.output_classes},
              {"pool_size", c.pool_size},         {"receptive_field", c.receptive_field},
              {"stride", c.stride}};
}

ModelConfig config_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::Config, "model config: expected an object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    require(value.is_number(), ErrorKind::Config, "model config: '" + key + "' must be a number");
    if (key == "input_length") c.input_length = value.get<int>();
    else if (key == "input_channels") c.input_channels = value.get<int>();
    else if (key == "conv_filters") c.conv_filters = value.get<int>();
    else if (key == "receptive_field") c.receptive_field = value.get<int>();
    else if (key == "stride") c.stride = value.get<int>();
    else if (key == "conv_dropout") c.conv_dropout = value.get<double>();
    else if (key == "pool_size") c.pool_size = value.get<int>();
    else if (key == "num_conv_layers") c.num_conv_layers = value.get<int>();
    else if (key == "fc_neurons") c.fc_neurons = value.get<int>();
    else if (key == "fc_dropout") c.fc_dropout = value.get<double>();
    else if (key == "output_classes") c.output_classes = value.get<int>();
    else fail(ErrorKind::Config, "model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string_view to_string(Precision p) { return p == Precision::F64 ? "f64" : "f32"; }

Precision precision_from_string(std::string_view s) {
  if (s == "f64" || s == "double") return Precision::F64;
  if (s == "f32" || s == "float") return Precision::F32;
  fail(ErrorKind::Parameter, "unknown precision '" + std::string(s) + "'");
}

int flattened_length(const ModelConfig& c) {
  nn::Index len = c.input_length;
  for (int i = 0; i < c.num_conv_layers; ++i) {
    len = nn::conv_output_size(len, c.receptive_field, c.stride, nn::Padding::Same);
    len = nn::pool_output_size(len, c.pool_size);
  }
  return static_cast<int>(len);
}

// ---------------------------------------------------------------- TrainedModel

TrainedModel::TrainedModel(const ModelConfig& config, Precision precision, std::uint64_t seed)
    : config_(config), precision_(precision), seed_(seed) {
  config_.validate();
  if (precision == Precision::F64)
    net_ = build_network<double>(config_, seed);
  else
    net_ = build_network<float>(config_, seed);
}

std::vector<std::vector<double>> TrainedModel::probabilities(std::span<const std::vector<double>> beats) const {
  std::vector<std::vector<double>> out;
  out.reserve(beats.size());
  visit([&](const auto& net) {
    using S = typename std::decay_t<decltype(net)>::scalar_type;
    for (std::size_t at = 0; at < beats.size(); at += kEvalChunk) {
      std::vector<const std::vector<double>*> rows;
      for (std::size_t i = at; i < std::min(beats.size(), at + kEvalChunk); ++i) rows.push_back(&beats[i]);
      const auto p = nn::softmax(net.infer(make_batch<S>(config_, rows)).matrix());
      for (nn::Index r = 0; r < p.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(p.cols()));
        for (nn::Index k = 0; k < p.cols(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(p(r, k));
        out.push_back(std::move(row));
      }
    }
  });
  return out;
}

std::vector<int> TrainedModel::predict(std::span<const std::vector<double>> beats) const {
  std::vector<int> out;
  out.reserve(beats.size());
  visit([&](const auto& net) {
    using S = typename std::decay_t<decltype(net)>::scalar_type;
    for (std::size_t at = 0; at < beats.size(); at += kEvalChunk) {
      std::vector<const std::vector<double>*> rows;
      for (std::size_t i = at; i < std::min(beats.size(), at + kEvalChunk); ++i) rows.push_back(&beats[i]);
      const auto logits = net.infer(make_batch<S>(config_, rows));
      for (nn::Index r = 0; r < logits.dim(0); ++r)
        out.push_back(static_cast<int>(nn::softmax_argmax(logits.matrix().row(r))));
    }
  });
  return out;
}

std::vector<int> TrainedModel::predict(const std::vector<BeatRecord>& records) const {
  std::vector<std::vector<double>> beats;
  beats.reserve(records.size());
  for (const auto& r : records) beats.push_back(r.samples);
  return predict(std::span<const std::vector<double>>(beats));
}

std::vector<std::pair<std::string, std::size_t>> TrainedModel::layout() const {
  std::vector<std::pair<std::string, std::size_t>> out;
  auto& self = const_cast<TrainedModel&>(*this);
  self.visit([&](auto& net) {
    for (const auto& p : net.params()) out.emplace_back(p.name, static_cast<std::size_t>(p.size));
    for (const auto& b : net.buffers()) out.emplace_back(b.name, static_cast<std::size_t>(b.size));
  });
  return out;
}

std::vector<double> TrainedModel::flat_weights() const {
  std::vector<double> out;
  auto& self = const_cast<TrainedModel&>(*this);
  self.visit([&](auto& net) {
    for (const auto& p : net.params())
      for (nn::Index i = 0; i < p.size; ++i) out.push_back(static_cast<double>(p.value[i]));
    for (const auto& b : net.buffers())
      for (nn::Index i = 0; i < b.size; ++i) out.push_back(static_cast<double>(b.value[i]));
  });
  return out;
}

void TrainedModel::set_flat_weights(std::span<const double> values) {
  visit([&](auto& net) {
    using S = typename std::decay_t<decltype(net)>::scalar_type;
    std::size_t at = 0;
    auto take = [&](S* dst, nn::Index n) {
      require(at + static_cast<std::size_t>(n) <= values.size(), ErrorKind::Format, "model: too few weights");
      for (nn::Index i = 0; i < n; ++i) dst[i] = static_cast<S>(values[at++]);
    };
    for (const auto& p : net.params()) take(p.value, p.size);
    for (const auto& b : net.buffers()) take(b.value, b.size);
    require(at == values.size(), ErrorKind::Format, "model: too many weights");
    for (auto& l : net.layers())
      if (auto* bn = std::get_if<nn::BatchNormLayer<S>>(&l)) bn->has_running_stats = true;
  });
}

TrainedModel build_model(const ModelConfig& config, Precision precision, std::uint64_t seed) {
  return TrainedModel(config, precision, seed);
}

// ---------------------------------------------------------------- training

TrainedModel train_model(const std::vector<BeatRecord>& records, const ModelConfig& config,
                         const TrainOptions& options) {
  require(!records.empty(), ErrorKind::Data, "train: no records");
  require(options.epochs >= 0 && options.batch_size >= 1, ErrorKind::Parameter, "train: bad epochs or batch size");
  require(options.validation_fraction >= 0 && options.validation_fraction < 1, ErrorKind::Parameter,
          "train: validation fraction must be in [0,1)");
  for (const auto& r : records)
    require(r.label >= 0 && r.label < config.output_classes, ErrorKind::Data,
            "train: label " + std::to_string(r.label) + " outside the model's classes");

  TrainedModel model(config, options.precision, options.seed);
  Split split{records, {}};
  if (options.validation_fraction > 0) split = stratified_split(records, options.validation_fraction, options.seed);
  const auto& train = split.first;
  require(!train.empty(), ErrorKind::Data, "train: validation split left no training records");

  model.visit([&](auto& net) {
    using S = typename std::decay_t<decltype(net)>::scalar_type;
    nn::Sgd<S> opt(static_cast<S>(options.learning_rate), static_cast<S>(options.momentum));
    std::mt19937_64 order_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const auto start = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng() % i]);
      double loss_sum = 0;
      std::size_t batches = 0;
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(options.batch_size)) {
        const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(options.batch_size));
        std::vector<const std::vector<double>*> rows;
        std::vector<int> labels;
        for (std::size_t k = at; k < end; ++k) {
          rows.push_back(&train[order[k]].samples);
          labels.push_back(train[order[k]].label);
        }
        loss_sum += static_cast<double>(nn::backward_and_sgd_step(net, opt, make_batch<S>(config, rows), labels));
        ++batches;
      }
      EpochLog log;
      log.epoch = epoch;
      log.train_loss = loss_sum / static_cast<double>(batches);
      if (!split.second.empty()) log.validation_accuracy = evaluate(model, split.second).overall_accuracy;
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      model.history.push_back(log);
      if (options.on_epoch) options.on_epoch(log);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (options.time_budget_s > 0 && elapsed >= options.time_budget_s) break;
    }
  });

  Json losses = Json::array();
  for (const auto& h : model.history) losses.push_back(h.train_loss);
  model.summary = Json{{"epochs_run", model.history.size()},
                       {"learning_rate", options.learning_rate},
                       {"momentum", options.momentum},
                       {"batch_size", options.batch_size},
                       {"train_loss", losses},
                       {"train_records", train.size()},
                       {"validation_records", split.second.size()}};
  if (!model.history.empty() && model.history.back().validation_accuracy >= 0)
    model.summary["validation_accuracy"] = model.history.back().validation_accuracy;
  return model;
}

Metrics evaluate(const TrainedModel& model, const std::vector<BeatRecord>& records) {
  require(!records.empty(), ErrorKind::Data, "evaluate: empty test set");
  require(model.config().output_classes == kNumClasses, ErrorKind::ConfigMismatch,
          "evaluate: model has " + std::to_string(model.config().output_classes) + " classes, pipeline expects " +
              std::to_string(kNumClasses));
  std::vector<int> truth;
  truth.reserve(records.size());
  for (const auto& r : records) truth.push_back(r.label);
  return metrics_from_confusion(confusion_matrix(truth, model.predict(records)));
}

// ---------------------------------------------------------------- persistence

Bytes serialize_model(const TrainedModel& model) {
  Json layout = Json::array();
  std::size_t count = 0;
  for (const auto& [name, size] : model.layout()) {
    layout.push_back(Json{{"name", name}, {"size", size}});
    count += size;
  }
  const Json header{{"config", config_to_json(model.config())}, {"format_version", kModelFormatVersion},
                    {"layout", layout},  {"precision", to_string(model.precision())},
                    {"seed", model.seed()}, {"summary", model.summary}};
  const std::string text = canonical_json(header);

  Bytes out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  append(out, as_bytes(text));
  const auto weights = model.flat_weights();
  require(weights.size() == count, ErrorKind::State, "model: layout and weights disagree");
  out.reserve(out.size() + 8 * weights.size() + 4);
  for (double w : weights) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, sizeof bits);
    append_u64_le(out, bits);
  }
  put_u32(out, hash::crc32(out));
  return out;
}

TrainedModel deserialize_model(ByteView data) {
  require(data.size() >= 12 && std::memcmp(data.data(), kMagic, 4) == 0, ErrorKind::Format,
          "model file: bad magic or truncated");
  const std::size_t header_len = get_u32(data, 4);
  require(data.size() >= 8 + header_len + 4, ErrorKind::Format, "model file: truncated header");
  Json header;
  try {
    header = Json::parse(data.begin() + 8, data.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string("model file: unreadable header: ") + e.what());
  }
  require(header.is_object() && header.contains("format_version") && header.contains("layout") &&
              header.contains("config"),
          ErrorKind::Format, "model file: header is missing fields");
  const int version = header["format_version"].get<int>();
  require(version == kModelFormatVersion, ErrorKind::Format,
          "model file: format version " + std::to_string(version) + ", reader supports " +
              std::to_string(kModelFormatVersion));

  std::size_t count = 0;
  for (const auto& e : header["layout"]) count += e.at("size").get<std::size_t>();
  const std::size_t expected = 8 + header_len + 8 * count + 4;
  require(data.size() == expected, ErrorKind::Format,
          "model file: " + std::to_string(data.size()) + " bytes, header implies " + std::to_string(expected) +
              " (truncated or padded)");
  const std::uint32_t stored = get_u32(data, expected - 4);
  require(hash::crc32(data.first(expected - 4)) == stored, ErrorKind::Checksum, "model file: checksum mismatch");

  TrainedModel model(config_from_json(header["config"]),
                     precision_from_string(header.value("precision", std::string("f64"))),
                     header.value("seed", std::uint64_t{0}));
  const auto layout = model.layout();
  require(layout.size() == header["layout"].size(), ErrorKind::Format, "model file: layout does not match config");
  for (std::size_t i = 0; i < layout.size(); ++i)
    require(layout[i].first == header["layout"][i]["name"].get<std::string>() &&
                layout[i].second == header["layout"][i]["size"].get<std::size_t>(),
            ErrorKind::Format, "model file: layout entry " + std::to_string(i) + " does not match config");

  std::vector<double> weights(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    const std::size_t at = 8 + header_len + 8 * i;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | data[at + static_cast<std::size_t>(b)];
    std::memcpy(&weights[i], &bits, sizeof bits);
  }
  model.set_flat_weights(weights);
  if (header.contains("summary")) model.summary = header["summary"];
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const Bytes bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "model: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::Io, "model: write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "model: cannot open " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

TrainedModel load_model(const std::filesystem::path& path, const ModelConfig& expected) {
  auto model = load_model(path);
  require(model.config() == expected, ErrorKind::ConfigMismatch,
          "model: stored config " + canonical_json(config_to_json(model.config())) + " differs from expected " +
              canonical_json(config_to_json(expected)));
  return model;
}

}  // namespace egw::arrhythmia
