// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/triage/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "egw/common/error.hpp"

namespace egw::triage {
namespace {

Json vec_json(const VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

void check_rows(const MatrixXd& x, const std::vector<int>& labels, const char* who) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::Shape,
          std::string(who) + ": row count and label count differ");
  require(x.rows() > 0, ErrorKind::Data, std::string(who) + ": no examples");
  require(x.allFinite(), ErrorKind::Data, std::string(who) + ": non-finite feature");
}

}  // namespace

// ---------------------------------------------------------------- standardizer

Standardizer Standardizer::fit(const std::vector<dsp::BeatFeatures>& rows) {
  constexpr auto k = dsp::BeatFeatures::kCount;
  Standardizer s;
  s.mean = VectorXd::Zero(k);
  s.scale = VectorXd::Ones(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> present;
    for (const auto& r : rows)
      if (auto v = r.as_array()[j]) present.push_back(*v);
    if (present.empty()) continue;
    const double mean = std::accumulate(present.begin(), present.end(), 0.0) / static_cast<double>(present.size());
    double var = 0;
    for (double v : present) var += (v - mean) * (v - mean);
    var /= static_cast<double>(present.size());
    s.mean[static_cast<Eigen::Index>(j)] = mean;
    s.scale[static_cast<Eigen::Index>(j)] = var > 0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Standardizer Standardizer::fit(const MatrixXd& rows) {
  require(rows.rows() > 0, ErrorKind::EmptyInput, "standardizer: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  s.scale = ((rows.rowwise() - s.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (auto& v : s.scale)
    if (!(v > 0)) v = 1.0;
  return s;
}

VectorXd Standardizer::transform(const dsp::BeatFeatures& f) const {
  const auto a = f.as_array();
  require(mean.size() == static_cast<Eigen::Index>(a.size()), ErrorKind::Shape, "standardizer: fitted on other features");
  VectorXd out = VectorXd::Zero(mean.size());
  for (Eigen::Index j = 0; j < out.size(); ++j)
    if (auto v = a[static_cast<std::size_t>(j)]) out[j] = (*v - mean[j]) / scale[j];
  return out;
}

VectorXd Standardizer::transform(const VectorXd& x) const {
  require(x.size() == mean.size(), ErrorKind::Shape, "standardizer: dimension mismatch");
  return (x - mean).cwiseQuotient(scale);
}

MatrixXd Standardizer::transform(const std::vector<dsp::BeatFeatures>& rows) const {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), mean.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = transform(rows[i]).transpose();
  return out;
}

// ---------------------------------------------------------------- svm

LinearSvmModel svm_train(const MatrixXd& x, const std::vector<int>& labels, const SvmOptions& opt) {
  check_rows(x, labels, "svm_train");
  require(opt.lambda > 0 && std::isfinite(opt.lambda), ErrorKind::Parameter, "svm_train: lambda must be > 0");
  require(opt.epochs >= 1, ErrorKind::Parameter, "svm_train: epochs must be >= 1");
  bool pos = false, neg = false;
  for (int y : labels) {
    require(y == 1 || y == -1, ErrorKind::Parameter, "svm_train: labels must be -1 or +1");
    (y > 0 ? pos : neg) = true;
  }
  require(pos && neg, ErrorKind::Data, "svm_train: both labels are required");

  LinearSvmModel m;
  m.lambda = opt.lambda;
  m.weights = VectorXd::Zero(x.cols());
  std::mt19937_64 rng(opt.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  const double radius = 1.0 / std::sqrt(opt.lambda);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (opt.lambda * static_cast<double>(t));
      const double y = labels[static_cast<std::size_t>(i)];
      const double margin = y * (m.weights.dot(x.row(i)) + m.bias);
      m.weights *= 1.0 - eta * opt.lambda;
      if (margin < 1) {
        m.weights += eta * y * x.row(i).transpose();
        m.bias += eta * y;
      }
      if (opt.project) {
        const double norm = m.weights.norm();
        if (norm > radius) m.weights *= radius / norm;
      }
    }
  }
  return m;
}

SvmPrediction svm_predict(const LinearSvmModel& model, const VectorXd& x) {
  require(x.size() == model.weights.size(), ErrorKind::Shape,
          "svm_predict: " + std::to_string(x.size()) + " features, model has " + std::to_string(model.weights.size()));
  const double margin = model.weights.dot(x) + model.bias;
  return {margin >= 0 ? 1 : -1, margin};
}

// ---------------------------------------------------------------- naive bayes

GaussianNbModel nb_train(const MatrixXd& x, const std::vector<int>& labels, double variance_floor) {
  check_rows(x, labels, "nb_train");
  require(variance_floor > 0, ErrorKind::Parameter, "nb_train: variance floor must be > 0");
  std::map<int, std::vector<Eigen::Index>> by;
  for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(static_cast<Eigen::Index>(i));
  require(by.size() >= 2, ErrorKind::Data, "nb_train: at least two classes are required");

  GaussianNbModel m;
  m.variance_floor = variance_floor;
  const auto k = static_cast<Eigen::Index>(by.size());
  m.means = MatrixXd::Zero(k, x.cols());
  m.variances = MatrixXd::Zero(k, x.cols());
  m.log_priors = VectorXd::Zero(k);
  Eigen::Index c = 0;
  for (const auto& [label, rows] : by) {
    m.classes.push_back(label);
    const MatrixXd sub = x(rows, Eigen::all);
    m.means.row(c) = sub.colwise().mean();
    m.variances.row(c) = (sub.rowwise() - m.means.row(c)).array().square().colwise().mean().max(variance_floor);
    m.log_priors[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(x.rows()));
    ++c;
  }
  return m;
}

NbPrediction nb_predict(const GaussianNbModel& model, const VectorXd& x) {
  require(x.size() == model.means.cols(), ErrorKind::Shape, "nb_predict: feature dimension mismatch");
  NbPrediction p{model.classes.front(), VectorXd(model.means.rows())};
  for (Eigen::Index c = 0; c < model.means.rows(); ++c) {
    const auto var = model.variances.row(c).array();
    const auto diff = x.transpose().array() - model.means.row(c).array();
    p.log_likelihoods[c] =
        model.log_priors[c] - 0.5 * ((2 * std::numbers::pi * var).log() + diff.square() / var).sum();
  }
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < p.log_likelihoods.size(); ++c)
    if (p.log_likelihoods[c] > p.log_likelihoods[best]) best = c;
  p.label = model.classes[static_cast<std::size_t>(best)];
  return p;
}

bool BinaryScreen::abnormal(const dsp::BeatFeatures& f) const {
  const VectorXd x = standardizer.transform(f);
  if (const auto* svm = std::get_if<LinearSvmModel>(&model)) return svm_predict(*svm, x).label > 0;
  return nb_predict(std::get<GaussianNbModel>(model), x).label > 0;
}

Json to_json(const LinearSvmModel& m) {
  return Json{{"bias", m.bias}, {"lambda", m.lambda}, {"weights", vec_json(m.weights)}};
}

Json to_json(const GaussianNbModel& m) {
  Json means = Json::array(), vars = Json::array();
  for (Eigen::Index c = 0; c < m.means.rows(); ++c) {
    means.push_back(vec_json(m.means.row(c).transpose()));
    vars.push_back(vec_json(m.variances.row(c).transpose()));
  }
  return Json{{"classes", m.classes}, {"log_priors", vec_json(m.log_priors)}, {"means", means},
              {"variance_floor", m.variance_floor}, {"variances", vars}};
}

Json to_json(const Standardizer& s) { return Json{{"mean", vec_json(s.mean)}, {"scale", vec_json(s.scale)}}; }

Json to_json(const BinaryScreen& s) {
  const bool svm = std::holds_alternative<LinearSvmModel>(s.model);
  return Json{{"kind", svm ? "svm" : "nb"},
              {"model", svm ? to_json(std::get<LinearSvmModel>(s.model)) : to_json(std::get<GaussianNbModel>(s.model))},
              {"standardizer", to_json(s.standardizer)}};
}

namespace {

VectorXd json_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixXd json_rows(const Json& j) {
  require(j.is_array() && !j.empty(), ErrorKind::Format, "screen: empty matrix");
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = json_vec(j[r]);
    require(row.size() == m.cols(), ErrorKind::Format, "screen: ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

BinaryScreen screen_from_json(const Json& j) {
  try {
    BinaryScreen s;
    s.standardizer.mean = json_vec(j.at("standardizer").at("mean"));
    s.standardizer.scale = json_vec(j.at("standardizer").at("scale"));
    require(s.standardizer.mean.size() == s.standardizer.scale.size(), ErrorKind::Format,
            "screen: standardizer size mismatch");
    const auto& m = j.at("model");
    const auto kind = j.at("kind").get<std::string>();
    const Eigen::Index d = s.standardizer.mean.size();
    if (kind == "svm") {
      LinearSvmModel svm{json_vec(m.at("weights")), m.at("bias").get<double>(), m.at("lambda").get<double>()};
      require(svm.weights.size() == d, ErrorKind::Format, "screen: weight size mismatch");
      s.model = std::move(svm);
    } else if (kind == "nb") {
      GaussianNbModel nb;
      nb.classes = m.at("classes").get<std::vector<int>>();
      nb.means = json_rows(m.at("means"));
      nb.variances = json_rows(m.at("variances"));
      nb.log_priors = json_vec(m.at("log_priors"));
      nb.variance_floor = m.at("variance_floor").get<double>();
      const auto k = static_cast<Eigen::Index>(nb.classes.size());
      require(nb.means.rows() == k && nb.variances.rows() == k && nb.log_priors.size() == k &&
                  nb.means.cols() == d && nb.variances.cols() == d,
              ErrorKind::Format, "screen: naive Bayes shape mismatch");
      s.model = std::move(nb);
    } else {
      fail(ErrorKind::Format, "screen: unknown kind '" + kind + "'");
    }
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string("screen: ") + e.what());
  }
}

}  // namespace egw::triage
