// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "egw/common/canonical.hpp"
#include "egw/dsp/features.hpp"

namespace egw::triage {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// z-score scaling fitted on training features. Absent beat features are
/// imputed as 0 after scaling, i.e. at the training mean.
struct Standardizer {
  VectorXd mean;
  VectorXd scale;  // standard deviation, 1 where it is 0

  static Standardizer fit(const std::vector<dsp::BeatFeatures>& rows);
  static Standardizer fit(const MatrixXd& rows);  // one example per row
  VectorXd transform(const dsp::BeatFeatures& f) const;
  VectorXd transform(const VectorXd& x) const;
  MatrixXd transform(const std::vector<dsp::BeatFeatures>& rows) const;
};

struct LinearSvmModel {
  VectorXd weights;
  double bias = 0;
  double lambda = 1e-2;
};

struct SvmOptions {
  double lambda = 1e-2;
  int epochs = 50;
  std::uint64_t seed = 1;
  bool project = true;  // keep ||w|| <= 1/sqrt(lambda)
};

/// Pegasos: hinge-loss subgradient steps with rate 1/(lambda t) over shuffled
/// epochs; the bias is unregularised. Labels must be -1 or +1.
LinearSvmModel svm_train(const MatrixXd& x, const std::vector<int>& labels, const SvmOptions& opt = {});

struct SvmPrediction {
  int label;      // sign(margin), with sign(0) = +1
  double margin;  // w.x + b
};

SvmPrediction svm_predict(const LinearSvmModel& model, const VectorXd& x);

struct GaussianNbModel {
  std::vector<int> classes;  // ascending
  MatrixXd means;            // class x feature
  MatrixXd variances;        // floored
  VectorXd log_priors;
  double variance_floor = 1e-9;
};

GaussianNbModel nb_train(const MatrixXd& x, const std::vector<int>& labels, double variance_floor = 1e-9);

struct NbPrediction {
  int label;
  VectorXd log_likelihoods;  // log prior + log density per class, in model.classes order
};

NbPrediction nb_predict(const GaussianNbModel& model, const VectorXd& x);

/// Normal/abnormal screen on beat features: a standardiser and either classifier.
/// Label +1 means abnormal.
struct BinaryScreen {
  Standardizer standardizer;
  std::variant<LinearSvmModel, GaussianNbModel> model;

  bool abnormal(const dsp::BeatFeatures& f) const;
};

Json to_json(const LinearSvmModel& m);
Json to_json(const GaussianNbModel& m);
Json to_json(const Standardizer& s);
/// {"kind": "svm" | "nb", "model": {...}, "standardizer": {...}}
Json to_json(const BinaryScreen& s);
/// Format error on a malformed document.
BinaryScreen screen_from_json(const Json& j);

}  // namespace egw::triage
