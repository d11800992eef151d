// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/arrhythmia/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "egw/common/error.hpp"

namespace egw::arrhythmia {
namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

Json scores_json(const ClassScores& s) {
  return Json{{"accuracy", s.accuracy}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
              {"support", s.support}};
}

ClassScores cs(double a, double p, double r, double f) { return {a, p, r, f, 0}; }

// Per-class means of the per-configuration table, columns in Sampling order.
const std::array<std::array<ClassScores, kNumClasses>, 3> kByStrategy{{
    {cs(0.975, 0.983, 0.9915, 0.982), cs(0.992, 0.992, 0.995, 0.980), cs(0.998, 0.990, 0.97, 0.9840),
     cs(0.998, 0.988, 0.995, 0.990), cs(0.997, 0.989, 0.997, 0.997)},
    {cs(0.973, 0.995, 0.960, 0.995), cs(0.990, 0.990, 0.9455, 0.990), cs(0.979, 0.990, 0.995, 0.998),
     cs(0.991, 0.985, 0.991, 0.980), cs(0.997, 0.991, 0.992, 0.998)},
    {cs(0.951, 0.975, 0.983, 0.973), cs(0.984, 0.962, 0.975, 0.980), cs(0.962, 0.980, 0.985, 0.973),
     cs(0.962, 0.978, 0.985, 0.980), cs(0.968, 0.974, 0.984, 0.988)},
}};

std::string fmt(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted) {
  require(truth.size() == predicted.size(), ErrorKind::Shape, "confusion: label count mismatch");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < kNumClasses && predicted[i] >= 0 && predicted[i] < kNumClasses,
            ErrorKind::Data, "confusion: label out of range");
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return c;
}

Metrics metrics_from_confusion(const Confusion& confusion) {
  Metrics m;
  m.confusion = confusion;
  std::size_t correct = 0;
  for (std::size_t t = 0; t < kNumClasses; ++t)
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      m.total += confusion[t][p];
      if (t == p) correct += confusion[t][p];
    }
  require(m.total > 0, ErrorKind::Data, "metrics: empty test set");
  const auto total = static_cast<double>(m.total);
  m.overall_accuracy = static_cast<double>(correct) / total;

  for (std::size_t k = 0; k < kNumClasses; ++k) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row += static_cast<double>(confusion[k][j]);
      col += static_cast<double>(confusion[j][k]);
    }
    const auto tp = static_cast<double>(confusion[k][k]);
    const double fp = col - tp, fn = row - tp, tn = total - tp - fp - fn;
    auto& s = m.per_class[k];
    s.support = static_cast<std::size_t>(row);
    s.accuracy = (tp + tn) / total;
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    s.f1 = ratio(2 * s.precision * s.recall, s.precision + s.recall);

    const double w = row / total;
    m.macro.accuracy += s.accuracy / kNumClasses;
    m.macro.precision += s.precision / kNumClasses;
    m.macro.recall += s.recall / kNumClasses;
    m.macro.f1 += s.f1 / kNumClasses;
    m.weighted.accuracy += w * s.accuracy;
    m.weighted.precision += w * s.precision;
    m.weighted.recall += w * s.recall;
    m.weighted.f1 += w * s.f1;
  }
  m.macro.support = m.weighted.support = m.total;
  return m;
}

Json metrics_to_json(const Metrics& m) {
  Json per = Json::object();
  for (std::size_t k = 0; k < kNumClasses; ++k) per[std::string(kClassShort[k])] = scores_json(m.per_class[k]);
  Json cm = Json::array();
  for (const auto& row : m.confusion) cm.push_back(row);
  return Json{{"accuracy", m.overall_accuracy}, {"confusion_matrix", cm}, {"macro_avg", scores_json(m.macro)},
              {"per_class", per}, {"total", m.total}, {"weighted_avg", scores_json(m.weighted)}};
}

std::vector<ReferenceScores> reference_scores(Sampling sampling) {
  std::vector<ReferenceScores> out;
  if (sampling == Sampling::Unbalanced) {
    ReferenceScores avg{"reference avg", {}, cs(0.9908, 0.991, 0.996, 0.9938), cs(0.9904, 0.9852, 0.9911, 0.9895)};
    avg.per_class = {cs(0.996, 0.991, 0.996, 0.994), cs(0.981, 0.992, 0.997, 0.991), cs(0.990, 0.989, 0.991, 0.994),
                     cs(0.989, 0.997, 0.996, 0.990), cs(0.998, 0.986, 1.000, 0.999)};
    out.push_back(avg);
  }
  ReferenceScores by{"reference " + std::string(to_string(sampling)), {}, std::nullopt, std::nullopt};
  for (std::size_t k = 0; k < kNumClasses; ++k) by.per_class[k] = kByStrategy[static_cast<std::size_t>(sampling)][k];
  out.push_back(by);
  return out;
}

std::string metrics_report(const Metrics& m, Sampling sampling) {
  const auto refs = reference_scores(sampling);
  std::ostringstream os;
  os << "overall accuracy " << fmt(m.overall_accuracy) << " on " << m.total << " beats (sampling "
     << to_string(sampling) << ")\n";
  os << "class      metric     run     ";
  for (const auto& r : refs) os << " | " << r.label;
  os << '\n';
  auto line = [&](const std::string& cls, const char* metric, double run, auto pick) {
    char head[48];
    std::snprintf(head, sizeof head, "%-10s %-10s %s", cls.c_str(), metric, fmt(run).c_str());
    os << head;
    for (const auto& r : refs) {
      const auto v = pick(r);
      os << " | " << (v ? fmt(*v) : std::string("   -  "));
    }
    os << '\n';
  };
  auto rows = [&](const std::string& cls, const ClassScores& s, auto get) {
    line(cls, "accuracy", s.accuracy, [&](const ReferenceScores& r) { auto g = get(r); return g ? std::optional(g->accuracy) : std::nullopt; });
    line(cls, "precision", s.precision, [&](const ReferenceScores& r) { auto g = get(r); return g ? std::optional(g->precision) : std::nullopt; });
    line(cls, "recall", s.recall, [&](const ReferenceScores& r) { auto g = get(r); return g ? std::optional(g->recall) : std::nullopt; });
    line(cls, "f1", s.f1, [&](const ReferenceScores& r) { auto g = get(r); return g ? std::optional(g->f1) : std::nullopt; });
  };
  for (std::size_t k = 0; k < kNumClasses; ++k)
    rows(std::string(kClassShort[k]), m.per_class[k], [k](const ReferenceScores& r) { return r.per_class[k]; });
  rows("macro", m.macro, [](const ReferenceScores& r) { return r.macro; });
  rows("weighted", m.weighted, [](const ReferenceScores& r) { return r.weighted; });
  os << "confusion (rows true, columns predicted):\n";
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%-5s", std::string(kClassShort[t]).c_str());
    os << buf;
    for (auto v : m.confusion[t]) {
      std::snprintf(buf, sizeof buf, " %7zu", v);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace egw::arrhythmia
