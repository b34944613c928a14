// pscaug/calibration.hpp

// Copyright 2026  The pscaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pscaug/ctm.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

inline constexpr double kConfidenceEpsilon = 1e-6;

struct CalibrationExample {
  double confidence = 0.0;
  double lm_score = 0.0;
  bool correct = false;
};

/// p = sigmoid(intercept + w_conf * logit(clamp(conf)) + w_lm * lm_score)
struct CalibrationModel {
  double intercept = 0.0;
  double w_conf = 0.0;
  double w_lm = 0.0;
  double lambda = 0.0;
  bool intercept_only = false;
  bool converged = true;
  int iterations = 0;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double confidence_logit(double confidence) {
  const double c = std::clamp(confidence, kConfidenceEpsilon, 1.0 - kConfidenceEpsilon);
  return std::log(c / (1.0 - c));
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};

/// Mean cross-entropy plus (lambda/2)|w|^2 over all three weights, with its
/// gradient and Hessian.
inline Objective calibration_objective(const std::vector<CalibrationExample>& examples,
                                       const Eigen::Vector3d& w, double lambda) {
  Objective obj;
  const double n = static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const Eigen::Vector3d x(1.0, confidence_logit(ex.confidence), ex.lm_score);
    const double z = w.dot(x);
    const double p = sigmoid(z);
    obj.value += (ex.correct ? softplus(-z) : softplus(z)) / n;
    obj.gradient += (p - (ex.correct ? 1.0 : 0.0)) / n * x;
    obj.hessian += p * (1.0 - p) / n * (x * x.transpose());
  }
  obj.value += 0.5 * lambda * w.squaredNorm();
  obj.gradient += lambda * w;
  obj.hessian += lambda * Eigen::Matrix3d::Identity();
  return obj;
}

struct CalibrationTrainOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

namespace calibration_detail {

// Damped Newton from zero over the active coordinates.
inline Eigen::Vector3d newton(const std::vector<CalibrationExample>& examples, double lambda,
                              const Eigen::Vector3d& active, const CalibrationTrainOptions& opt,
                              bool& converged, int& iterations) {
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  const Eigen::Matrix3d mask = active.asDiagonal();
  converged = false;
  for (iterations = 0; iterations < opt.max_iterations; ++iterations) {
    Objective obj = calibration_objective(examples, w, lambda);
    const Eigen::Vector3d g = mask * obj.gradient;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::Matrix3d h = mask * obj.hessian * mask;
    for (int i = 0; i < 3; ++i)
      if (active[i] == 0.0) h(i, i) = 1.0;
    h += 1e-12 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d step = -h.ldlt().solve(g);
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::Vector3d cand = w + t * step;
      if (calibration_objective(examples, cand, lambda).value <= obj.value + 1e-4 * t * g.dot(step)) {
        w = cand;
        break;
      }
    }
  }
  return w;
}

}  // namespace calibration_detail

/// Logistic regression on (logit confidence, LM score). Falls back to an
/// intercept-only model when only one label is present or every example has
/// the same features.
inline CalibrationModel train_calibration(const std::vector<CalibrationExample>& examples, double lambda,
                                          const CalibrationTrainOptions& options = {}) {
  if (examples.empty()) fail(Errc::kInvalidArgument, "no calibration examples");
  if (!(lambda >= 0.0)) fail(Errc::kInvalidArgument, "lambda must be >= 0");
  bool has_pos = false, has_neg = false, varied = false;
  for (const auto& ex : examples) {
    (ex.correct ? has_pos : has_neg) = true;
    if (confidence_logit(ex.confidence) != confidence_logit(examples.front().confidence) ||
        ex.lm_score != examples.front().lm_score)
      varied = true;
  }
  CalibrationModel model;
  model.lambda = lambda;
  model.intercept_only = !(has_pos && has_neg && varied);
  const Eigen::Vector3d active = model.intercept_only ? Eigen::Vector3d(1, 0, 0) : Eigen::Vector3d(1, 1, 1);
  const Eigen::Vector3d w =
      calibration_detail::newton(examples, lambda, active, options, model.converged, model.iterations);
  model.intercept = w[0];
  model.w_conf = w[1];
  model.w_lm = w[2];
  return model;
}

/// Probability strictly inside (0, 1).
inline double calibrated_confidence(const CalibrationModel& model, double confidence, double lm_score) {
  const double p = sigmoid(model.intercept + model.w_conf * confidence_logit(confidence) + model.w_lm * lm_score);
  return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

inline std::vector<HypothesisWord> apply_calibration(const CalibrationModel& model,
                                                     std::vector<HypothesisWord> words) {
  for (auto& w : words) w.confidence = calibrated_confidence(model, w.confidence, w.lm_score.value_or(0.0));
  return words;
}

inline void apply_calibration(const CalibrationModel& model, HypothesisTable& table) {
  for (auto& [id, words] : table) words = apply_calibration(model, std::move(words));
}

inline void save_calibration(std::ostream& out, const CalibrationModel& model) {
  out << std::setprecision(17) << "intercept " << model.intercept << "\nw_conf " << model.w_conf << "\nw_lm "
      << model.w_lm << "\nlambda " << model.lambda << '\n';
}

inline CalibrationModel load_calibration(std::istream& in) {
  std::map<std::string, double> values;
  std::string key;
  double v;
  while (in >> key >> v) values[key] = v;
  CalibrationModel model;
  for (const char* k : {"intercept", "w_conf", "w_lm"})
    if (!values.count(k)) fail(Errc::kConfigError, std::string("calibration model lacks '") + k + "'");
  model.intercept = values["intercept"];
  model.w_conf = values["w_conf"];
  model.w_lm = values["w_lm"];
  model.lambda = values.count("lambda") ? values["lambda"] : 0.0;
  if (!std::isfinite(model.intercept) || !std::isfinite(model.w_conf) || !std::isfinite(model.w_lm))
    fail(Errc::kConfigError, "calibration weights must be finite");
  return model;
}

inline void save_calibration(const std::filesystem::path& path, const CalibrationModel& model) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIoError, "cannot create " + path.string());
  save_calibration(out, model);
}

inline CalibrationModel load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return load_calibration(in);
}

/// Normalized cross entropy with base-2 logs. The probability assigned to
/// the true outcome is floored at kConfidenceEpsilon before the log.
inline double compute_nce(const std::vector<std::pair<double, bool>>& scored) {
  const std::size_t n = scored.size();
  std::size_t n_correct = 0;
  for (const auto& [c, ok] : scored) n_correct += ok ? 1 : 0;
  if (n_correct == 0 || n_correct == n)
    fail(Errc::kDegenerateLabels, "NCE needs both correct and incorrect words");
  const double prior = static_cast<double>(n_correct) / static_cast<double>(n);
  const double h_max = -prior * std::log2(prior) - (1.0 - prior) * std::log2(1.0 - prior);
  double sum = 0.0;
  for (const auto& [c, ok] : scored) {
    const double p_true = ok ? c : 1.0 - c;
    sum += std::log2(std::max(p_true, kConfidenceEpsilon));
  }
  const double h = -sum / static_cast<double>(n);
  return (h_max - h) / h_max;
}

}  // namespace pscaug
