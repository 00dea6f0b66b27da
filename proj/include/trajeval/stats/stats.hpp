#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "trajeval/analysis/metrics.hpp"
#include "trajeval/corpus/corpus.hpp"
#include "trajeval/error.hpp"

namespace trajeval::stats {

inline const std::vector<std::string> kStyleFeatures = {"char_count", "line_count", "ast_depth", "ast_width",
                                                        "ast_nodes"};

struct StyleScoreModel {
  std::vector<std::string> feature_order = kStyleFeatures;
  Eigen::VectorXd means;
  Eigen::VectorXd scales;   // population std; 1 for constant features
  Eigen::VectorXd loading;  // unit PC1
  std::string sign_anchor = "char_count";
  double eigenvalue = 0.0;  // variance of the fitted scores
  std::size_t fitted_on = 0;

  std::string to_json() const;
  static StyleScoreModel from_json(const std::string& text);
  /// SHA-256 of to_json().
  std::string digest() const;
};

/// Feature vector in feature_order. Requires parse_ok.
Eigen::VectorXd style_features(const analysis::CodeMetrics& m);

/// z-scores the reference rows (population std) and takes the leading
/// eigenvector of their covariance, oriented so the anchor loads positively.
/// Unparseable rows are skipped. Constant features get scale 1 and a warning.
StyleScoreModel fit_style_model(const std::vector<analysis::CodeMetrics>& reference,
                                std::vector<std::string>* warnings = nullptr);

/// nullopt when the code did not parse.
std::optional<double> style_score(const StyleScoreModel& model, const analysis::CodeMetrics& m);

/// Character (code point) edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

struct ProgressBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mean;
};

struct ProgressCurve {
  std::string metric;
  std::vector<ProgressBin> bins;

  std::size_t total() const;
};

/// values[s][i] is the metric at attempt i of stream s (nullopt when
/// undefined). Attempt i of n lands at u = i/(n-1), or 0 when n = 1.
ProgressCurve progress_curve(const std::vector<std::vector<std::optional<double>>>& values, int bins = 10,
                             std::string metric = {});

ProgressCurve progress_curve(const std::vector<const corpus::Stream*>& streams,
                             const std::function<std::optional<double>(const corpus::Submission&)>& metric,
                             int bins = 10, std::string name = {});

/// Edit distance between attempts i-1 and i, placed at the position of i.
ProgressCurve edit_distance_curve(const std::vector<const corpus::Stream*>& streams, int bins = 10);

struct PairwiseMAE {
  std::string metric;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  double value = 0.0;
};

PairwiseMAE pairwise_mae(const std::vector<std::pair<std::optional<double>, std::optional<double>>>& pairs,
                         std::string metric = {});

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population
};

/// Skips nullopt values. n = 0 leaves mean and std at 0.
Summary summarize(const std::vector<std::optional<double>>& values);
Summary summarize(const std::vector<double>& values);

}  // namespace trajeval::stats
