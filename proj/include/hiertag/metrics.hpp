#pragma once

// Ranking metrics and threshold selection for multi-label predictions.
//
// All scalar metrics operate on parallel vectors of scores and 0/1 labels.
// `evaluate` applies them per tag across a score matrix, restricted to the
// observed entries of a StateMatrix, and aggregates macro averages per
// hierarchy level. Tags whose observed labels are all-positive or
// all-negative cannot be ranked and are listed in `skipped_tags` instead of
// contributing to the macro averages.

#include <string>
#include <vector>

#include <hiertag/hierarchy.hpp>
#include <hiertag/matrix.hpp>

namespace hiertag {

// Area under the ROC curve via average ranks; tied score pairs count 1/2.
// Requires at least one positive and one negative label.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Area under the precision–recall curve as a step function of recall.
// Tied scores enter the ranking together. Requires at least one positive.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// F1 when predicting positive for score >= threshold; 0 when precision and
// recall are both zero.
double f1_at(const std::vector<double>& scores, const std::vector<int>& labels,
             double threshold);

// Smallest threshold maximizing F1, searched over 0, 1, and the midpoints
// of adjacent distinct scores (F1 is constant between consecutive scores,
// so these cover every achievable confusion matrix). All-negative labels
// make every threshold equivalent; 1.0 is returned so nothing is predicted.
double optimize_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

// Per-column optimize_threshold over the observed entries of `states`.
// Throws NoObservedEntries if some column has no observed entries at all.
std::vector<double> optimize_thresholds(const Matrix& scores, const StateMatrix& states);

struct TagMetrics {
  std::string tag;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  long observed = 0;   // observed entries for this tag
  bool skipped = false;  // metrics are meaningless when true
};

struct LevelSummary {
  double macro_roc_auc = 0.0;  // means over evaluated (non-skipped) tags
  double macro_pr_auc = 0.0;
  double macro_f1 = 0.0;
  int evaluated = 0;
  std::vector<std::string> skipped_tags;
};

struct MetricsReport {
  std::vector<TagMetrics> fine;
  std::vector<TagMetrics> coarse;
  LevelSummary fine_summary;
  LevelSummary coarse_summary;
};

// Scores are (n_samples x n_tags), column order matching the hierarchy's
// tag order; thresholds are per tag. Sample order does not affect the
// result. Coarse inputs may be empty to evaluate the fine level only.
MetricsReport evaluate(const Matrix& fine_scores, const StateMatrix& fine_states,
                       const std::vector<double>& fine_thresholds,
                       const Matrix& coarse_scores, const StateMatrix& coarse_states,
                       const std::vector<double>& coarse_thresholds,
                       const Hierarchy& hierarchy);

// Serializations. JSON carries skipped tags as explicit nulls; the CSV has
// one row per tag plus one macro row per level.
std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace hiertag
