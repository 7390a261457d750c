#include <hiertag/metrics.hpp>

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include <hiertag/errors.hpp>

namespace hiertag {
namespace {

void check_lengths(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw LengthMismatch("scores and labels differ in length");
  }
}

struct ClassCounts {
  long pos = 0;
  long neg = 0;
};

ClassCounts count_classes(const std::vector<int>& labels) {
  ClassCounts c;
  for (int y : labels) {
    (y == 1 ? c.pos : c.neg) += 1;
  }
  return c;
}

// Indices sorted by score; ties keep their original relative order, which
// never matters because tied scores are always handled as a group.
std::vector<std::size_t> order_by_score(const std::vector<double>& scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_lengths(scores, labels);
  const ClassCounts counts = count_classes(labels);
  if (counts.pos == 0 || counts.neg == 0) {
    throw DegenerateLabels("roc_auc needs at least one positive and one negative label");
  }

  // Mann–Whitney: sum the average ranks of the positives. Averaging ranks
  // inside each tie group credits tied positive/negative pairs with 1/2.
  const std::vector<std::size_t> idx = order_by_score(scores, /*descending=*/false);
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(counts.pos);
  const double nn = static_cast<double>(counts.neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_lengths(scores, labels);
  const ClassCounts counts = count_classes(labels);
  if (counts.pos == 0) {
    throw DegenerateLabels("average_precision needs at least one positive label");
  }

  // Walk the ranking from the top, one tie group at a time; the curve is a
  // step function of recall, so each group contributes its recall gain
  // times the precision at the group's end.
  const std::vector<std::size_t> idx = order_by_score(scores, /*descending=*/true);
  double ap = 0.0;
  double prev_recall = 0.0;
  long tp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) ++tp;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(j);
    const double recall = static_cast<double>(tp) / static_cast<double>(counts.pos);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double f1_at(const std::vector<double>& scores, const std::vector<int>& labels,
             double threshold) {
  check_lengths(scores, labels);
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++tp;
    if (predicted && labels[i] == 0) ++fp;
    if (!predicted && labels[i] == 1) ++fn;
  }
  const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double optimize_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_lengths(scores, labels);
  if (scores.empty()) {
    throw NoObservedEntries("cannot pick a threshold from zero entries");
  }
  const ClassCounts counts = count_classes(labels);
  if (counts.pos == 0) {
    return 1.0;  // every threshold gives F1 = 0; predict nothing
  }

  std::vector<double> uniq(scores);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.reserve(uniq.size() + 1);
  candidates.push_back(0.0);
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    candidates.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  }
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());

  // Ascending scan with a strict improvement test keeps the smallest
  // threshold among ties.
  double best_f1 = -1.0;
  double best_t = candidates.front();
  for (double t : candidates) {
    const double f = f1_at(scores, labels, t);
    if (f > best_f1) {
      best_f1 = f;
      best_t = t;
    }
  }
  return best_t;
}

namespace {

struct ObservedColumn {
  std::vector<double> scores;
  std::vector<int> labels;
};

ObservedColumn observed_column(const Matrix& scores, const StateMatrix& states, int col) {
  ObservedColumn out;
  for (int r = 0; r < scores.rows(); ++r) {
    const LabelState s = states(r, col);
    if (s == LabelState::Unobserved) continue;
    out.scores.push_back(scores(r, col));
    out.labels.push_back(s == LabelState::Positive ? 1 : 0);
  }
  return out;
}

void check_level_shapes(const Matrix& scores, const StateMatrix& states,
                        const std::vector<double>& thresholds, int n_tags) {
  if (scores.cols() != n_tags || states.cols() != n_tags) {
    throw ShapeMismatch("score/state columns must match the tag count");
  }
  if (scores.rows() != states.rows()) {
    throw ShapeMismatch("scores and states disagree on sample count");
  }
  if (static_cast<int>(thresholds.size()) != n_tags) {
    throw LengthMismatch("need one threshold per tag");
  }
}

void evaluate_level(const Matrix& scores, const StateMatrix& states,
                    const std::vector<double>& thresholds,
                    const std::vector<std::string>& tags,
                    std::vector<TagMetrics>& per_tag, LevelSummary& summary) {
  double roc_sum = 0.0, pr_sum = 0.0, f1_sum = 0.0;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const int col = static_cast<int>(t);
    const ObservedColumn obs = observed_column(scores, states, col);
    const ClassCounts counts = count_classes(obs.labels);

    TagMetrics m;
    m.tag = tags[t];
    m.threshold = thresholds[t];
    m.observed = static_cast<long>(obs.scores.size());
    m.skipped = counts.pos == 0 || counts.neg == 0;
    if (m.skipped) {
      summary.skipped_tags.push_back(m.tag);
    } else {
      m.roc_auc = roc_auc(obs.scores, obs.labels);
      m.pr_auc = average_precision(obs.scores, obs.labels);
      m.f1 = f1_at(obs.scores, obs.labels, thresholds[t]);
      roc_sum += m.roc_auc;
      pr_sum += m.pr_auc;
      f1_sum += m.f1;
      summary.evaluated += 1;
    }
    per_tag.push_back(std::move(m));
  }
  if (summary.evaluated > 0) {
    summary.macro_roc_auc = roc_sum / summary.evaluated;
    summary.macro_pr_auc = pr_sum / summary.evaluated;
    summary.macro_f1 = f1_sum / summary.evaluated;
  }
}

}  // namespace

std::vector<double> optimize_thresholds(const Matrix& scores, const StateMatrix& states) {
  if (scores.rows() != states.rows() || scores.cols() != states.cols()) {
    throw ShapeMismatch("scores and states disagree in shape");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(scores.cols()));
  for (int c = 0; c < scores.cols(); ++c) {
    const ObservedColumn obs = observed_column(scores, states, c);
    if (obs.scores.empty()) {
      throw NoObservedEntries("tag column " + std::to_string(c) + " has no observed entries");
    }
    out.push_back(optimize_threshold(obs.scores, obs.labels));
  }
  return out;
}

MetricsReport evaluate(const Matrix& fine_scores, const StateMatrix& fine_states,
                       const std::vector<double>& fine_thresholds,
                       const Matrix& coarse_scores, const StateMatrix& coarse_states,
                       const std::vector<double>& coarse_thresholds,
                       const Hierarchy& hierarchy) {
  check_level_shapes(fine_scores, fine_states, fine_thresholds, hierarchy.n_fine());

  MetricsReport report;
  evaluate_level(fine_scores, fine_states, fine_thresholds, hierarchy.fine_tags(),
                 report.fine, report.fine_summary);

  const bool has_coarse = !coarse_scores.empty() || coarse_states.rows() > 0;
  if (has_coarse) {
    check_level_shapes(coarse_scores, coarse_states, coarse_thresholds, hierarchy.n_coarse());
    if (coarse_scores.rows() != fine_scores.rows()) {
      throw ShapeMismatch("fine and coarse levels disagree on sample count");
    }
    evaluate_level(coarse_scores, coarse_states, coarse_thresholds, hierarchy.coarse_tags(),
                   report.coarse, report.coarse_summary);
  }
  return report;
}

namespace {

nlohmann::ordered_json level_to_json(const std::vector<TagMetrics>& per_tag,
                                     const LevelSummary& summary) {
  nlohmann::ordered_json tags = nlohmann::ordered_json::array();
  for (const TagMetrics& m : per_tag) {
    nlohmann::ordered_json t;
    t["tag"] = m.tag;
    if (m.skipped) {
      t["roc_auc"] = nullptr;
      t["pr_auc"] = nullptr;
      t["f1"] = nullptr;
    } else {
      t["roc_auc"] = m.roc_auc;
      t["pr_auc"] = m.pr_auc;
      t["f1"] = m.f1;
    }
    t["threshold"] = m.threshold;
    t["observed"] = m.observed;
    t["skipped"] = m.skipped;
    tags.push_back(std::move(t));
  }
  nlohmann::ordered_json level;
  level["tags"] = std::move(tags);
  level["macro"] = {{"roc_auc", summary.macro_roc_auc},
                    {"pr_auc", summary.macro_pr_auc},
                    {"f1", summary.macro_f1},
                    {"evaluated", summary.evaluated}};
  level["skipped_tags"] = summary.skipped_tags;
  return level;
}

void level_to_csv(std::ostringstream& out, const std::string& level,
                  const std::vector<TagMetrics>& per_tag, const LevelSummary& summary) {
  for (const TagMetrics& m : per_tag) {
    out << level << ',' << m.tag << ',';
    if (m.skipped) {
      out << ",,";
    } else {
      out << format_double(m.roc_auc) << ',' << format_double(m.pr_auc) << ','
          << format_double(m.f1) << ',';
    }
    out << format_double(m.threshold) << ',' << m.observed << ','
        << (m.skipped ? "true" : "false") << '\n';
  }
  out << level << ",(macro)," << format_double(summary.macro_roc_auc) << ','
      << format_double(summary.macro_pr_auc) << ',' << format_double(summary.macro_f1)
      << ",," << summary.evaluated << ",false\n";
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["fine"] = level_to_json(report.fine, report.fine_summary);
  if (!report.coarse.empty()) {
    j["coarse"] = level_to_json(report.coarse, report.coarse_summary);
  }
  return j.dump(2);
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "level,tag,roc_auc,pr_auc,f1,threshold,observed,skipped\n";
  level_to_csv(out, "fine", report.fine, report.fine_summary);
  if (!report.coarse.empty()) {
    level_to_csv(out, "coarse", report.coarse, report.coarse_summary);
  }
  return out.str();
}

}  // namespace hiertag
