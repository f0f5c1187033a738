#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compass/errors.hpp"

namespace compass {

enum class GroupLeaning { left, right, none };

std::string_view leaning_name(GroupLeaning leaning);
GroupLeaning leaning_from_name(std::string_view name);

// One downstream prediction, tagged with the social group or media source
// the example targets. (example_id, model_id, seed) is unique.
struct PredictionRecord {
  std::string example_id;
  std::string group;
  std::optional<GroupLeaning> group_leaning;
  std::string gold;
  std::string pred;
  std::optional<double> score;  // confidence in pred, [0, 1]
  std::string model_id;
  int seed = 0;
};

// CSV with header example_id,group,group_leaning,gold,pred,score,model_id,seed.
// Empty score and group_leaning cells are permitted.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
std::vector<PredictionRecord> parse_predictions_csv(const std::string& text);
std::string predictions_to_csv(std::span<const PredictionRecord> records);
void save_predictions(std::span<const PredictionRecord> records,
                      const std::filesystem::path& path);

struct ClassPR {
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
};

struct MetricsSummary {
  double bacc = 0.0;      // percent
  double f1_macro = 0.0;  // percent
  std::map<std::string, ClassPR> per_class;
  std::vector<std::string> warnings;
};

// Confusion-matrix metrics over an explicit label set (default: union of
// gold and pred labels). Throws EmptyClass when fewer than two classes exist
// or when a class has gold support zero but predictions; a class with neither
// gold nor predicted instances contributes F1 = 0 with a warning.
MetricsSummary compute_metrics(std::span<const PredictionRecord> records,
                               const std::set<std::string>& labels = {});

// Mean per-class recall, percent.
double balanced_accuracy(std::span<const PredictionRecord> records);

// Unweighted mean of per-class F1, percent.
double macro_f1(std::span<const PredictionRecord> records);

// Binary-task F1 of one designated positive class, percent.
double positive_class_f1(std::span<const PredictionRecord> records,
                         const std::string& positive_label);

enum class GroupKey { group, group_leaning };

std::string_view group_key_name(GroupKey key);
GroupKey group_key_from_name(std::string_view name);

struct GroupMetrics {
  std::string group;
  std::size_t n = 0;
  std::optional<double> bacc;      // percent; absent when undefined in the group
  std::optional<double> f1_macro;
  std::map<std::string, ClassPR> per_class;
  std::vector<std::string> warnings;
};

// Per-group metrics plus an "overall" row (first), groups sorted by name.
// The label set is taken from the full record set, so a class missing inside
// one group is reported as a warning on that group rather than failing.
std::vector<GroupMetrics> group_breakdown(std::span<const PredictionRecord> records,
                                          GroupKey key);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Welch's unequal-variance t statistic with Welch-Satterthwaite degrees of
// freedom; two-sided p from the Student-t CDF. Requires two samples of size
// >= 2 with nonzero variance in at least one.
TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b);

struct SignificanceConfig {
  double alpha = 0.05;

  void validate() const;
};

// Fleiss' kappa over an items x categories matrix of rater counts; every row
// must sum to the same rater count n >= 2. Throws PerfectExpectedAgreement
// when all ratings fall into one category (kappa undefined).
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

enum class EnsembleMode { majority, mean_score };

std::string_view ensemble_mode_name(EnsembleMode mode);
EnsembleMode ensemble_mode_from_name(std::string_view name);

// Combines per-model predictions for the same example set into one record
// per example with model_id "ensemble". Every model must cover every
// example exactly once.
//   MAJORITY:   modal pred; ties by higher mean score among the tied labels'
//               voters, then lexicographically smallest label.
//   MEAN_SCORE: label with the highest mean confidence, where each model
//               contributes its score to its predicted label and 0 to the
//               others; ties by smallest label. Requires scores everywhere.
std::vector<PredictionRecord> ensemble_vote(std::span<const PredictionRecord> records,
                                            EnsembleMode mode);

enum class FairnessMetric { bacc, macro_f1 };

// Per-seed metric samples for one model, ordered by seed; input to the
// significance test across seeds.
std::vector<double> metric_by_seed(std::span<const PredictionRecord> records,
                                   const std::string& model_id, FairnessMetric metric);

struct MetricSignificance {
  TTestResult bacc;
  TTestResult f1_macro;
  bool bacc_significant = false;
  bool f1_significant = false;
};

struct ModelFairness {
  std::string model_id;
  std::vector<GroupMetrics> groups;  // overall row first
  std::optional<MetricSignificance> significance;
};

struct FairnessReport {
  GroupKey group_key = GroupKey::group;
  double alpha = 0.05;
  std::optional<std::string> baseline;
  std::vector<ModelFairness> models;
};

// Breakdown per model found in the records; when baseline is set, each other
// model's per-seed bacc / macro-F1 samples are Welch-tested against it.
FairnessReport fairness_report(std::span<const PredictionRecord> records, GroupKey key,
                               const std::optional<std::string>& baseline,
                               const SignificanceConfig& significance = {});

// fairness-report/1 serialization plus a flat CSV rendering.
nlohmann::json fairness_report_to_json(const FairnessReport& report);
FairnessReport fairness_report_from_json(const nlohmann::json& doc);
std::string serialize_fairness_report(const FairnessReport& report);
FairnessReport load_fairness_report(const std::filesystem::path& path);
std::string fairness_report_to_csv(const FairnessReport& report);

}  // namespace compass
