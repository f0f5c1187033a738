#include "compass/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

namespace compass {

std::string_view leaning_name(GroupLeaning leaning) {
  switch (leaning) {
    case GroupLeaning::left: return "LEFT";
    case GroupLeaning::right: return "RIGHT";
    case GroupLeaning::none: return "NONE";
  }
  return "";  // unreachable
}

GroupLeaning leaning_from_name(std::string_view name) {
  if (name == "LEFT") return GroupLeaning::left;
  if (name == "RIGHT") return GroupLeaning::right;
  if (name == "NONE") return GroupLeaning::none;
  throw ValidationError("UnknownLabel", "unknown group leaning '" + std::string(name) + "'");
}

namespace {

constexpr std::string_view kCsvHeader =
    "example_id,group,group_leaning,gold,pred,score,model_id,seed";

// Minimal RFC-4180 row splitting: quoted fields may contain commas and
// doubled quotes; fields never span lines.
std::vector<std::string> split_csv_row(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted)
    throw ValidationError("ParseError", "line " + std::to_string(line_no) + ": unclosed quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_pct(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

}  // namespace

std::vector<PredictionRecord> parse_predictions_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("ParseError", "empty prediction file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader)
    throw ValidationError("ParseError", "expected header '" + std::string(kCsvHeader) + "'");

  std::vector<PredictionRecord> records;
  std::set<std::tuple<std::string, std::string, int>> keys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_row(line, line_no);
    if (fields.size() != 8)
      throw ValidationError("ParseError", "line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                              std::to_string(fields.size()));
    PredictionRecord rec;
    rec.example_id = fields[0];
    rec.group = fields[1];
    if (!fields[2].empty()) rec.group_leaning = leaning_from_name(fields[2]);
    rec.gold = fields[3];
    rec.pred = fields[4];
    if (rec.example_id.empty() || rec.gold.empty() || rec.pred.empty())
      throw ValidationError("ParseError",
                            "line " + std::to_string(line_no) + ": example_id, gold and pred are required");
    if (!fields[5].empty()) {
      double score = 0.0;
      try {
        std::size_t used = 0;
        score = std::stod(fields[5], &used);
        if (used != fields[5].size()) throw std::invalid_argument(fields[5]);
      } catch (const std::exception&) {
        throw ValidationError("BadScore",
                              "line " + std::to_string(line_no) + ": '" + fields[5] + "' is not a number");
      }
      if (score < 0.0 || score > 1.0)
        throw ValidationError("BadScore", "line " + std::to_string(line_no) + ": score " +
                                              fields[5] + " outside [0, 1]");
      rec.score = score;
    }
    rec.model_id = fields[6];
    try {
      rec.seed = std::stoi(fields[7]);
    } catch (const std::exception&) {
      throw ValidationError("ParseError",
                            "line " + std::to_string(line_no) + ": seed '" + fields[7] + "' is not an integer");
    }
    if (!keys.emplace(rec.example_id, rec.model_id, rec.seed).second)
      throw ValidationError("DuplicateKey", "line " + std::to_string(line_no) + ": (" + rec.example_id +
                                                ", " + rec.model_id + ", " +
                                                std::to_string(rec.seed) + ") seen before");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_predictions_csv(buffer.str());
  } catch (const ValidationError& e) {
    throw ValidationError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string predictions_to_csv(std::span<const PredictionRecord> records) {
  std::string out(kCsvHeader);
  out += '\n';
  char buf[64];
  for (const auto& rec : records) {
    out += csv_escape(rec.example_id);
    out += ',';
    out += csv_escape(rec.group);
    out += ',';
    if (rec.group_leaning) out += leaning_name(*rec.group_leaning);
    out += ',';
    out += csv_escape(rec.gold);
    out += ',';
    out += csv_escape(rec.pred);
    out += ',';
    if (rec.score) {
      std::snprintf(buf, sizeof(buf), "%.17g", *rec.score);
      out += buf;
    }
    out += ',';
    out += csv_escape(rec.model_id);
    out += ',';
    out += std::to_string(rec.seed);
    out += '\n';
  }
  return out;
}

void save_predictions(std::span<const PredictionRecord> records,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("FileError", "cannot write " + path.string());
  out << predictions_to_csv(records);
}

MetricsSummary compute_metrics(std::span<const PredictionRecord> records,
                               const std::set<std::string>& labels) {
  if (records.empty()) throw ValidationError("EmptyClass", "no records");
  std::set<std::string> label_set = labels;
  if (label_set.empty()) {
    for (const auto& rec : records) {
      label_set.insert(rec.gold);
      label_set.insert(rec.pred);
    }
  }
  if (label_set.size() < 2)
    throw ValidationError("EmptyClass", "metrics need at least two classes");

  MetricsSummary summary;
  double recall_sum = 0.0;
  std::size_t recall_classes = 0;
  double f1_sum = 0.0;
  for (const auto& label : label_set) {
    std::size_t gold_n = 0;
    std::size_t pred_n = 0;
    std::size_t tp = 0;
    for (const auto& rec : records) {
      const bool is_gold = rec.gold == label;
      const bool is_pred = rec.pred == label;
      gold_n += is_gold;
      pred_n += is_pred;
      tp += is_gold && is_pred;
    }
    if (gold_n == 0 && pred_n > 0)
      throw ValidationError("EmptyClass", "class '" + label + "' predicted but never gold");
    if (gold_n == 0) {
      // only reachable with an explicit label set
      summary.per_class[label] = {0.0, 0.0};
      summary.warnings.push_back("EmptyClass(" + label + "): no gold or predicted instances; F1 counted as 0");
      f1_sum += 0.0;
      continue;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(gold_n);
    double precision = 0.0;
    if (pred_n > 0) {
      precision = static_cast<double>(tp) / static_cast<double>(pred_n);
    } else {
      summary.warnings.push_back("no predictions for class '" + label + "'; precision counted as 0");
    }
    const double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    summary.per_class[label] = {precision * 100.0, recall * 100.0};
    recall_sum += recall;
    ++recall_classes;
    f1_sum += f1;
  }
  summary.bacc = 100.0 * recall_sum / static_cast<double>(recall_classes);
  summary.f1_macro = 100.0 * f1_sum / static_cast<double>(label_set.size());
  return summary;
}

double balanced_accuracy(std::span<const PredictionRecord> records) {
  return compute_metrics(records).bacc;
}

double macro_f1(std::span<const PredictionRecord> records) {
  return compute_metrics(records).f1_macro;
}

double positive_class_f1(std::span<const PredictionRecord> records,
                         const std::string& positive_label) {
  std::size_t gold_n = 0;
  std::size_t pred_n = 0;
  std::size_t tp = 0;
  for (const auto& rec : records) {
    const bool is_gold = rec.gold == positive_label;
    const bool is_pred = rec.pred == positive_label;
    gold_n += is_gold;
    pred_n += is_pred;
    tp += is_gold && is_pred;
  }
  if (gold_n == 0)
    throw ValidationError("EmptyClass", "class '" + positive_label + "' has no gold instances");
  const double recall = static_cast<double>(tp) / static_cast<double>(gold_n);
  const double precision =
      pred_n > 0 ? static_cast<double>(tp) / static_cast<double>(pred_n) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

std::string_view group_key_name(GroupKey key) {
  return key == GroupKey::group ? "group" : "group_leaning";
}

GroupKey group_key_from_name(std::string_view name) {
  if (name == "group") return GroupKey::group;
  if (name == "group_leaning") return GroupKey::group_leaning;
  throw ValidationError("BadConfig", "unknown group key '" + std::string(name) + "'");
}

namespace {

std::string group_of(const PredictionRecord& rec, GroupKey key) {
  if (key == GroupKey::group) return rec.group;
  return rec.group_leaning ? std::string(leaning_name(*rec.group_leaning)) : "UNSPECIFIED";
}

GroupMetrics metrics_for(const std::string& name, std::span<const PredictionRecord> records,
                         const std::set<std::string>& labels) {
  GroupMetrics gm;
  gm.group = name;
  gm.n = records.size();
  try {
    MetricsSummary summary = compute_metrics(records, labels);
    gm.bacc = summary.bacc;
    gm.f1_macro = summary.f1_macro;
    gm.per_class = std::move(summary.per_class);
    gm.warnings = std::move(summary.warnings);
  } catch (const ValidationError& e) {
    gm.warnings.push_back(e.what());
  }
  return gm;
}

}  // namespace

std::vector<GroupMetrics> group_breakdown(std::span<const PredictionRecord> records,
                                          GroupKey key) {
  if (records.empty()) throw ValidationError("EmptyClass", "no records");
  std::set<std::string> labels;
  for (const auto& rec : records) {
    labels.insert(rec.gold);
    labels.insert(rec.pred);
  }
  std::map<std::string, std::vector<PredictionRecord>> by_group;
  for (const auto& rec : records) by_group[group_of(rec, key)].push_back(rec);

  std::vector<GroupMetrics> out;
  out.push_back(metrics_for("overall", records, labels));
  for (const auto& [name, group_records] : by_group)
    out.push_back(metrics_for(name, group_records, labels));
  return out;
}

void SignificanceConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("BadConfig", "alpha must be in (0, 1)");
}

TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2)
    throw ValidationError("DegenerateSamples", "each sample needs at least two values");
  auto mean_var = [](std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>{mean, var};
  };
  const auto [mean_a, var_a] = mean_var(sample_a);
  const auto [mean_b, var_b] = mean_var(sample_b);
  if (var_a == 0.0 && var_b == 0.0)
    throw ValidationError("DegenerateSamples", "both samples have zero variance");

  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double sa = var_a / na;
  const double sb = var_b / nb;
  const double se2 = sa + sb;
  TTestResult result;
  result.t = (mean_a - mean_b) / std::sqrt(se2);
  result.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(result.df);
  result.p = 2.0 * boost::math::cdf(dist, -std::abs(result.t));
  return result;
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty() || counts.front().empty())
    throw ValidationError("BadConfig", "counts matrix must be non-empty");
  const std::size_t categories = counts.front().size();
  long long raters = -1;
  std::vector<long long> column_sums(categories, 0);
  long long total = 0;
  for (const auto& row : counts) {
    if (row.size() != categories)
      throw ValidationError("BadConfig", "ragged counts matrix");
    long long row_sum = 0;
    for (std::size_t j = 0; j < categories; ++j) {
      if (row[j] < 0) throw ValidationError("BadConfig", "negative rater count");
      row_sum += row[j];
      column_sums[j] += row[j];
      total += row[j];
    }
    if (raters < 0) raters = row_sum;
    else if (row_sum != raters)
      throw ValidationError("UnevenRaterCounts",
                            "row sums " + std::to_string(raters) + " vs " + std::to_string(row_sum));
  }
  if (raters < 2) throw ValidationError("UnevenRaterCounts", "need at least two raters");
  for (long long column : column_sums) {
    if (column == total)
      throw ValidationError("PerfectExpectedAgreement",
                            "all ratings in one category; kappa undefined");
  }

  const double n = static_cast<double>(raters);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    double sq = 0.0;
    for (int c : row) sq += static_cast<double>(c) * c;
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= static_cast<double>(counts.size());

  double pe = 0.0;
  for (long long column : column_sums) {
    const double pj = static_cast<double>(column) / static_cast<double>(total);
    pe += pj * pj;
  }
  return (p_bar - pe) / (1.0 - pe);
}

std::string_view ensemble_mode_name(EnsembleMode mode) {
  return mode == EnsembleMode::majority ? "MAJORITY" : "MEAN_SCORE";
}

EnsembleMode ensemble_mode_from_name(std::string_view name) {
  if (name == "MAJORITY") return EnsembleMode::majority;
  if (name == "MEAN_SCORE") return EnsembleMode::mean_score;
  throw ValidationError("BadConfig", "unknown ensemble mode '" + std::string(name) + "'");
}

std::vector<PredictionRecord> ensemble_vote(std::span<const PredictionRecord> records,
                                            EnsembleMode mode) {
  if (records.empty()) throw ValidationError("CoverageGap", "no records to ensemble");

  std::set<std::string> models;
  std::set<std::string> examples;
  for (const auto& rec : records) {
    models.insert(rec.model_id);
    examples.insert(rec.example_id);
  }
  // exactly one record per (example, model)
  std::map<std::string, std::map<std::string, const PredictionRecord*>> by_example;
  for (const auto& rec : records) {
    auto& slot = by_example[rec.example_id][rec.model_id];
    if (slot != nullptr)
      throw ValidationError("DuplicateKey", "example " + rec.example_id + " has multiple records for model " +
                                                rec.model_id + "; filter to one seed first");
    slot = &rec;
  }
  for (const auto& example : examples) {
    for (const auto& model : models) {
      if (by_example[example].count(model) == 0)
        throw ValidationError("CoverageGap",
                              "model " + model + " has no prediction for example " + example);
    }
  }

  std::vector<PredictionRecord> out;
  for (const auto& [example_id, by_model] : by_example) {
    struct LabelStat {
      int votes = 0;
      double score_sum = 0.0;
      int score_count = 0;
    };
    std::map<std::string, LabelStat> stats;
    const PredictionRecord* first = by_model.begin()->second;
    for (const auto& [model, rec] : by_model) {
      if (rec->gold != first->gold)
        throw ValidationError("InconsistentGold", "example " + example_id + " has differing gold labels");
      auto& stat = stats[rec->pred];
      ++stat.votes;
      if (rec->score) {
        stat.score_sum += *rec->score;
        ++stat.score_count;
      } else if (mode == EnsembleMode::mean_score) {
        throw ValidationError("MissingScores", "example " + example_id + ", model " + model +
                                                   " lacks a score required by MEAN_SCORE");
      }
    }

    std::string winner;
    double winner_score = 0.0;
    if (mode == EnsembleMode::majority) {
      // (votes desc, mean voter score desc, label asc); labels iterate in
      // ascending order so ties resolve to the smallest label.
      bool have = false;
      int best_votes = 0;
      double best_mean = -1.0;  // below any defined mean; undefined stays last
      for (const auto& [label, stat] : stats) {
        const double mean =
            stat.score_count > 0 ? stat.score_sum / stat.score_count : -1.0;
        if (!have || stat.votes > best_votes ||
            (stat.votes == best_votes && mean > best_mean)) {
          have = true;
          best_votes = stat.votes;
          best_mean = mean;
          winner = label;
        }
      }
      winner_score = static_cast<double>(best_votes) / static_cast<double>(models.size());
    } else {
      bool have = false;
      double best_mean = 0.0;
      for (const auto& [label, stat] : stats) {
        const double mean = stat.score_sum / static_cast<double>(models.size());
        if (!have || mean > best_mean) {
          have = true;
          best_mean = mean;
          winner = label;
        }
      }
      winner_score = best_mean;
    }

    PredictionRecord rec;
    rec.example_id = example_id;
    rec.group = first->group;
    rec.group_leaning = first->group_leaning;
    rec.gold = first->gold;
    rec.pred = winner;
    rec.score = winner_score;
    rec.model_id = "ensemble";
    rec.seed = 0;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<double> metric_by_seed(std::span<const PredictionRecord> records,
                                   const std::string& model_id, FairnessMetric metric) {
  std::map<int, std::vector<PredictionRecord>> by_seed;
  for (const auto& rec : records) {
    if (rec.model_id == model_id) by_seed[rec.seed].push_back(rec);
  }
  std::vector<double> samples;
  samples.reserve(by_seed.size());
  for (const auto& [seed, seed_records] : by_seed) {
    MetricsSummary summary = compute_metrics(seed_records);
    samples.push_back(metric == FairnessMetric::bacc ? summary.bacc : summary.f1_macro);
  }
  return samples;
}

FairnessReport fairness_report(std::span<const PredictionRecord> records, GroupKey key,
                               const std::optional<std::string>& baseline,
                               const SignificanceConfig& significance) {
  significance.validate();
  if (records.empty()) throw ValidationError("EmptyClass", "no records");

  std::map<std::string, std::vector<PredictionRecord>> by_model;
  for (const auto& rec : records) by_model[rec.model_id].push_back(rec);
  if (baseline && by_model.count(*baseline) == 0)
    throw ValidationError("BadConfig", "baseline model '" + *baseline + "' not in the records");

  FairnessReport report;
  report.group_key = key;
  report.alpha = significance.alpha;
  report.baseline = baseline;
  for (const auto& [model_id, model_records] : by_model) {
    ModelFairness mf;
    mf.model_id = model_id;
    mf.groups = group_breakdown(model_records, key);
    if (baseline && model_id != *baseline) {
      const auto base_bacc = metric_by_seed(records, *baseline, FairnessMetric::bacc);
      const auto base_f1 = metric_by_seed(records, *baseline, FairnessMetric::macro_f1);
      const auto model_bacc = metric_by_seed(records, model_id, FairnessMetric::bacc);
      const auto model_f1 = metric_by_seed(records, model_id, FairnessMetric::macro_f1);
      MetricSignificance sig;
      sig.bacc = welch_t_test(model_bacc, base_bacc);
      sig.f1_macro = welch_t_test(model_f1, base_f1);
      sig.bacc_significant = sig.bacc.p < significance.alpha;
      sig.f1_significant = sig.f1_macro.p < significance.alpha;
      mf.significance = sig;
    }
    report.models.push_back(std::move(mf));
  }
  return report;
}

namespace {

nlohmann::json group_metrics_to_json(const GroupMetrics& gm) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, pr] : gm.per_class)
    per_class[label] = {{"precision", pr.precision}, {"recall", pr.recall}};
  return {{"group", gm.group},
          {"n", gm.n},
          {"bacc", gm.bacc ? nlohmann::json(*gm.bacc) : nlohmann::json(nullptr)},
          {"f1_macro", gm.f1_macro ? nlohmann::json(*gm.f1_macro) : nlohmann::json(nullptr)},
          {"per_class", per_class},
          {"warnings", gm.warnings}};
}

GroupMetrics group_metrics_from_json(const nlohmann::json& j) {
  GroupMetrics gm;
  gm.group = j.at("group").get<std::string>();
  gm.n = j.at("n").get<std::size_t>();
  if (!j.at("bacc").is_null()) gm.bacc = j.at("bacc").get<double>();
  if (!j.at("f1_macro").is_null()) gm.f1_macro = j.at("f1_macro").get<double>();
  for (const auto& [label, pr] : j.at("per_class").items())
    gm.per_class[label] = {pr.at("precision").get<double>(), pr.at("recall").get<double>()};
  gm.warnings = j.at("warnings").get<std::vector<std::string>>();
  return gm;
}

nlohmann::json ttest_to_json(const TTestResult& r) {
  return {{"t", r.t}, {"df", r.df}, {"p", r.p}};
}

TTestResult ttest_from_json(const nlohmann::json& j) {
  return {j.at("t").get<double>(), j.at("df").get<double>(), j.at("p").get<double>()};
}

}  // namespace

nlohmann::json fairness_report_to_json(const FairnessReport& report) {
  nlohmann::json j;
  j["format"] = "fairness-report/1";
  j["group_key"] = std::string(group_key_name(report.group_key));
  j["alpha"] = report.alpha;
  j["baseline"] = report.baseline ? nlohmann::json(*report.baseline) : nlohmann::json(nullptr);
  j["models"] = nlohmann::json::array();
  for (const auto& mf : report.models) {
    nlohmann::json model;
    model["model_id"] = mf.model_id;
    model["groups"] = nlohmann::json::array();
    for (const auto& gm : mf.groups) model["groups"].push_back(group_metrics_to_json(gm));
    if (mf.significance) {
      model["significance"] = {{"bacc", ttest_to_json(mf.significance->bacc)},
                               {"f1_macro", ttest_to_json(mf.significance->f1_macro)},
                               {"bacc_significant", mf.significance->bacc_significant},
                               {"f1_significant", mf.significance->f1_significant}};
    } else {
      model["significance"] = nullptr;
    }
    j["models"].push_back(std::move(model));
  }
  return j;
}

FairnessReport fairness_report_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "fairness-report/1")
    throw ValidationError("BadFormat", "expected a fairness-report/1 document");
  FairnessReport report;
  report.group_key = group_key_from_name(doc.at("group_key").get<std::string>());
  report.alpha = doc.at("alpha").get<double>();
  if (!doc.at("baseline").is_null()) report.baseline = doc.at("baseline").get<std::string>();
  for (const auto& model : doc.at("models")) {
    ModelFairness mf;
    mf.model_id = model.at("model_id").get<std::string>();
    for (const auto& gm : model.at("groups")) mf.groups.push_back(group_metrics_from_json(gm));
    if (!model.at("significance").is_null()) {
      const auto& sig = model.at("significance");
      MetricSignificance ms;
      ms.bacc = ttest_from_json(sig.at("bacc"));
      ms.f1_macro = ttest_from_json(sig.at("f1_macro"));
      ms.bacc_significant = sig.at("bacc_significant").get<bool>();
      ms.f1_significant = sig.at("f1_significant").get<bool>();
      mf.significance = ms;
    }
    report.models.push_back(std::move(mf));
  }
  return report;
}

std::string serialize_fairness_report(const FairnessReport& report) {
  return fairness_report_to_json(report).dump(2) + "\n";
}

FairnessReport load_fairness_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ParseError", path.string() + ": " + e.what());
  }
  return fairness_report_from_json(doc);
}

std::string fairness_report_to_csv(const FairnessReport& report) {
  std::string out = "model_id,group,n,bacc,f1_macro,label,precision,recall\n";
  for (const auto& mf : report.models) {
    for (const auto& gm : mf.groups) {
      const std::string prefix = csv_escape(mf.model_id) + ',' + csv_escape(gm.group) + ',' +
                                 std::to_string(gm.n) + ',' +
                                 (gm.bacc ? format_pct(*gm.bacc) : std::string()) + ',' +
                                 (gm.f1_macro ? format_pct(*gm.f1_macro) : std::string());
      if (gm.per_class.empty()) {
        out += prefix + ",,,\n";
        continue;
      }
      for (const auto& [label, pr] : gm.per_class) {
        out += prefix + ',' + csv_escape(label) + ',' + format_pct(pr.precision) + ',' +
               format_pct(pr.recall) + '\n';
      }
    }
  }
  return out;
}

}  // namespace compass
