#include "compass/stability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace compass {

std::vector<VariantRun> run_variants(Provider& provider, const StatementBank& base_bank,
                                     const std::vector<VariantSpec>& variants,
                                     const LexiconSet& lexicon, const ScoringTable& table,
                                     const ProbeConfig& config, ProbeMode mode,
                                     const std::string& model_id, bool concurrent) {
  if (variants.empty()) throw ValidationError("BadConfig", "need at least one variant");

  std::vector<VariantRun> runs(variants.size());
  auto run_one = [&](std::size_t index) {
    const VariantSpec& spec = variants[index];
    VariantRun& run = runs[index];
    run.variant_id = spec.variant_id;
    ProbeConfig variant_config = config;
    if (spec.template_id) variant_config.prompt_template_id = *spec.template_id;
    const StatementBank& bank = spec.bank ? *spec.bank : base_bank;
    try {
      run.result = probe_model(provider, bank, lexicon, table, variant_config, mode, model_id);
    } catch (const Error& e) {
      run.failed = true;
      run.error = e.what();
    }
  };

  if (!concurrent) {
    for (std::size_t i = 0; i < variants.size(); ++i) run_one(i);
    return runs;
  }

  // Same parallelism bound as probing, applied across variants; each
  // variant's inner probe then runs sequentially.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= variants.size()) return;
      run_one(index);
    }
  };
  const int thread_count = std::min<int>(config.parallelism, static_cast<int>(variants.size()));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return runs;
}

StabilityReport stability_report(const std::vector<VariantRun>& runs) {
  if (runs.empty()) throw ValidationError("BadConfig", "need at least one run");

  StabilityReport report;
  std::vector<const ProbeResult*> ok;
  for (const auto& run : runs) {
    VariantPoint vp;
    vp.variant_id = run.variant_id;
    vp.failed = run.failed;
    if (!run.failed && run.result) {
      vp.point = run.result->point;
      ok.push_back(&*run.result);
    }
    report.variants.push_back(std::move(vp));
  }
  if (ok.empty()) throw ValidationError("NoSuccessfulRuns", "every variant failed");

  for (const ProbeResult* result : ok) {
    report.centroid.social += result->point.social;
    report.centroid.economic += result->point.economic;
  }
  report.centroid.social /= static_cast<double>(ok.size());
  report.centroid.economic /= static_cast<double>(ok.size());

  double distance_sum = 0.0;
  for (const ProbeResult* result : ok)
    distance_sum += std::hypot(result->point.social - report.centroid.social,
                               result->point.economic - report.centroid.economic);
  report.point_spread = distance_sum / static_cast<double>(ok.size());

  // Statement universe: ids answered or abstained by any successful run.
  std::set<int> ids;
  for (const ProbeResult* result : ok) {
    for (const auto& [id, level] : result->sheet.answers) ids.insert(id);
    for (int id : result->sheet.unanswered) ids.insert(id);
  }
  for (int id : ids) {
    std::vector<int> values;
    for (const ProbeResult* result : ok) {
      auto it = result->sheet.answers.find(id);
      if (it != result->sheet.answers.end()) values.push_back(agreement_value(it->second));
    }
    StatementSpread spread;
    spread.count = static_cast<int>(values.size());
    if (!values.empty()) {
      double mean = 0.0;
      for (int v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (int v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size());
      spread.spread = std::sqrt(var);
    }
    report.per_statement.emplace(id, spread);
  }
  return report;
}

nlohmann::json stability_report_to_json(const StabilityReport& report) {
  nlohmann::json j;
  j["format"] = "stability-report/1";
  j["centroid"] = {{"social", report.centroid.social}, {"economic", report.centroid.economic}};
  j["point_spread"] = report.point_spread;
  nlohmann::json per_statement = nlohmann::json::object();
  for (const auto& [id, s] : report.per_statement)
    per_statement[std::to_string(id)] = {
        {"spread", s.spread ? nlohmann::json(*s.spread) : nlohmann::json(nullptr)},
        {"count", s.count}};
  j["per_statement"] = per_statement;
  j["variants"] = nlohmann::json::array();
  for (const auto& vp : report.variants)
    j["variants"].push_back({{"variant_id", vp.variant_id},
                             {"failed", vp.failed},
                             {"point", {{"social", vp.point.social},
                                        {"economic", vp.point.economic}}}});
  return j;
}

StabilityReport stability_report_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "stability-report/1")
    throw ValidationError("BadFormat", "expected a stability-report/1 document");
  StabilityReport report;
  report.centroid.social = doc.at("centroid").at("social").get<double>();
  report.centroid.economic = doc.at("centroid").at("economic").get<double>();
  report.point_spread = doc.at("point_spread").get<double>();
  for (const auto& [key, value] : doc.at("per_statement").items()) {
    StatementSpread s;
    s.count = value.at("count").get<int>();
    if (!value.at("spread").is_null()) s.spread = value.at("spread").get<double>();
    report.per_statement.emplace(std::stoi(key), s);
  }
  for (const auto& vp : doc.at("variants")) {
    VariantPoint point;
    point.variant_id = vp.at("variant_id").get<std::string>();
    point.failed = vp.at("failed").get<bool>();
    point.point.social = vp.at("point").at("social").get<double>();
    point.point.economic = vp.at("point").at("economic").get<double>();
    report.variants.push_back(std::move(point));
  }
  return report;
}

std::string serialize_stability_report(const StabilityReport& report) {
  return stability_report_to_json(report).dump(2) + "\n";
}

StabilityReport load_stability_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ParseError", path.string() + ": " + e.what());
  }
  return stability_report_from_json(doc);
}

}  // namespace compass
