#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compass/probing.hpp"

namespace compass {

// One probe variant: a prompt template and/or an alternate (paraphrased)
// statement bank. A null bank means the suite's base bank.
struct VariantSpec {
  std::string variant_id;
  std::optional<int> template_id;
  const StatementBank* bank = nullptr;
};

struct VariantRun {
  std::string variant_id;
  bool failed = false;
  std::string error;
  std::optional<ProbeResult> result;
};

// Runs one probe per variant against the same provider, lexicon, table and
// config, preserving variant order. A failing variant is flagged and the
// suite continues. Variants run sequentially unless concurrent is set.
std::vector<VariantRun> run_variants(Provider& provider, const StatementBank& base_bank,
                                     const std::vector<VariantSpec>& variants,
                                     const LexiconSet& lexicon, const ScoringTable& table,
                                     const ProbeConfig& config, ProbeMode mode,
                                     const std::string& model_id, bool concurrent = false);

struct StatementSpread {
  // Population standard deviation of agreement values across variants;
  // absent when the statement abstained in every variant (distinct from 0).
  std::optional<double> spread;
  int count = 0;  // variants that answered
};

struct VariantPoint {
  std::string variant_id;
  bool failed = false;
  CompassPoint point;
};

struct StabilityReport {
  CompassPoint centroid;
  double point_spread = 0.0;  // mean Euclidean distance from the centroid
  std::map<int, StatementSpread> per_statement;
  std::vector<VariantPoint> variants;
};

// Dispersion across variant runs; failed variants are excluded from the
// statistics but kept in the variant list. Throws when no run succeeded.
StabilityReport stability_report(const std::vector<VariantRun>& runs);

// stability-report/1 serialization.
nlohmann::json stability_report_to_json(const StabilityReport& report);
StabilityReport stability_report_from_json(const nlohmann::json& doc);
std::string serialize_stability_report(const StabilityReport& report);
StabilityReport load_stability_report(const std::filesystem::path& path);

}  // namespace compass
