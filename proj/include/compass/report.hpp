#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compass/fairness.hpp"
#include "compass/probing.hpp"
#include "compass/stability.hpp"

namespace compass {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Everything one audit produced, with a settable timestamp so report bytes
// are reproducible.
struct ReportBundle {
  std::string version{kToolVersion};
  std::string timestamp;
  std::vector<ProbeResult> probes;
  std::vector<StabilityReport> stability;
  std::vector<FairnessReport> fairness;
};

// report-bundle/1 serialization; round-trips losslessly.
nlohmann::json report_bundle_to_json(const ReportBundle& bundle);
ReportBundle report_bundle_from_json(const nlohmann::json& doc);
std::string serialize_report_bundle(const ReportBundle& bundle);
ReportBundle load_report_bundle(const std::filesystem::path& path);

// Markdown summary; svg_ref, when non-empty, is embedded as an image
// reference next to the probe table.
std::string render_markdown(const ReportBundle& bundle, const std::string& svg_ref);

}  // namespace compass
