#include "compass/report.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace compass {

namespace {

std::string fmt2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string fmt3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

}  // namespace

nlohmann::json report_bundle_to_json(const ReportBundle& bundle) {
  nlohmann::json j;
  j["format"] = "report-bundle/1";
  j["version"] = bundle.version;
  j["timestamp"] = bundle.timestamp;
  j["probes"] = nlohmann::json::array();
  for (const auto& probe : bundle.probes) j["probes"].push_back(probe_result_to_json(probe));
  j["stability"] = nlohmann::json::array();
  for (const auto& report : bundle.stability)
    j["stability"].push_back(stability_report_to_json(report));
  j["fairness"] = nlohmann::json::array();
  for (const auto& report : bundle.fairness)
    j["fairness"].push_back(fairness_report_to_json(report));
  return j;
}

ReportBundle report_bundle_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "report-bundle/1")
    throw ValidationError("BadFormat", "expected a report-bundle/1 document");
  ReportBundle bundle;
  bundle.version = doc.at("version").get<std::string>();
  bundle.timestamp = doc.at("timestamp").get<std::string>();
  for (const auto& probe : doc.at("probes"))
    bundle.probes.push_back(probe_result_from_json(probe));
  for (const auto& report : doc.at("stability"))
    bundle.stability.push_back(stability_report_from_json(report));
  for (const auto& report : doc.at("fairness"))
    bundle.fairness.push_back(fairness_report_from_json(report));
  return bundle;
}

std::string serialize_report_bundle(const ReportBundle& bundle) {
  return report_bundle_to_json(bundle).dump(2) + "\n";
}

ReportBundle load_report_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ParseError", path.string() + ": " + e.what());
  }
  return report_bundle_from_json(doc);
}

std::string render_markdown(const ReportBundle& bundle, const std::string& svg_ref) {
  std::string md = "# Compass audit report\n\n";
  md += "- tool version: " + bundle.version + "\n";
  if (!bundle.timestamp.empty()) md += "- generated: " + bundle.timestamp + "\n";
  md += "\n";

  if (!bundle.probes.empty()) {
    md += "## Model positions\n\n";
    if (!svg_ref.empty()) md += "![compass](" + svg_ref + ")\n\n";
    md += "| model | mode | social | economic | answered |\n";
    md += "|---|---|---:|---:|---:|\n";
    for (const auto& probe : bundle.probes) {
      md += "| " + probe.model_id + " | " + std::string(probe_mode_name(probe.mode)) + " | " +
            fmt2(probe.point.social) + " | " + fmt2(probe.point.economic) + " | " +
            std::to_string(probe.sheet.answers.size()) + "/" +
            std::to_string(probe.sheet.answers.size() + probe.sheet.unanswered.size()) + " |\n";
    }
    md += "\n";
  }

  if (!bundle.stability.empty()) {
    md += "## Stability\n\n";
    for (const auto& report : bundle.stability) {
      md += "- centroid (" + fmt2(report.centroid.social) + ", " +
            fmt2(report.centroid.economic) + "), point spread " + fmt3(report.point_spread) +
            " over " + std::to_string(report.variants.size()) + " variants\n";
      md += "\n| variant | social | economic |\n|---|---:|---:|\n";
      for (const auto& vp : report.variants) {
        if (vp.failed) {
          md += "| " + vp.variant_id + " | failed | failed |\n";
        } else {
          md += "| " + vp.variant_id + " | " + fmt2(vp.point.social) + " | " +
                fmt2(vp.point.economic) + " |\n";
        }
      }
      md += "\n";
    }
  }

  if (!bundle.fairness.empty()) {
    md += "## Downstream fairness\n\n";
    for (const auto& report : bundle.fairness) {
      md += "Grouped by " + std::string(group_key_name(report.group_key));
      if (report.baseline)
        md += "; * marks p < " + fmt2(report.alpha) + " vs " + *report.baseline;
      md += "\n\n| model | group | n | BACC | F1 |\n|---|---|---:|---:|---:|\n";
      for (const auto& mf : report.models) {
        const bool starred = mf.significance &&
                             (mf.significance->bacc_significant || mf.significance->f1_significant);
        for (const auto& gm : mf.groups) {
          md += "| " + mf.model_id + (starred ? "*" : "") + " | " + gm.group + " | " +
                std::to_string(gm.n) + " | " + (gm.bacc ? fmt2(*gm.bacc) : std::string("n/a")) +
                " | " + (gm.f1_macro ? fmt2(*gm.f1_macro) : std::string("n/a")) + " |\n";
        }
      }
      md += "\n";
    }
  }
  return md;
}

}  // namespace compass
