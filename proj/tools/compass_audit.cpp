#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "compass/fairness.hpp"
#include "compass/mock.hpp"
#include "compass/probing.hpp"
#include "compass/providers.hpp"
#include "compass/report.hpp"
#include "compass/stability.hpp"
#include "compass/svg.hpp"

namespace {

using namespace compass;

std::atomic<bool> g_stop_requested{false};

void handle_signal(int) { g_stop_requested.store(true); }

StatementBank resolve_bank(const std::string& spec) {
  if (spec == "default") return default_statement_bank();
  return load_statement_bank(spec);
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path == "-") {
    std::cout << bytes;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("FileError", "cannot write " + path);
  out << bytes;
}

std::string current_utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ProbeFlags {
  std::string endpoint;
  std::string bank = "default";
  std::string table;
  std::string mode = "encoder";
  std::string model_id = "model";
  ProbeConfig config;
  int timeout_ms = 30000;
  int retries = 2;
};

void add_probe_flags(CLI::App* cmd, ProbeFlags& flags) {
  cmd->add_option("--endpoint", flags.endpoint, "Provider base URL")->required();
  cmd->add_option("--bank", flags.bank, "Statement bank file, or 'default'");
  cmd->add_option("--table", flags.table, "Scoring table override file");
  cmd->add_option("--mode", flags.mode, "encoder or decoder")
      ->check(CLI::IsMember({"encoder", "decoder"}));
  cmd->add_option("--model-id", flags.model_id, "Identifier recorded in the result");
  cmd->add_option("--template", flags.config.prompt_template_id, "Decoder prompt template 1..7");
  cmd->add_option("--top-k", flags.config.top_k, "Fill-mask tokens requested");
  cmd->add_option("--tau", flags.config.strong_threshold, "STRONG threshold on normalized diff");
  cmd->add_option("--samples", flags.config.n_samples, "Decoder completions per statement");
  cmd->add_option("--confidence", flags.config.confidence_floor, "Stance confidence floor");
  cmd->add_option("--boundary", flags.config.strong_stance_boundary,
                  "STRONG boundary on mean stance");
  cmd->add_option("--temperature", flags.config.temperature, "Decoder sampling temperature");
  cmd->add_option("--max-tokens", flags.config.max_tokens, "Completion length cap");
  cmd->add_option("--parallel", flags.config.parallelism, "In-flight provider calls");
  cmd->add_option("--timeout", flags.timeout_ms, "Request timeout in ms");
  cmd->add_option("--retries", flags.retries, "Retries on 5xx/timeout");
}

HttpProvider make_provider(const ProbeFlags& flags) {
  ProviderEndpoint endpoint = ProviderEndpoint::from_env(flags.endpoint);
  endpoint.timeout_ms = flags.timeout_ms;
  endpoint.max_retries = flags.retries;
  return HttpProvider(std::move(endpoint));
}

int run_probe(const ProbeFlags& flags, const std::string& out_path) {
  const StatementBank bank = resolve_bank(flags.bank);
  const ScoringTable table =
      flags.table.empty() ? ScoringTable::from_bank(bank) : load_scoring_table(flags.table);
  const ProbeMode mode = probe_mode_from_name(flags.mode == "encoder" ? "ENCODER" : "DECODER");
  HttpProvider provider = make_provider(flags);
  try {
    const ProbeResult result = probe_model(provider, bank, LexiconSet::defaults(), table,
                                           flags.config, mode, flags.model_id);
    write_output(out_path, serialize_probe_result(result));
  } catch (const ProbeAbortedError& e) {
    const std::string error_path = out_path == "-" ? "probe-error.json" : out_path + ".error.json";
    write_output(error_path, probe_error_to_json(e, flags.model_id, mode).dump(2) + "\n");
    std::cerr << "error: " << e.what() << "\n"
              << "partial records written to " << error_path << "\n";
    return 2;
  }
  return 0;
}

int run_stability(const ProbeFlags& flags, const std::vector<int>& templates,
                  const std::vector<std::string>& bank_paths, bool concurrent,
                  const std::string& out_path) {
  const StatementBank bank = resolve_bank(flags.bank);
  const ScoringTable table =
      flags.table.empty() ? ScoringTable::from_bank(bank) : load_scoring_table(flags.table);
  const ProbeMode mode = probe_mode_from_name(flags.mode == "encoder" ? "ENCODER" : "DECODER");

  std::vector<StatementBank> variant_banks;
  variant_banks.reserve(bank_paths.size());
  for (const auto& path : bank_paths) variant_banks.push_back(load_statement_bank(path));

  std::vector<VariantSpec> variants;
  for (int id : templates)
    variants.push_back({"template-" + std::to_string(id), id, nullptr});
  for (std::size_t i = 0; i < variant_banks.size(); ++i)
    variants.push_back({"bank-" + std::filesystem::path(bank_paths[i]).stem().string(),
                        std::nullopt, &variant_banks[i]});
  if (variants.empty()) {
    if (mode == ProbeMode::decoder) {
      for (int id = 1; id <= kPromptTemplateCount; ++id)
        variants.push_back({"template-" + std::to_string(id), id, nullptr});
    } else {
      throw ValidationError("BadConfig",
                            "encoder stability needs --banks (templates are decoder-only)");
    }
  }

  HttpProvider provider = make_provider(flags);
  const auto runs = run_variants(provider, bank, variants, LexiconSet::defaults(), table,
                                 flags.config, mode, flags.model_id, concurrent);
  const StabilityReport report = stability_report(runs);
  write_output(out_path, serialize_stability_report(report));
  for (const auto& run : runs) {
    if (run.failed) std::cerr << "variant " << run.variant_id << " failed: " << run.error << "\n";
  }
  return 0;
}

int run_fairness(const std::string& predictions_path, const std::string& group_key,
                 const std::string& baseline, double alpha, const std::string& out_path,
                 const std::string& csv_path) {
  const auto records = load_predictions(predictions_path);
  SignificanceConfig significance;
  significance.alpha = alpha;
  const FairnessReport report =
      fairness_report(records, group_key_from_name(group_key),
                      baseline.empty() ? std::nullopt : std::optional<std::string>(baseline),
                      significance);
  write_output(out_path, serialize_fairness_report(report));
  if (!csv_path.empty()) write_output(csv_path, fairness_report_to_csv(report));
  return 0;
}

int run_ensemble(const std::vector<std::string>& prediction_paths, const std::string& mode,
                 const std::string& out_path) {
  std::vector<PredictionRecord> records;
  for (const auto& path : prediction_paths) {
    auto batch = load_predictions(path);
    records.insert(records.end(), std::make_move_iterator(batch.begin()),
                   std::make_move_iterator(batch.end()));
  }
  const auto combined =
      ensemble_vote(records, ensemble_mode_from_name(mode == "majority" ? "MAJORITY" : "MEAN_SCORE"));
  write_output(out_path, predictions_to_csv(combined));
  return 0;
}

int run_report(const std::vector<std::string>& probe_paths,
               const std::vector<std::string>& stability_paths,
               const std::vector<std::string>& fairness_paths, const std::string& out_path,
               const std::string& svg_path, const std::string& bundle_path,
               const std::string& timestamp, bool timestamp_given) {
  ReportBundle bundle;
  bundle.timestamp = timestamp_given ? timestamp : current_utc_timestamp();
  for (const auto& path : probe_paths) bundle.probes.push_back(load_probe_result(path));
  for (const auto& path : stability_paths)
    bundle.stability.push_back(load_stability_report(path));
  for (const auto& path : fairness_paths)
    bundle.fairness.push_back(load_fairness_report(path));

  std::string svg_ref;
  if (!svg_path.empty()) {
    if (bundle.probes.empty())
      throw ValidationError("BadConfig", "--svg needs at least one probe result");
    std::vector<std::pair<std::string, CompassPoint>> points;
    for (const auto& probe : bundle.probes) points.emplace_back(probe.model_id, probe.point);
    SvgOptions options;
    if (timestamp_given) options.timestamp = timestamp;
    write_output(svg_path, render_compass_svg(points, options));
    svg_ref = std::filesystem::path(svg_path).filename().string();
  }
  if (!bundle_path.empty()) write_output(bundle_path, serialize_report_bundle(bundle));
  write_output(out_path, render_markdown(bundle, svg_ref));
  return 0;
}

int run_mock_server(const std::string& latent_spec, double noise, std::uint64_t seed,
                    const std::string& host, int port, const std::string& bank_spec) {
  CompassPoint latent;
  if (std::sscanf(latent_spec.c_str(), "%lf,%lf", &latent.social, &latent.economic) != 2)
    throw ValidationError("BadConfig", "--latent expects 'social,economic'");

  StatementBank bank = resolve_bank(bank_spec);
  MockRespondentConfig config;
  config.latent = latent;
  config.noise = noise;
  config.seed = seed;
  config.table = ScoringTable::from_bank(bank);
  config.validate();

  MockServer server(std::move(config), std::move(bank));
  const int bound = server.start(host, port);
  std::cout << bound << std::endl;
  std::cerr << "mock respondent at http://" << host << ":" << bound
            << " (latent " << latent.social << "," << latent.economic << ", noise " << noise
            << ", seed " << seed << ")\n";

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop_requested.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Political-leaning audit toolkit for language models"};
  app.require_subcommand(1);

  ProbeFlags probe_flags;
  std::string probe_out = "-";
  auto* probe_cmd = app.add_subcommand("probe", "Probe a model into a compass point");
  add_probe_flags(probe_cmd, probe_flags);
  probe_cmd->add_option("--out", probe_out, "Output file ('-' for stdout)");

  ProbeFlags stability_flags;
  std::string stability_out = "-";
  std::vector<int> stability_templates;
  std::vector<std::string> stability_banks;
  bool stability_concurrent = false;
  auto* stability_cmd =
      app.add_subcommand("stability", "Re-probe across prompt templates and banks");
  add_probe_flags(stability_cmd, stability_flags);
  stability_cmd->add_option("--templates", stability_templates,
                            "Decoder template ids (default: all 7)")
      ->delimiter(',');
  stability_cmd->add_option("--banks", stability_banks, "Paraphrase bank files")->delimiter(',');
  stability_cmd->add_flag("--concurrent", stability_concurrent, "Run variants concurrently");
  stability_cmd->add_option("--out", stability_out, "Output file ('-' for stdout)");

  std::string fairness_predictions;
  std::string fairness_group_key = "group";
  std::string fairness_baseline;
  double fairness_alpha = 0.05;
  std::string fairness_out = "-";
  std::string fairness_csv;
  auto* fairness_cmd = app.add_subcommand("fairness", "Per-group downstream metrics");
  fairness_cmd->add_option("--predictions", fairness_predictions, "Prediction CSV")->required();
  fairness_cmd->add_option("--group-key", fairness_group_key, "group or group_leaning")
      ->check(CLI::IsMember({"group", "group_leaning"}));
  fairness_cmd->add_option("--baseline", fairness_baseline,
                           "Model to Welch-test the others against, across seeds");
  fairness_cmd->add_option("--alpha", fairness_alpha, "Significance level");
  fairness_cmd->add_option("--out", fairness_out, "Report JSON ('-' for stdout)");
  fairness_cmd->add_option("--csv", fairness_csv, "Also write a flat CSV rendering");

  std::vector<std::string> ensemble_predictions;
  std::string ensemble_mode = "majority";
  std::string ensemble_out = "-";
  auto* ensemble_cmd = app.add_subcommand("ensemble", "Combine per-model predictions");
  ensemble_cmd->add_option("--predictions", ensemble_predictions, "Prediction CSV(s)")
      ->required()
      ->delimiter(',');
  ensemble_cmd->add_option("--mode", ensemble_mode, "majority or mean-score")
      ->check(CLI::IsMember({"majority", "mean-score"}));
  ensemble_cmd->add_option("--out", ensemble_out, "Output CSV ('-' for stdout)");

  std::vector<std::string> report_probes;
  std::vector<std::string> report_stability;
  std::vector<std::string> report_fairness;
  std::string report_out = "-";
  std::string report_svg;
  std::string report_bundle;
  std::string report_timestamp;
  auto* report_cmd = app.add_subcommand("report", "Compose a Markdown report with an SVG plot");
  report_cmd->add_option("--probe", report_probes, "probe-result/1 file(s)")->delimiter(',');
  report_cmd->add_option("--stability", report_stability, "stability-report/1 file(s)")
      ->delimiter(',');
  report_cmd->add_option("--fairness", report_fairness, "fairness-report/1 file(s)")
      ->delimiter(',');
  report_cmd->add_option("--out", report_out, "Markdown output ('-' for stdout)");
  report_cmd->add_option("--svg", report_svg, "Compass SVG output file");
  report_cmd->add_option("--bundle", report_bundle, "report-bundle/1 JSON output file");
  auto* timestamp_opt =
      report_cmd->add_option("--timestamp", report_timestamp, "Fixed timestamp for reproducible bytes");

  std::string mock_latent = "0,0";
  double mock_noise = 0.0;
  std::uint64_t mock_seed = 0;
  std::string mock_host = "127.0.0.1";
  int mock_port = 0;
  std::string mock_bank = "default";
  auto* mock_cmd = app.add_subcommand("mock-server", "Serve a deterministic mock respondent");
  mock_cmd->add_option("--latent", mock_latent, "Latent point 'social,economic'");
  mock_cmd->add_option("--noise", mock_noise, "Stance flip probability [0, 1]");
  mock_cmd->add_option("--seed", mock_seed, "Deterministic seed");
  mock_cmd->add_option("--host", mock_host, "Bind host");
  mock_cmd->add_option("--port", mock_port, "Bind port (0 picks a free port)");
  mock_cmd->add_option("--bank", mock_bank, "Statement bank file, or 'default'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (probe_cmd->parsed()) return run_probe(probe_flags, probe_out);
    if (stability_cmd->parsed())
      return run_stability(stability_flags, stability_templates, stability_banks,
                           stability_concurrent, stability_out);
    if (fairness_cmd->parsed())
      return run_fairness(fairness_predictions, fairness_group_key, fairness_baseline,
                          fairness_alpha, fairness_out, fairness_csv);
    if (ensemble_cmd->parsed()) return run_ensemble(ensemble_predictions, ensemble_mode, ensemble_out);
    if (report_cmd->parsed())
      return run_report(report_probes, report_stability, report_fairness, report_out, report_svg,
                        report_bundle, report_timestamp, timestamp_opt->count() > 0);
    if (mock_cmd->parsed())
      return run_mock_server(mock_latent, mock_noise, mock_seed, mock_host, mock_port, mock_bank);
  } catch (const ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
