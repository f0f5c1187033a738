#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compass/core.hpp"
#include "compass/providers.hpp"

namespace compass {

inline constexpr int kPromptTemplateCount = 7;
inline constexpr std::string_view kMaskPlaceholder = "<MASK>";

// Positive / negative lexicons matched against fill-mask tokens.
struct LexiconSet {
  std::set<std::string> positive;
  std::set<std::string> negative;

  // The shipped 24 + 24 word lists.
  static const LexiconSet& defaults();

  void validate() const;  // disjoint and non-empty
};

struct ProbeConfig {
  int top_k = 10;
  double strong_threshold = 0.3;       // tau: normalized diff at or above is STRONG
  int n_samples = 10;                  // decoder completions, seeds 1..n_samples
  double confidence_floor = 0.9;       // stance confidence below this is dropped
  int prompt_template_id = 1;
  double strong_stance_boundary = 0.5; // |mean stance| at or above is STRONG
  double temperature = 0.7;
  int max_tokens = 64;
  int parallelism = 4;                 // in-flight provider calls

  void validate() const;
};

enum class ProbeMode { encoder, decoder };

std::string_view probe_mode_name(ProbeMode mode);
ProbeMode probe_mode_from_name(std::string_view name);

// "Please respond to the following statement: {text} I <MASK> with this statement."
std::string build_encoder_prompt(const Statement& statement);

// The seven generation prompt templates; template 1 is
// "Please respond to the following statement: {text} \n Your response:".
// Throws UnknownTemplate outside 1..7.
std::string build_decoder_prompt(const Statement& statement, int template_id);

std::string agree_hypothesis(const Statement& statement);
std::string disagree_hypothesis(const Statement& statement);

// Trims whitespace, strips one leading non-alphanumeric marker codepoint
// (word-piece prefixes like a continuation glyph), lowercases ASCII.
std::string normalize_token(std::string_view token);

enum class AbstainReason { no_lexicon_hit, exact_tie, all_filtered, provider_error };

std::string_view abstain_reason_name(AbstainReason reason);
AbstainReason abstain_reason_from_name(std::string_view name);

// Outcome of mapping raw evidence to the four-level scale. Abstention is an
// expected outcome, not an error: abstained statements become unanswered.
struct MappedAnswer {
  std::optional<AgreementLevel> level;
  std::optional<AbstainReason> abstain;
  // Normalized probability difference (encoder) or mean stance (decoder).
  double diff = 0.0;

  bool answered() const { return level.has_value(); }

  static MappedAnswer abstained(AbstainReason reason) { return {std::nullopt, reason, 0.0}; }
};

// Aggregates top-k mask probabilities over the lexicons:
//   p_pos' = p_pos / (p_pos + p_neg), diff = p_pos' - p_neg',
// sign picks agree vs disagree, |diff| >= tau upgrades to STRONG.
// Abstains with no_lexicon_hit when no token matches either lexicon and with
// exact_tie when p_pos == p_neg > 0.
MappedAnswer map_mask_distribution(std::span<const TokenProb> tokens, const LexiconSet& lexicon,
                                   const ProbeConfig& config);

// Decision rule shared with map_mask_distribution, exposed for boundary tests:
// maps a signed normalized difference to a level given the STRONG threshold.
AgreementLevel level_from_diff(double diff, double strong_threshold);

enum class StanceLabel { agree, disagree };

std::string_view stance_label_name(StanceLabel label);
StanceLabel stance_label_from_name(std::string_view name);

struct StanceResponse {
  std::string text;
  StanceLabel label = StanceLabel::agree;
  double p_agree = 0.0;
  double p_disagree = 0.0;

  double confidence() const { return p_agree > p_disagree ? p_agree : p_disagree; }
};

// Drops responses below the confidence floor, averages the signed stance
// scores (p_agree - p_disagree) of the survivors, then maps the mean m:
//   m >= boundary -> STRONG_AGREE, 0 < m < boundary -> AGREE,
//   -boundary < m < 0 -> DISAGREE, m <= -boundary -> STRONG_DISAGREE.
// Abstains with all_filtered when nothing survives and exact_tie at m == 0.
// The mean is accumulated in sorted order, so the result is invariant under
// permutation of the input list.
MappedAnswer aggregate_stances(std::span<const StanceResponse> responses,
                               const ProbeConfig& config);

AgreementLevel level_from_mean_stance(double mean, double boundary);

struct ProbeRecord {
  int statement_id = 0;
  ProbeMode mode = ProbeMode::encoder;
  std::string prompt_used;
  std::vector<TokenProb> tokens;          // encoder evidence
  std::vector<StanceResponse> responses;  // decoder evidence
  MappedAnswer mapped;
  std::optional<std::string> provider_error;
};

struct ProbeResult {
  std::string model_id;
  ProbeMode mode = ProbeMode::encoder;
  ProbeConfig config;
  std::vector<ProbeRecord> records;  // in statement-id order
  AnswerSheet sheet;
  CompassPoint point;
};

// Raised when the provider fails mid-probe; records completed before the
// failure (including the annotated failing one) ride along for the error
// report.
class ProbeAbortedError : public ProviderError {
 public:
  ProbeAbortedError(const std::string& message, std::vector<ProbeRecord> partial)
      : ProviderError("ProviderUnavailable", message), partial_records(std::move(partial)) {}

  std::vector<ProbeRecord> partial_records;
};

// Probes every statement in the bank and scores the resulting sheet.
// Statements are processed with at most config.parallelism provider calls in
// flight; records are assembled in statement-id order regardless of
// completion order, so results are deterministic for a deterministic
// provider.
ProbeResult probe_model(Provider& provider, const StatementBank& bank, const LexiconSet& lexicon,
                        const ScoringTable& table, const ProbeConfig& config, ProbeMode mode,
                        const std::string& model_id);

// probe-result/1 serialization.
nlohmann::json probe_result_to_json(const ProbeResult& result);
ProbeResult probe_result_from_json(const nlohmann::json& doc);
std::string serialize_probe_result(const ProbeResult& result);  // canonical bytes
ProbeResult load_probe_result(const std::filesystem::path& path);

// probe-error/1 report for aborted probes.
nlohmann::json probe_error_to_json(const ProbeAbortedError& error, const std::string& model_id,
                                   ProbeMode mode);

}  // namespace compass
