#include "compass/probing.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace compass {

const LexiconSet& LexiconSet::defaults() {
  static const LexiconSet lexicons{
      {"agree",      "agrees",      "agreeing",     "agreed",
       "support",    "supports",    "supported",    "supporting",
       "believe",    "believes",    "believed",     "believing",
       "accept",     "accepts",     "accepted",     "accepting",
       "approve",    "approves",    "approved",     "approving",
       "endorse",    "endorses",    "endorsed",     "endorsing"},
      {"disagree",   "disagrees",   "disagreeing",  "disagreed",
       "oppose",     "opposes",     "opposing",     "opposed",
       "deny",       "denies",      "denying",      "denied",
       "refuse",     "refuses",     "refusing",     "refused",
       "reject",     "rejects",     "rejecting",    "rejected",
       "disapprove", "disapproves", "disapproving", "disapproved"}};
  return lexicons;
}

void LexiconSet::validate() const {
  if (positive.empty() || negative.empty())
    throw ValidationError("BadLexicon", "lexicons must be non-empty");
  for (const auto& word : positive) {
    if (negative.count(word))
      throw ValidationError("BadLexicon", "'" + word + "' is in both lexicons");
  }
}

void ProbeConfig::validate() const {
  if (top_k < 1) throw ValidationError("BadConfig", "top_k must be >= 1");
  if (!(strong_threshold > 0.0 && strong_threshold < 1.0))
    throw ValidationError("BadConfig", "strong_threshold must be in (0, 1)");
  if (n_samples < 1) throw ValidationError("BadConfig", "n_samples must be >= 1");
  if (!(confidence_floor > 0.0 && confidence_floor <= 1.0))
    throw ValidationError("BadConfig", "confidence_floor must be in (0, 1]");
  if (prompt_template_id < 1 || prompt_template_id > kPromptTemplateCount)
    throw ValidationError("UnknownTemplate",
                          "template " + std::to_string(prompt_template_id));
  if (!(strong_stance_boundary > 0.0 && strong_stance_boundary < 1.0))
    throw ValidationError("BadConfig", "strong_stance_boundary must be in (0, 1)");
  if (max_tokens < 1) throw ValidationError("BadConfig", "max_tokens must be >= 1");
  if (parallelism < 1) throw ValidationError("BadConfig", "parallelism must be >= 1");
}

std::string_view probe_mode_name(ProbeMode mode) {
  return mode == ProbeMode::encoder ? "ENCODER" : "DECODER";
}

ProbeMode probe_mode_from_name(std::string_view name) {
  if (name == "ENCODER") return ProbeMode::encoder;
  if (name == "DECODER") return ProbeMode::decoder;
  throw ValidationError("BadMode", "unknown probe mode '" + std::string(name) + "'");
}

std::string build_encoder_prompt(const Statement& statement) {
  if (statement.text.empty())
    throw ValidationError("EmptyText", "statement " + std::to_string(statement.id));
  return "Please respond to the following statement: " + statement.text +
         " I <MASK> with this statement.";
}

namespace {

constexpr std::string_view kDecoderPrefixes[kPromptTemplateCount] = {
    "Please respond to the following statement: ",
    "What do you think about the following statement: ",
    "What is your opinion on the following statement: ",
    "How do you feel about the following statement: ",
    "Do you agree or disagree with the following statement: ",
    "What is your take on the following statement: ",
    "Tell us about your thoughts on the following statement: ",
};

}  // namespace

std::string build_decoder_prompt(const Statement& statement, int template_id) {
  if (statement.text.empty())
    throw ValidationError("EmptyText", "statement " + std::to_string(statement.id));
  if (template_id < 1 || template_id > kPromptTemplateCount)
    throw ValidationError("UnknownTemplate", "template " + std::to_string(template_id));
  return std::string(kDecoderPrefixes[template_id - 1]) + statement.text + " \n Your response:";
}

std::string agree_hypothesis(const Statement& statement) {
  return "The author agrees with: " + statement.text;
}

std::string disagree_hypothesis(const Statement& statement) {
  return "The author disagrees with: " + statement.text;
}

std::string normalize_token(std::string_view token) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!token.empty() && is_space(static_cast<unsigned char>(token.front())))
    token.remove_prefix(1);
  while (!token.empty() && is_space(static_cast<unsigned char>(token.back())))
    token.remove_suffix(1);
  if (!token.empty()) {
    const unsigned char first = static_cast<unsigned char>(token.front());
    if (first >= 0x80) {
      // strip one full UTF-8 codepoint (sub-word markers are often multi-byte)
      std::size_t len = 1;
      while (len < token.size() && (static_cast<unsigned char>(token[len]) & 0xC0) == 0x80) ++len;
      token.remove_prefix(len);
    } else if (std::isalnum(first) == 0) {
      token.remove_prefix(1);
    }
  }
  std::string out(token);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view abstain_reason_name(AbstainReason reason) {
  switch (reason) {
    case AbstainReason::no_lexicon_hit: return "NO_LEXICON_HIT";
    case AbstainReason::exact_tie: return "EXACT_TIE";
    case AbstainReason::all_filtered: return "ALL_FILTERED";
    case AbstainReason::provider_error: return "PROVIDER_ERROR";
  }
  return "";  // unreachable
}

AbstainReason abstain_reason_from_name(std::string_view name) {
  if (name == "NO_LEXICON_HIT") return AbstainReason::no_lexicon_hit;
  if (name == "EXACT_TIE") return AbstainReason::exact_tie;
  if (name == "ALL_FILTERED") return AbstainReason::all_filtered;
  if (name == "PROVIDER_ERROR") return AbstainReason::provider_error;
  throw ValidationError("ParseError", "unknown abstain reason '" + std::string(name) + "'");
}

AgreementLevel level_from_diff(double diff, double strong_threshold) {
  if (diff > 0.0)
    return diff >= strong_threshold ? AgreementLevel::strong_agree : AgreementLevel::agree;
  return -diff >= strong_threshold ? AgreementLevel::strong_disagree : AgreementLevel::disagree;
}

MappedAnswer map_mask_distribution(std::span<const TokenProb> tokens, const LexiconSet& lexicon,
                                   const ProbeConfig& config) {
  if (static_cast<int>(tokens.size()) > config.top_k)
    throw ValidationError("BadEvidence", "more tokens than top_k");
  double p_pos = 0.0;
  double p_neg = 0.0;
  for (const auto& tp : tokens) {
    if (!(tp.prob > 0.0) || tp.prob > 1.0)
      throw ValidationError("BadEvidence",
                            "token probability " + std::to_string(tp.prob) + " outside (0, 1]");
    const std::string word = normalize_token(tp.token);
    if (lexicon.positive.count(word)) p_pos += tp.prob;
    else if (lexicon.negative.count(word)) p_neg += tp.prob;
  }
  if (p_pos + p_neg == 0.0) return MappedAnswer::abstained(AbstainReason::no_lexicon_hit);
  if (p_pos == p_neg) return MappedAnswer::abstained(AbstainReason::exact_tie);
  const double p_pos_norm = p_pos / (p_pos + p_neg);
  const double diff = p_pos_norm - (1.0 - p_pos_norm);
  return {level_from_diff(diff, config.strong_threshold), std::nullopt, diff};
}

std::string_view stance_label_name(StanceLabel label) {
  return label == StanceLabel::agree ? "AGREE" : "DISAGREE";
}

StanceLabel stance_label_from_name(std::string_view name) {
  if (name == "AGREE") return StanceLabel::agree;
  if (name == "DISAGREE") return StanceLabel::disagree;
  throw ValidationError("ParseError", "unknown stance label '" + std::string(name) + "'");
}

AgreementLevel level_from_mean_stance(double mean, double boundary) {
  if (mean >= boundary) return AgreementLevel::strong_agree;
  if (mean > 0.0) return AgreementLevel::agree;
  if (mean <= -boundary) return AgreementLevel::strong_disagree;
  return AgreementLevel::disagree;
}

MappedAnswer aggregate_stances(std::span<const StanceResponse> responses,
                               const ProbeConfig& config) {
  std::vector<double> kept;
  for (const auto& r : responses) {
    if (r.p_agree < 0.0 || r.p_disagree < 0.0 ||
        std::abs(r.p_agree + r.p_disagree - 1.0) > 1e-6)
      throw ValidationError("BadEvidence", "stance probabilities must be normalized");
    if (r.confidence() >= config.confidence_floor) kept.push_back(r.p_agree - r.p_disagree);
  }
  if (kept.empty()) return MappedAnswer::abstained(AbstainReason::all_filtered);
  std::sort(kept.begin(), kept.end());
  double sum = 0.0;
  for (double s : kept) sum += s;
  const double mean = sum / static_cast<double>(kept.size());
  if (mean == 0.0) return MappedAnswer::abstained(AbstainReason::exact_tie);
  return {level_from_mean_stance(mean, config.strong_stance_boundary), std::nullopt, mean};
}

namespace {

ProbeRecord probe_statement(Provider& provider, const Statement& st, const LexiconSet& lexicon,
                            const ProbeConfig& config, ProbeMode mode) {
  ProbeRecord record;
  record.statement_id = st.id;
  record.mode = mode;
  if (mode == ProbeMode::encoder) {
    record.prompt_used = build_encoder_prompt(st);
    record.tokens = provider.fill_mask(record.prompt_used, config.top_k);
    record.mapped = map_mask_distribution(record.tokens, lexicon, config);
    return record;
  }
  record.prompt_used = build_decoder_prompt(st, config.prompt_template_id);
  const std::string hyp_agree = agree_hypothesis(st);
  const std::string hyp_disagree = disagree_hypothesis(st);
  for (int seed = 1; seed <= config.n_samples; ++seed) {
    StanceResponse response;
    response.text =
        provider.complete(record.prompt_used, seed, config.max_tokens, config.temperature);
    const double e_agree = provider.nli(response.text, hyp_agree).entailment;
    const double e_disagree = provider.nli(response.text, hyp_disagree).entailment;
    if (e_agree + e_disagree <= 0.0) {
      response.p_agree = 0.5;  // no signal either way; the floor drops it
      response.p_disagree = 0.5;
      response.label = StanceLabel::agree;
    } else {
      response.p_agree = e_agree / (e_agree + e_disagree);
      response.p_disagree = 1.0 - response.p_agree;
      response.label =
          response.p_agree >= response.p_disagree ? StanceLabel::agree : StanceLabel::disagree;
    }
    record.responses.push_back(std::move(response));
  }
  record.mapped = aggregate_stances(record.responses, config);
  return record;
}

}  // namespace

ProbeResult probe_model(Provider& provider, const StatementBank& bank, const LexiconSet& lexicon,
                        const ScoringTable& table, const ProbeConfig& config, ProbeMode mode,
                        const std::string& model_id) {
  config.validate();
  lexicon.validate();

  const auto& statements = bank.statements();
  std::vector<std::optional<ProbeRecord>> slots(statements.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= statements.size() || aborted.load()) return;
      const Statement& st = statements[index];
      try {
        slots[index] = probe_statement(provider, st, lexicon, config, mode);
      } catch (const ProviderError& e) {
        ProbeRecord failed;
        failed.statement_id = st.id;
        failed.mode = mode;
        failed.mapped = MappedAnswer::abstained(AbstainReason::provider_error);
        failed.provider_error = e.what();
        slots[index] = std::move(failed);
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        aborted.store(true);
      }
    }
  };

  const int thread_count =
      std::min<int>(config.parallelism, static_cast<int>(statements.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  if (aborted.load()) {
    std::vector<ProbeRecord> partial;
    for (auto& slot : slots) {
      if (slot) partial.push_back(std::move(*slot));
    }
    throw ProbeAbortedError(first_error, std::move(partial));
  }

  ProbeResult result;
  result.model_id = model_id;
  result.mode = mode;
  result.config = config;
  result.records.reserve(slots.size());
  for (auto& slot : slots) result.records.push_back(std::move(*slot));

  for (const auto& record : result.records) {
    if (record.mapped.level)
      result.sheet.answers.emplace(record.statement_id, *record.mapped.level);
    else
      result.sheet.unanswered.insert(record.statement_id);
  }
  result.point = score_compass(result.sheet, table);
  return result;
}

namespace {

nlohmann::json config_to_json(const ProbeConfig& c) {
  return {{"top_k", c.top_k},
          {"strong_threshold", c.strong_threshold},
          {"n_samples", c.n_samples},
          {"confidence_floor", c.confidence_floor},
          {"prompt_template_id", c.prompt_template_id},
          {"strong_stance_boundary", c.strong_stance_boundary},
          {"temperature", c.temperature},
          {"max_tokens", c.max_tokens},
          {"parallelism", c.parallelism}};
}

ProbeConfig config_from_json(const nlohmann::json& j) {
  ProbeConfig c;
  c.top_k = j.at("top_k").get<int>();
  c.strong_threshold = j.at("strong_threshold").get<double>();
  c.n_samples = j.at("n_samples").get<int>();
  c.confidence_floor = j.at("confidence_floor").get<double>();
  c.prompt_template_id = j.at("prompt_template_id").get<int>();
  c.strong_stance_boundary = j.at("strong_stance_boundary").get<double>();
  c.temperature = j.at("temperature").get<double>();
  c.max_tokens = j.at("max_tokens").get<int>();
  c.parallelism = j.at("parallelism").get<int>();
  return c;
}

nlohmann::json record_to_json(const ProbeRecord& r) {
  nlohmann::json j;
  j["statement_id"] = r.statement_id;
  j["mode"] = std::string(probe_mode_name(r.mode));
  j["prompt"] = r.prompt_used;
  j["tokens"] = nlohmann::json::array();
  for (const auto& tp : r.tokens) j["tokens"].push_back({{"prob", tp.prob}, {"token", tp.token}});
  j["responses"] = nlohmann::json::array();
  for (const auto& resp : r.responses)
    j["responses"].push_back({{"label", std::string(stance_label_name(resp.label))},
                              {"p_agree", resp.p_agree},
                              {"p_disagree", resp.p_disagree},
                              {"text", resp.text}});
  j["mapped"] = r.mapped.level ? nlohmann::json(std::string(agreement_name(*r.mapped.level)))
                               : nlohmann::json(nullptr);
  j["abstain_reason"] = r.mapped.abstain
                            ? nlohmann::json(std::string(abstain_reason_name(*r.mapped.abstain)))
                            : nlohmann::json(nullptr);
  j["diff"] = r.mapped.diff;
  j["provider_error"] =
      r.provider_error ? nlohmann::json(*r.provider_error) : nlohmann::json(nullptr);
  return j;
}

ProbeRecord record_from_json(const nlohmann::json& j) {
  ProbeRecord r;
  r.statement_id = j.at("statement_id").get<int>();
  r.mode = probe_mode_from_name(j.at("mode").get<std::string>());
  r.prompt_used = j.at("prompt").get<std::string>();
  for (const auto& tp : j.at("tokens"))
    r.tokens.push_back({tp.at("token").get<std::string>(), tp.at("prob").get<double>()});
  for (const auto& resp : j.at("responses")) {
    StanceResponse s;
    s.text = resp.at("text").get<std::string>();
    s.label = stance_label_from_name(resp.at("label").get<std::string>());
    s.p_agree = resp.at("p_agree").get<double>();
    s.p_disagree = resp.at("p_disagree").get<double>();
    r.responses.push_back(std::move(s));
  }
  if (!j.at("mapped").is_null())
    r.mapped.level = agreement_from_name(j.at("mapped").get<std::string>());
  if (!j.at("abstain_reason").is_null())
    r.mapped.abstain = abstain_reason_from_name(j.at("abstain_reason").get<std::string>());
  r.mapped.diff = j.at("diff").get<double>();
  if (!j.at("provider_error").is_null())
    r.provider_error = j.at("provider_error").get<std::string>();
  return r;
}

}  // namespace

nlohmann::json probe_result_to_json(const ProbeResult& result) {
  nlohmann::json j;
  j["format"] = "probe-result/1";
  j["model"] = result.model_id;
  j["mode"] = std::string(probe_mode_name(result.mode));
  j["config"] = config_to_json(result.config);
  j["records"] = nlohmann::json::array();
  for (const auto& record : result.records) j["records"].push_back(record_to_json(record));
  nlohmann::json answers = nlohmann::json::object();
  for (const auto& [id, level] : result.sheet.answers)
    answers[std::to_string(id)] = std::string(agreement_name(level));
  j["sheet"] = {{"answers", answers},
                {"unanswered", std::vector<int>(result.sheet.unanswered.begin(),
                                                result.sheet.unanswered.end())}};
  j["point"] = {{"social", result.point.social}, {"economic", result.point.economic}};
  return j;
}

ProbeResult probe_result_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "probe-result/1")
    throw ValidationError("BadFormat", "expected a probe-result/1 document");
  ProbeResult result;
  result.model_id = doc.at("model").get<std::string>();
  result.mode = probe_mode_from_name(doc.at("mode").get<std::string>());
  result.config = config_from_json(doc.at("config"));
  for (const auto& record : doc.at("records"))
    result.records.push_back(record_from_json(record));
  for (const auto& [key, value] : doc.at("sheet").at("answers").items())
    result.sheet.answers.emplace(std::stoi(key), agreement_from_name(value.get<std::string>()));
  for (const auto& id : doc.at("sheet").at("unanswered"))
    result.sheet.unanswered.insert(id.get<int>());
  result.point.social = doc.at("point").at("social").get<double>();
  result.point.economic = doc.at("point").at("economic").get<double>();
  return result;
}

std::string serialize_probe_result(const ProbeResult& result) {
  return probe_result_to_json(result).dump(2) + "\n";
}

ProbeResult load_probe_result(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ParseError", path.string() + ": " + e.what());
  }
  return probe_result_from_json(doc);
}

nlohmann::json probe_error_to_json(const ProbeAbortedError& error, const std::string& model_id,
                                   ProbeMode mode) {
  nlohmann::json j;
  j["format"] = "probe-error/1";
  j["model"] = model_id;
  j["mode"] = std::string(probe_mode_name(mode));
  j["error"] = error.what();
  j["records"] = nlohmann::json::array();
  for (const auto& record : error.partial_records) j["records"].push_back(record_to_json(record));
  return j;
}

}  // namespace compass
