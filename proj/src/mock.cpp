#include "compass/mock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace compass {

namespace {

constexpr std::uint64_t kEncoderFlipSalt = 0x656e632d666c6970ULL;
constexpr std::uint64_t kDecoderStanceSalt = 0x6465632d7374616eULL;
constexpr std::uint64_t kDecoderFlipSalt = 0x6465632d666c6970ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

// Uniform in [0, 1) from the top 53 bits.
double hash01(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Stratified threshold for a statement: its position among statements that
// share (axis, direction), spread evenly over (0, 1). This makes the
// per-axis mean of quantized answers track the latent value instead of
// collapsing every statement onto the same level.
double stratum_threshold(const ScoringTable& table, int statement_id) {
  const ScoringEntry& target = table.entry(statement_id);
  int rank = 0;
  int group = 0;
  for (const auto& [id, e] : table.entries()) {
    if (e.axis == target.axis && e.direction == target.direction) {
      if (id < statement_id) ++rank;
      ++group;
    }
  }
  return (rank + 0.5) / group;
}

// Quantizes a target value in [-2, 2] onto {-2, -1, 1, 2} so that the
// expected level over a uniform threshold equals the target.
int quantize_level(double target, double u) {
  if (target >= 1.0) return u < target - 1.0 ? 2 : 1;
  if (target <= -1.0) return u < -target - 1.0 ? -2 : -1;
  return u < (target + 1.0) / 2.0 ? 1 : -1;
}

double effective_agreement(int level) {
  switch (level) {
    case 2: return 1.0;
    case 1: return 0.25;
    case -1: return -0.25;
    default: return -1.0;
  }
}

double latent_axis_value(const CompassPoint& latent, Axis axis) {
  return axis == Axis::social ? latent.social : latent.economic;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// -1 disagree, +1 agree, 0 unclear. "disagree" contains "agree", so it is
// checked first.
int stance_of(const std::string& text) {
  const std::string lower = to_lower(text);
  if (lower.find("disagree") != std::string::npos) return -1;
  if (lower.find("agree") != std::string::npos) return 1;
  return 0;
}

}  // namespace

void MockRespondentConfig::validate() const {
  if (noise < 0.0 || noise > 1.0)
    throw ValidationError("BadConfig", "mock noise must be in [0, 1]");
}

static int quantized_answer_impl(const MockRespondentConfig& config, const Statement& st) {
  const ScoringEntry& entry = config.table.entry(st.id);
  const double lambda = clamp_unit(latent_axis_value(config.latent, entry.axis) /
                                   ScoringTable::kScaleCap);
  const double target = 2.0 * lambda * entry.direction;
  int level = quantize_level(target, stratum_threshold(config.table, st.id));
  if (config.noise > 0.0 &&
      hash01(mix(config.seed, kEncoderFlipSalt, static_cast<std::uint64_t>(st.id))) <
          config.noise)
    level = -level;
  return level;
}

std::vector<TokenProb> generate_mock_distribution(const MockRespondentConfig& config,
                                                  const Statement& statement) {
  config.validate();
  const double a = effective_agreement(quantized_answer_impl(config, statement));
  const double p_agree = 0.05 + 0.9 * (a + 1.0) / 2.0;
  const double p_disagree = 0.95 - p_agree;

  std::vector<TokenProb> tokens;
  if (p_agree > 0.0) tokens.push_back({"agree", p_agree});
  if (p_disagree > 0.0) tokens.push_back({"disagree", p_disagree});
  tokens.push_back({".", 0.03});
  tokens.push_back({"the", 0.02});
  std::stable_sort(tokens.begin(), tokens.end(),
                   [](const TokenProb& x, const TokenProb& y) { return x.prob > y.prob; });
  return tokens;
}

MockRespondent::MockRespondent(MockRespondentConfig config, StatementBank bank)
    : config_(std::move(config)), bank_(std::move(bank)) {
  config_.validate();
}

const Statement* MockRespondent::find_statement(const std::string& prompt) const {
  for (const auto& st : bank_.statements()) {
    if (prompt.find(st.text) != std::string::npos) return &st;
  }
  return nullptr;
}

int MockRespondent::quantized_answer(int statement_id) const {
  return quantized_answer_impl(config_, bank_.by_id(statement_id));
}

std::vector<TokenProb> MockRespondent::fill_mask(const std::string& prompt, int top_k) {
  if (top_k < 1) throw ValidationError("BadConfig", "top_k must be >= 1");
  const Statement* st = find_statement(prompt);
  std::vector<TokenProb> tokens;
  if (st == nullptr) {
    // Unknown statement: lexicon-free filler so the probe abstains.
    tokens = {{"the", 0.4}, {".", 0.3}, {"a", 0.2}};
  } else {
    tokens = generate_mock_distribution(config_, *st);
  }
  if (static_cast<int>(tokens.size()) > top_k) tokens.resize(static_cast<std::size_t>(top_k));
  return tokens;
}

std::string MockRespondent::complete(const std::string& prompt, int seed, int max_tokens,
                                     double temperature) {
  (void)temperature;  // the mock is deterministic by construction
  if (max_tokens < 1) throw ValidationError("BadConfig", "max_tokens must be >= 1");
  const Statement* st = find_statement(prompt);
  std::string text;
  if (st == nullptr) {
    text = "I am not sure how to respond to that.";
  } else {
    const ScoringEntry& entry = config_.table.entry(st->id);
    const double lambda = clamp_unit(latent_axis_value(config_.latent, entry.axis) /
                                     ScoringTable::kScaleCap);
    const double p_agree = (lambda * entry.direction + 1.0) / 2.0;
    // Stance backbone is template-independent; only the noise flip is keyed
    // by the full prompt, so prompt variants diverge exactly when noise > 0.
    bool agree = hash01(mix(config_.seed, kDecoderStanceSalt ^ static_cast<std::uint64_t>(st->id),
                            static_cast<std::uint64_t>(seed))) < p_agree;
    if (config_.noise > 0.0 &&
        hash01(mix(config_.seed ^ kDecoderFlipSalt, fnv1a(prompt),
                   static_cast<std::uint64_t>(seed))) < config_.noise)
      agree = !agree;
    text = agree ? "I agree with this statement. It matches my view of the issue."
                 : "I disagree with this statement. It does not match my view of the issue.";
  }

  // Truncate to max_tokens whitespace-delimited words.
  std::istringstream words(text);
  std::string word;
  std::string out;
  int count = 0;
  while (count < max_tokens && words >> word) {
    if (count > 0) out += ' ';
    out += word;
    ++count;
  }
  return out;
}

NliScores MockRespondent::nli(const std::string& premise, const std::string& hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw ValidationError("BadPrompt", "premise and hypothesis must be non-empty");
  const int premise_stance = stance_of(premise);
  const int hypothesis_stance = stance_of(hypothesis);
  if (premise_stance == 0 || hypothesis_stance == 0) return {0.40, 0.35, 0.25};
  if (premise_stance == hypothesis_stance) return {0.95, 0.03, 0.02};
  return {0.03, 0.02, 0.95};
}

struct MockServerImpl {
  httplib::Server server;
};

MockServer::MockServer(MockRespondentConfig config, StatementBank bank)
    : respondent_(std::move(config), std::move(bank)), impl_(std::make_unique<MockServerImpl>()) {
  auto& svr = impl_->server;

  auto fail = [](httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
  };

  svr.Post("/v1/fill-mask", [this, fail](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("prompt") || !body.contains("top_k"))
      return fail(res, 400, "expected {\"prompt\", \"top_k\"}");
    try {
      auto tokens =
          respondent_.fill_mask(body["prompt"].get<std::string>(), body["top_k"].get<int>());
      nlohmann::json out;
      out["tokens"] = nlohmann::json::array();
      for (const auto& tp : tokens)
        out["tokens"].push_back({{"prob", tp.prob}, {"token", tp.token}});
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      fail(res, 400, e.what());
    }
  });

  svr.Post("/v1/completions", [this, fail](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("prompt") || !body.contains("max_tokens") ||
        !body.contains("seed"))
      return fail(res, 400, "expected {\"prompt\", \"max_tokens\", \"temperature\", \"seed\"}");
    try {
      const std::string text =
          respondent_.complete(body["prompt"].get<std::string>(), body["seed"].get<int>(),
                               body["max_tokens"].get<int>(), body.value("temperature", 0.0));
      nlohmann::json out;
      out["choices"] = nlohmann::json::array({{{"text", text}}});
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      fail(res, 400, e.what());
    }
  });

  svr.Post("/v1/nli", [this, fail](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("premise") || !body.contains("hypothesis"))
      return fail(res, 400, "expected {\"premise\", \"hypothesis\"}");
    try {
      const NliScores scores = respondent_.nli(body["premise"].get<std::string>(),
                                               body["hypothesis"].get<std::string>());
      nlohmann::json out;
      out["labels"] = {{"contradiction", scores.contradiction},
                       {"entailment", scores.entailment},
                       {"neutral", scores.neutral}};
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      fail(res, 400, e.what());
    }
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = svr.bind_to_any_port(host);
    if (bound <= 0) throw ProviderError("BindError", "cannot bind to " + host);
  } else {
    if (!svr.bind_to_port(host, port))
      throw ProviderError("BindError", "cannot bind to " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
  return bound;
}

void MockServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace compass
