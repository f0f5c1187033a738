#include "compass/providers.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace compass {

namespace {

constexpr double kProbEps = 1e-6;

bool is_absolute_url(const std::string& url) {
  return url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0;
}

}  // namespace

ProviderEndpoint ProviderEndpoint::from_env(std::string base_url) {
  ProviderEndpoint ep;
  ep.base_url = std::move(base_url);
  if (const char* token = std::getenv("COMPASS_AUDIT_TOKEN")) {
    if (*token != '\0') ep.auth_token = token;
  }
  return ep;
}

void ProviderEndpoint::validate() const {
  if (!is_absolute_url(base_url))
    throw ValidationError("BadEndpoint", "base_url must be absolute: '" + base_url + "'");
  if (timeout_ms <= 0) throw ValidationError("BadEndpoint", "timeout_ms must be > 0");
  if (max_retries < 0) throw ValidationError("BadEndpoint", "max_retries must be >= 0");
}

HttpProvider::HttpProvider(ProviderEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
  host_ = endpoint_.base_url;
  while (!host_.empty() && host_.back() == '/') host_.pop_back();
}

std::string HttpProvider::post_json(const std::string& path, const std::string& body) {
  int attempt = 0;
  for (;;) {
    // One client per request keeps the provider shareable across probe
    // workers; httplib clients are not safe for concurrent use.
    httplib::Client client(host_);
    client.set_connection_timeout(0, endpoint_.timeout_ms * 1000LL);
    client.set_read_timeout(0, endpoint_.timeout_ms * 1000LL);
    client.set_write_timeout(0, endpoint_.timeout_ms * 1000LL);
    httplib::Headers headers;
    if (endpoint_.auth_token) headers.emplace("Authorization", "Bearer " + *endpoint_.auth_token);

    auto res = client.Post(path, headers, body, "application/json");
    const bool transport_failure = !res;
    const bool server_failure = res && res->status >= 500;
    if (!transport_failure && !server_failure) {
      if (res->status != 200)
        throw ProviderError("HttpError",
                            "POST " + path + " returned status " + std::to_string(res->status));
      last_retries_.store(attempt);
      return res->body;
    }
    if (attempt >= endpoint_.max_retries) {
      if (transport_failure)
        throw ProviderError("Timeout", "POST " + path + " failed after " +
                                           std::to_string(attempt) + " retries: " +
                                           httplib::to_string(res.error()));
      throw ProviderError("HttpError", "POST " + path + " returned status " +
                                           std::to_string(res->status) + " after " +
                                           std::to_string(attempt) + " retries");
    }
    std::this_thread::sleep_for(
        std::chrono::milliseconds(endpoint_.retry_base_ms * (1LL << attempt)));
    ++attempt;
  }
}

std::vector<TokenProb> HttpProvider::fill_mask(const std::string& prompt, int top_k) {
  if (top_k < 1) throw ValidationError("BadConfig", "top_k must be >= 1");
  const auto mask_pos = prompt.find("<MASK>");
  if (mask_pos == std::string::npos || prompt.find("<MASK>", mask_pos + 1) != std::string::npos)
    throw ValidationError("BadPrompt", "prompt must contain exactly one <MASK>");

  nlohmann::json body = {{"prompt", prompt}, {"top_k", top_k}};
  const std::string raw = post_json("/v1/fill-mask", body.dump());

  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("tokens") ||
      !doc["tokens"].is_array())
    throw ProviderError("MalformedBody", "fill-mask response lacks a 'tokens' array");

  std::vector<TokenProb> tokens;
  double sum = 0.0;
  double prev = 1.0 + kProbEps;
  for (const auto& item : doc["tokens"]) {
    if (!item.is_object() || !item.contains("token") || !item.contains("prob") ||
        !item["prob"].is_number())
      throw ProviderError("MalformedBody", "fill-mask token entry malformed");
    TokenProb tp{item["token"].get<std::string>(), item["prob"].get<double>()};
    if (!(tp.prob > 0.0) || tp.prob > 1.0)
      throw ProviderError("MalformedBody",
                          "token probability " + std::to_string(tp.prob) + " outside (0, 1]");
    if (tp.prob > prev + kProbEps)
      throw ProviderError("MalformedBody", "token probabilities not descending");
    prev = tp.prob;
    sum += tp.prob;
    tokens.push_back(std::move(tp));
  }
  if (static_cast<int>(tokens.size()) > top_k)
    throw ProviderError("MalformedBody", "more tokens than requested top_k");
  if (sum > 1.0 + kProbEps)
    throw ProviderError("MalformedBody", "token probabilities sum to " + std::to_string(sum));
  return tokens;
}

std::string HttpProvider::complete(const std::string& prompt, int seed, int max_tokens,
                                   double temperature) {
  if (max_tokens < 1) throw ValidationError("BadConfig", "max_tokens must be >= 1");
  nlohmann::json body = {{"prompt", prompt},
                         {"max_tokens", max_tokens},
                         {"temperature", temperature},
                         {"seed", seed}};
  const std::string raw = post_json("/v1/completions", body.dump());

  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty() ||
      !doc["choices"][0].contains("text"))
    throw ProviderError("MalformedBody", "completions response lacks choices[0].text");
  std::string text = doc["choices"][0]["text"].get<std::string>();
  if (text.empty()) throw ProviderError("EmptyCompletion", "completion text is empty");
  return text;
}

NliScores HttpProvider::nli(const std::string& premise, const std::string& hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw ValidationError("BadPrompt", "premise and hypothesis must be non-empty");
  nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
  const std::string raw = post_json("/v1/nli", body.dump());

  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("labels") ||
      !doc["labels"].is_object())
    throw ProviderError("MalformedBody", "nli response lacks a 'labels' object");
  const auto& labels = doc["labels"];
  for (const char* key : {"entailment", "neutral", "contradiction"}) {
    if (!labels.contains(key) || !labels[key].is_number())
      throw ProviderError("MalformedBody", std::string("nli labels missing '") + key + "'");
  }
  NliScores scores{labels["entailment"].get<double>(), labels["neutral"].get<double>(),
                   labels["contradiction"].get<double>()};
  for (double p : {scores.entailment, scores.neutral, scores.contradiction}) {
    if (p < 0.0 || p > 1.0)
      throw ProviderError("MalformedBody", "nli probability outside [0, 1]");
  }
  const double sum = scores.entailment + scores.neutral + scores.contradiction;
  if (sum < 1.0 - kProbEps || sum > 1.0 + kProbEps)
    throw ProviderError("MalformedBody", "nli probabilities sum to " + std::to_string(sum));
  return scores;
}

}  // namespace compass
