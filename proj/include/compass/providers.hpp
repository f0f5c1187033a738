#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "compass/errors.hpp"

namespace compass {

struct TokenProb {
  std::string token;
  double prob = 0.0;
};

struct NliScores {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;
};

// The three wire contracts every audited model is reached through.
// Implementations must be safe to call from concurrent probe workers.
class Provider {
 public:
  virtual ~Provider() = default;

  // Token distribution for the single mask placeholder in `prompt`.
  // At most top_k pairs, probabilities descending, each in (0, 1].
  virtual std::vector<TokenProb> fill_mask(const std::string& prompt, int top_k) = 0;

  // Seeded completion; the same seed must reproduce the same text.
  virtual std::string complete(const std::string& prompt, int seed, int max_tokens,
                               double temperature) = 0;

  // Entailment probabilities for (premise, hypothesis), summing to 1.
  virtual NliScores nli(const std::string& premise, const std::string& hypothesis) = 0;
};

struct ProviderEndpoint {
  std::string base_url;
  std::optional<std::string> auth_token;
  int timeout_ms = 30000;
  int max_retries = 2;
  int retry_base_ms = 250;  // exponential backoff base, 5xx/timeout only

  // Reads COMPASS_AUDIT_TOKEN for the bearer token when present.
  static ProviderEndpoint from_env(std::string base_url);

  void validate() const;
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderEndpoint endpoint);

  std::vector<TokenProb> fill_mask(const std::string& prompt, int top_k) override;
  std::string complete(const std::string& prompt, int seed, int max_tokens,
                       double temperature) override;
  NliScores nli(const std::string& premise, const std::string& hypothesis) override;

  // Retries spent by the most recent completed call (informational).
  int last_retry_count() const { return last_retries_.load(); }

  const ProviderEndpoint& endpoint() const { return endpoint_; }

 private:
  std::string post_json(const std::string& path, const std::string& body);

  ProviderEndpoint endpoint_;
  std::string host_;
  std::atomic<int> last_retries_{0};
};

}  // namespace compass
