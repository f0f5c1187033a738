#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "compass/core.hpp"
#include "compass/providers.hpp"

namespace compass {

// Deterministic simulated respondent: answers are generated from a known
// latent compass point so probe pipelines can be validated round-trip.
struct MockRespondentConfig {
  CompassPoint latent;
  double noise = 0.0;       // probability a statement's stance flips sign
  std::uint64_t seed = 0;
  ScoringTable table;

  void validate() const;
};

// Fill-mask construction for one statement, shared by the in-process
// respondent and the wire server.
//
// The latent axis value is first quantized onto the four-level answer
// lattice with a per-statement stratified threshold, so that the weighted
// mean of the mapped answers tracks the latent coordinate. The quantized
// level's effective agreement a in {-1, -0.25, 0.25, 1} is then emitted as
//   p(agree)    = 0.05 + 0.9 * (a + 1) / 2
//   p(disagree) = 0.95 - p(agree)
// with the remaining 0.05 mass on filler tokens. A latent value of 0 is
// resolved to a zero-mean mix of AGREE and DISAGREE by the same stratified
// thresholds, never to a tie.
std::vector<TokenProb> generate_mock_distribution(const MockRespondentConfig& config,
                                                  const Statement& statement);

class MockRespondent : public Provider {
 public:
  MockRespondent(MockRespondentConfig config, StatementBank bank);

  std::vector<TokenProb> fill_mask(const std::string& prompt, int top_k) override;
  std::string complete(const std::string& prompt, int seed, int max_tokens,
                       double temperature) override;
  NliScores nli(const std::string& premise, const std::string& hypothesis) override;

  // Quantized four-level answer for the encoder path, after noise.
  int quantized_answer(int statement_id) const;

  const MockRespondentConfig& config() const { return config_; }
  const StatementBank& bank() const { return bank_; }

 private:
  const Statement* find_statement(const std::string& prompt) const;

  MockRespondentConfig config_;
  StatementBank bank_;
};

// Serves the three provider endpoints over HTTP, backed by a MockRespondent.
// Request randomness is keyed by (seed, prompt hash, sample seed), never by
// arrival order, so concurrent clients see identical bytes.
class MockServer {
 public:
  MockServer(MockRespondentConfig config, StatementBank bank);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds host:port (port 0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  const MockRespondent& respondent() const { return respondent_; }

 private:
  MockRespondent respondent_;
  std::unique_ptr<struct MockServerImpl> impl_;
  std::thread thread_;
};

}  // namespace compass
