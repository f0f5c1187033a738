#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compass/errors.hpp"

namespace compass {

inline constexpr int kStatementCount = 62;

enum class Axis { economic, social };

std::string_view axis_name(Axis axis);
Axis axis_from_name(std::string_view name);  // throws BadAxisTag

// Four-level agreement scale. There is deliberately no neutral midpoint.
enum class AgreementLevel { strong_disagree, disagree, agree, strong_agree };

// Signed numeric surrogate: SD -> -2, D -> -1, A -> +1, SA -> +2.
int agreement_value(AgreementLevel level);

// SA <-> SD and A <-> D, so agreement_value(flip(x)) == -agreement_value(x).
AgreementLevel flip(AgreementLevel level);

std::string_view agreement_name(AgreementLevel level);
AgreementLevel agreement_from_name(std::string_view name);

struct Statement {
  int id = 0;                 // 1..62
  std::string text;
  Axis axis = Axis::social;
  int direction = 1;          // +1: agreement pushes the axis score positive
  double weight = 1.0;        // > 0
  int page = 1;               // questionnaire section 1..6
};

// A loaded bank always holds exactly the statements 1..62, ordered by id.
class StatementBank {
 public:
  static StatementBank from_json(const nlohmann::json& doc);

  const std::vector<Statement>& statements() const { return statements_; }
  const Statement& by_id(int id) const;
  std::size_t size() const { return statements_.size(); }

 private:
  std::vector<Statement> statements_;
};

// Reads a bank file (UTF-8 JSON array, see README for the schema).
StatementBank load_statement_bank(const std::filesystem::path& path);

// The bank compiled into the library; identical to data/statement_bank.json.
const StatementBank& default_statement_bank();

struct ScoringEntry {
  Axis axis = Axis::social;
  int direction = 1;
  double weight = 1.0;
};

// Maps statement ids to (axis, direction, weight). Tables derived from a
// bank or an override file cover ids 1..62 exactly; ad-hoc tables built from
// entries only need every axis to be non-empty.
class ScoringTable {
 public:
  static constexpr double kScaleCap = 10.0;

  static ScoringTable from_bank(const StatementBank& bank);
  // Override files use the bank schema with "text" optional.
  static ScoringTable from_json(const nlohmann::json& doc);
  static ScoringTable from_entries(const std::map<int, ScoringEntry>& entries);

  const std::map<int, ScoringEntry>& entries() const { return entries_; }
  const ScoringEntry& entry(int id) const;
  bool contains(int id) const { return entries_.count(id) != 0; }

 private:
  std::map<int, ScoringEntry> entries_;
};

ScoringTable load_scoring_table(const std::filesystem::path& path);

// (social, economic) in [-10, 10]^2. Negative social = libertarian,
// negative economic = left.
struct CompassPoint {
  double social = 0.0;
  double economic = 0.0;
};

bool operator==(const CompassPoint& a, const CompassPoint& b);

// answers and unanswered partition the scoring table's id set exactly.
struct AnswerSheet {
  std::map<int, AgreementLevel> answers;
  std::set<int> unanswered;
};

AnswerSheet flip(const AnswerSheet& sheet);

// Weighted summation per axis:
//   s_A = 10 * sum(d_i * w_i * v_i) / (2 * sum(w_i))
// over answered statements of axis A; unanswered statements drop out of both
// sums. Throws AxisUnanswerable when an axis has no answered statement and
// InvalidSheet when the sheet does not partition the table's ids.
CompassPoint score_compass(const AnswerSheet& sheet, const ScoringTable& table);

}  // namespace compass
