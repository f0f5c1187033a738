#include "compass/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace compass {

namespace detail {
extern const unsigned char kDefaultBankData[];
extern const std::size_t kDefaultBankSize;
}  // namespace detail

std::string_view axis_name(Axis axis) {
  return axis == Axis::economic ? "ECONOMIC" : "SOCIAL";
}

Axis axis_from_name(std::string_view name) {
  if (name == "ECONOMIC") return Axis::economic;
  if (name == "SOCIAL") return Axis::social;
  throw ValidationError("BadAxisTag", "unknown axis '" + std::string(name) + "'");
}

int agreement_value(AgreementLevel level) {
  switch (level) {
    case AgreementLevel::strong_disagree: return -2;
    case AgreementLevel::disagree: return -1;
    case AgreementLevel::agree: return 1;
    case AgreementLevel::strong_agree: return 2;
  }
  return 0;  // unreachable
}

AgreementLevel flip(AgreementLevel level) {
  switch (level) {
    case AgreementLevel::strong_disagree: return AgreementLevel::strong_agree;
    case AgreementLevel::disagree: return AgreementLevel::agree;
    case AgreementLevel::agree: return AgreementLevel::disagree;
    case AgreementLevel::strong_agree: return AgreementLevel::strong_disagree;
  }
  return level;  // unreachable
}

std::string_view agreement_name(AgreementLevel level) {
  switch (level) {
    case AgreementLevel::strong_disagree: return "STRONG_DISAGREE";
    case AgreementLevel::disagree: return "DISAGREE";
    case AgreementLevel::agree: return "AGREE";
    case AgreementLevel::strong_agree: return "STRONG_AGREE";
  }
  return "";  // unreachable
}

AgreementLevel agreement_from_name(std::string_view name) {
  if (name == "STRONG_DISAGREE") return AgreementLevel::strong_disagree;
  if (name == "DISAGREE") return AgreementLevel::disagree;
  if (name == "AGREE") return AgreementLevel::agree;
  if (name == "STRONG_AGREE") return AgreementLevel::strong_agree;
  throw ValidationError("BadAgreementLevel",
                        "unknown agreement level '" + std::string(name) + "'");
}

namespace {

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Shared by bank and scoring-table loading; text is optional for overrides.
struct ParsedRecord {
  int id;
  std::string text;
  Axis axis;
  int direction;
  double weight;
  int page;
};

ParsedRecord parse_record(const nlohmann::json& obj, bool require_text) {
  if (!obj.is_object()) throw ValidationError("ParseError", "record is not an object");
  if (!obj.contains("id") || !obj["id"].is_number_integer())
    throw ValidationError("ParseError", "record lacks an integer 'id'");
  ParsedRecord rec{};
  rec.id = obj["id"].get<int>();
  const std::string where = "statement " + std::to_string(rec.id);
  if (rec.id < 1 || rec.id > kStatementCount)
    throw ValidationError("BadId", where + ": id outside 1.." + std::to_string(kStatementCount));
  if (obj.contains("text")) {
    rec.text = trimmed(obj["text"].get<std::string>());
    if (rec.text.empty()) throw ValidationError("EmptyText", where + ": text empty after trimming");
  } else if (require_text) {
    throw ValidationError("ParseError", where + ": missing 'text'");
  }
  if (!obj.contains("axis") || !obj["axis"].is_string())
    throw ValidationError("BadAxisTag", where + ": missing or non-string 'axis'");
  try {
    rec.axis = axis_from_name(obj["axis"].get<std::string>());
  } catch (const ValidationError&) {
    throw ValidationError("BadAxisTag", where + ": unknown axis '" +
                                            obj["axis"].get<std::string>() + "'");
  }
  rec.direction = obj.value("direction", 1);
  if (rec.direction != 1 && rec.direction != -1)
    throw ValidationError("BadDirection", where + ": direction must be -1 or 1");
  rec.weight = obj.value("weight", 1.0);
  if (!(rec.weight > 0.0))
    throw ValidationError("NonPositiveWeight", where + ": weight must be > 0");
  rec.page = obj.value("page", 1);
  if (rec.page < 1 || rec.page > 6)
    throw ValidationError("BadPage", where + ": page outside 1..6");
  return rec;
}

template <typename Record>
void check_complete_coverage(const std::map<int, Record>& by_id) {
  for (int id = 1; id <= kStatementCount; ++id) {
    if (by_id.count(id) == 0)
      throw ValidationError("MissingId", "statement " + std::to_string(id) + " is missing");
  }
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("FileError", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ParseError", path.string() + ": " + e.what());
  }
  return doc;
}

}  // namespace

StatementBank StatementBank::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ValidationError("ParseError", "bank must be a JSON array");
  std::map<int, Statement> by_id;
  for (const auto& obj : doc) {
    ParsedRecord rec = parse_record(obj, /*require_text=*/true);
    Statement st{rec.id, rec.text, rec.axis, rec.direction, rec.weight, rec.page};
    if (!by_id.emplace(st.id, std::move(st)).second)
      throw ValidationError("DuplicateId", "statement " + std::to_string(rec.id) + " appears twice");
  }
  check_complete_coverage(by_id);
  StatementBank bank;
  bank.statements_.reserve(by_id.size());
  for (auto& [id, st] : by_id) bank.statements_.push_back(std::move(st));
  return bank;
}

const Statement& StatementBank::by_id(int id) const {
  if (id < 1 || id > static_cast<int>(statements_.size()))
    throw ValidationError("BadId", "no statement " + std::to_string(id));
  return statements_[static_cast<std::size_t>(id - 1)];
}

StatementBank load_statement_bank(const std::filesystem::path& path) {
  return StatementBank::from_json(parse_json_file(path));
}

const StatementBank& default_statement_bank() {
  static const StatementBank bank = StatementBank::from_json(nlohmann::json::parse(
      detail::kDefaultBankData, detail::kDefaultBankData + detail::kDefaultBankSize));
  return bank;
}

ScoringTable ScoringTable::from_bank(const StatementBank& bank) {
  std::map<int, ScoringEntry> entries;
  for (const auto& st : bank.statements())
    entries.emplace(st.id, ScoringEntry{st.axis, st.direction, st.weight});
  return from_entries(entries);
}

ScoringTable ScoringTable::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ValidationError("ParseError", "scoring table must be a JSON array");
  std::map<int, ScoringEntry> entries;
  for (const auto& obj : doc) {
    ParsedRecord rec = parse_record(obj, /*require_text=*/false);
    if (!entries.emplace(rec.id, ScoringEntry{rec.axis, rec.direction, rec.weight}).second)
      throw ValidationError("DuplicateId", "statement " + std::to_string(rec.id) + " appears twice");
  }
  check_complete_coverage(entries);
  return from_entries(entries);
}

ScoringTable ScoringTable::from_entries(const std::map<int, ScoringEntry>& entries) {
  bool has_eco = false;
  bool has_soc = false;
  for (const auto& [id, e] : entries) {
    if (e.direction != 1 && e.direction != -1)
      throw ValidationError("BadDirection", "statement " + std::to_string(id));
    if (!(e.weight > 0.0))
      throw ValidationError("NonPositiveWeight", "statement " + std::to_string(id));
    (e.axis == Axis::economic ? has_eco : has_soc) = true;
  }
  if (entries.empty() || !has_eco || !has_soc)
    throw ValidationError("EmptyAxis", "each axis needs at least one scored statement");
  ScoringTable table;
  table.entries_ = entries;
  return table;
}

const ScoringEntry& ScoringTable::entry(int id) const {
  auto it = entries_.find(id);
  if (it == entries_.end())
    throw ValidationError("BadId", "no scoring entry for statement " + std::to_string(id));
  return it->second;
}

ScoringTable load_scoring_table(const std::filesystem::path& path) {
  return ScoringTable::from_json(parse_json_file(path));
}

bool operator==(const CompassPoint& a, const CompassPoint& b) {
  return a.social == b.social && a.economic == b.economic;
}

AnswerSheet flip(const AnswerSheet& sheet) {
  AnswerSheet out;
  out.unanswered = sheet.unanswered;
  for (const auto& [id, level] : sheet.answers) out.answers.emplace(id, flip(level));
  return out;
}

CompassPoint score_compass(const AnswerSheet& sheet, const ScoringTable& table) {
  for (const auto& [id, level] : sheet.answers) {
    (void)level;
    if (!table.contains(id))
      throw ValidationError("InvalidSheet", "answer for unknown statement " + std::to_string(id));
    if (sheet.unanswered.count(id))
      throw ValidationError("InvalidSheet",
                            "statement " + std::to_string(id) + " both answered and unanswered");
  }
  for (int id : sheet.unanswered) {
    if (!table.contains(id))
      throw ValidationError("InvalidSheet", "unknown unanswered statement " + std::to_string(id));
  }
  if (sheet.answers.size() + sheet.unanswered.size() != table.entries().size())
    throw ValidationError("InvalidSheet", "sheet does not cover the scoring table exactly");

  double num[2] = {0.0, 0.0};
  double weight_sum[2] = {0.0, 0.0};
  for (const auto& [id, level] : sheet.answers) {
    const ScoringEntry& e = table.entry(id);
    const int idx = e.axis == Axis::social ? 0 : 1;
    num[idx] += e.direction * e.weight * agreement_value(level);
    weight_sum[idx] += e.weight;
  }
  for (int idx = 0; idx < 2; ++idx) {
    if (weight_sum[idx] == 0.0)
      throw ValidationError("AxisUnanswerable",
                            std::string(axis_name(idx == 0 ? Axis::social : Axis::economic)) +
                                " axis has no answered statements");
  }
  CompassPoint point;
  point.social = ScoringTable::kScaleCap * num[0] / (2.0 * weight_sum[0]);
  point.economic = ScoringTable::kScaleCap * num[1] / (2.0 * weight_sum[1]);
  return point;
}

}  // namespace compass
