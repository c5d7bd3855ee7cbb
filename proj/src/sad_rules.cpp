#include "sadgraph/error.hpp"
#include "sadgraph/ingest.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sadgraph {

namespace {

constexpr std::string_view kDefaultTable =
#include "sad_rules_table.inc"
    ;

constexpr std::array<std::string_view, kSadGroupCount> kGroupNames = {
    "Renal Injury",          "Electrolyte Imbalance", "Oxygen Carrying Dysfunction", "Shock",
    "Diminished Cardiac Output", "Coagulopathy",      "Cholestasis",                 "Hepatocellular Injury",
    "Oxygenation Dysfunction", "Inflammation"};

}  // namespace

std::string_view to_string(SadGroup group) { return kGroupNames[static_cast<std::size_t>(group)]; }

std::optional<SadGroup> parse_sad_group(std::string_view name) {
  name = detail::trim(name);
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == name) return static_cast<SadGroup>(i);
  return std::nullopt;
}

std::array<SadGroup, kSadGroupCount> all_sad_groups() {
  std::array<SadGroup, kSadGroupCount> out{};
  for (std::size_t i = 0; i < kSadGroupCount; ++i) out[i] = static_cast<SadGroup>(i);
  return out;
}

bool AbnormalityPredicate::operator()(double value) const {
  return std::any_of(any_of.begin(), any_of.end(), [value](const Comparison& c) {
    return c.less_than ? value < c.threshold : value > c.threshold;
  });
}

AbnormalityPredicate AbnormalityPredicate::parse(std::string_view text) {
  AbnormalityPredicate out;
  std::string s(detail::trim(text));
  // split on the word "or"
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(" or ", start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 4;
  }
  for (auto& part : parts) {
    std::string p;
    for (char ch : part)
      if (ch != ' ' && ch != ',' && ch != '%') p.push_back(ch);
    if (p.size() < 2 || (p[0] != '<' && p[0] != '>'))
      throw ConfigError("bad abnormality rule '" + std::string(text) + "'");
    const auto v = detail::parse_double(std::string_view(p).substr(1));
    if (!v) throw ConfigError("bad threshold in rule '" + std::string(text) + "'");
    out.any_of.push_back({p[0] == '<', *v});
  }
  return out;
}

std::string AbnormalityPredicate::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < any_of.size(); ++i) {
    if (i) out += " or ";
    out += any_of[i].less_than ? '<' : '>';
    out += detail::format_double(any_of[i].threshold);
  }
  return out;
}

std::vector<SadRule> parse_sad_rules(std::istream& in) {
  std::vector<SadRule> rules;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string stripped = detail::strip_cr(line);
    const auto trimmed = detail::trim(stripped);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = detail::split(trimmed, '|');
    if (fields.size() != 4) throw ParseError("SAD rule table line " + std::to_string(row) + ": expected 4 fields", row);
    if (detail::trim(fields[0]) == "SAD name") continue;
    const auto group = parse_sad_group(fields[0]);
    if (!group) throw ConfigError("SAD rule table line " + std::to_string(row) + ": unknown SAD group '" +
                                  std::string(detail::trim(fields[0])) + "'");
    const auto risk = detail::parse_double(fields[3]);
    if (!risk) throw ParseError("SAD rule table line " + std::to_string(row) + ": bad risk score", row);
    rules.push_back({*group, std::string(detail::trim(fields[1])), AbnormalityPredicate::parse(fields[2]), *risk});
  }
  validate_sad_rules(rules);
  return rules;
}

std::vector<SadRule> load_sad_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open SAD rule table '" + path + "'");
  return parse_sad_rules(in);
}

void validate_sad_rules(std::span<const SadRule> rules) {
  const auto known = physionet_columns();
  std::map<std::string, SadGroup> membership;
  std::array<double, kSadGroupCount> totals{};
  std::array<int, kSadGroupCount> counts{};
  for (const auto& r : rules) {
    if (std::find(known.begin(), known.end(), r.measurement) == known.end())
      throw ConfigError("SAD rule references unknown measurement '" + r.measurement + "'");
    if (!membership.emplace(r.measurement, r.group).second)
      throw ConfigError("measurement '" + r.measurement + "' appears in more than one SAD rule");
    if (!(r.risk_score >= 0.0 && r.risk_score <= 1.0))
      throw ConfigError("risk score for '" + r.measurement + "' outside [0,1]");
    totals[static_cast<std::size_t>(r.group)] += r.risk_score;
    ++counts[static_cast<std::size_t>(r.group)];
  }
  for (std::size_t g = 0; g < kSadGroupCount; ++g) {
    if (counts[g] > 0 && std::abs(totals[g] - 1.0) > 0.01)
      throw ConfigError("risk scores of SAD group '" + std::string(kGroupNames[g]) + "' sum to " +
                        std::to_string(totals[g]));
  }
}

std::string_view default_sad_rules_text() { return kDefaultTable; }

const std::vector<SadRule>& default_sad_rules() {
  static const std::vector<SadRule> rules = [] {
    std::istringstream in{std::string(kDefaultTable)};
    return parse_sad_rules(in);
  }();
  return rules;
}

}  // namespace sadgraph
