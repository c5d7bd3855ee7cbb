#include "sadgraph/ingest.hpp"

#include "sadgraph/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sadgraph {

namespace {

const std::vector<std::string> kPhysionetColumns = {
    "HR",        "O2Sat",     "Temp",      "SBP",        "MAP",          "DBP",
    "Resp",      "EtCO2",     "BaseExcess", "HCO3",      "FiO2",         "pH",
    "PaCO2",     "SaO2",      "AST",       "BUN",        "Alkalinephos", "Calcium",
    "Chloride",  "Creatinine", "Bilirubin_direct", "Glucose", "Lactate",  "Magnesium",
    "Phosphate", "Potassium", "Bilirubin_total", "TroponinI", "Hct",       "Hgb",
    "PTT",       "WBC",       "Fibrinogen", "Platelets", "Age",          "Gender",
    "Unit1",     "Unit2",     "HospAdmTime", "ICULOS",   "SepsisLabel"};

const std::vector<std::string> kLabColumns = {
    "BaseExcess", "HCO3",      "FiO2",      "pH",        "PaCO2",           "SaO2",
    "AST",        "BUN",       "Alkalinephos", "Calcium", "Chloride",       "Creatinine",
    "Bilirubin_direct", "Glucose", "Lactate", "Magnesium", "Phosphate",     "Potassium",
    "Bilirubin_total", "TroponinI", "Hct",    "Hgb",       "PTT",             "WBC",
    "Fibrinogen", "Platelets"};

bool is_missing_token(std::string_view token) {
  return token.empty() || token == "NaN" || token == "nan" || token == "NA" || token == "NULL";
}

}  // namespace

std::span<const std::string> physionet_columns() { return kPhysionetColumns; }
std::span<const std::string> physionet_lab_columns() { return kLabColumns; }

std::optional<std::size_t> RawRecord::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

const Cell* RawRecord::cell(std::size_t row, std::string_view column) const {
  const auto idx = column_index(column);
  if (!idx || row >= rows.size()) return nullptr;
  return &rows[row][*idx];
}

std::optional<double> RawRecord::value(std::size_t row, std::string_view column) const {
  const Cell* c = cell(row, column);
  if (c == nullptr) return std::nullopt;
  return c->value;
}

double RawRecord::hours(std::size_t row) const {
  if (auto v = value(row, "ICULOS")) return *v;
  return static_cast<double>(row + 1);
}

RawRecord parse_psv(std::istream& in, std::string patient_id, std::span<const std::string> known_columns) {
  RawRecord record;
  record.patient_id = std::move(patient_id);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input: missing header row", 0);
  const auto header = detail::split(detail::strip_cr(line), '|');

  // position in file -> position in record.columns (or npos when ignored)
  std::vector<std::size_t> mapping(header.size(), std::string::npos);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = detail::trim(header[i]);
    if (std::find(known_columns.begin(), known_columns.end(), name) == known_columns.end()) continue;
    if (std::find(record.columns.begin(), record.columns.end(), name) != record.columns.end())
      throw ParseError("duplicate column '" + std::string(name) + "'", 0);
    mapping[i] = record.columns.size();
    record.columns.emplace_back(name);
  }

  const auto iculos = record.column_index("ICULOS");
  std::size_t row_number = 0;
  double previous_hours = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++row_number;
    line = detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, '|');
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_number) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       row_number);
    }
    std::vector<Cell> row(record.columns.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (mapping[i] == std::string::npos) continue;
      const auto token = detail::trim(fields[i]);
      if (is_missing_token(token)) continue;
      const auto parsed = detail::parse_double(token);
      if (!parsed) {
        throw ParseError("row " + std::to_string(row_number) + ": non-numeric value '" + std::string(token) +
                             "' in column '" + record.columns[mapping[i]] + "'",
                         row_number);
      }
      row[mapping[i]].value = *parsed;
    }
    const double hours = (iculos && row[*iculos].value) ? *row[*iculos].value
                                                        : static_cast<double>(record.rows.size() + 1);
    if (!(hours > previous_hours)) {
      throw ParseError("row " + std::to_string(row_number) + ": ICULOS not strictly increasing", row_number);
    }
    previous_hours = hours;
    for (auto& c : row) c.observed_at = hours;
    record.rows.push_back(std::move(row));
  }
  return record;
}

RawRecord parse_psv_file(const std::string& path, std::span<const std::string> known_columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_psv(in, detail::stem(path), known_columns);
}

std::vector<std::string> default_required_columns() { return {"HR", "O2Sat", "Temp", "MAP", "Resp"}; }

std::optional<double> mean_arterial_pressure(const RawRecord& record, std::size_t row) {
  if (auto map = record.value(row, "MAP")) return map;
  const auto sbp = record.value(row, "SBP");
  const auto dbp = record.value(row, "DBP");
  if (sbp && dbp) return (*sbp + 2.0 * *dbp) / 3.0;
  return std::nullopt;
}

namespace {

std::optional<double> measurement(const RawRecord& record, std::size_t row, std::string_view column) {
  if (column == "MAP") return mean_arterial_pressure(record, row);
  return record.value(row, column);
}

}  // namespace

RawRecord forward_fill(const RawRecord& record, const FillOptions& options) {
  if (options.horizon_hours < 1) throw ValidationError("forward_fill: horizon_hours must be >= 1");
  RawRecord out = record;
  const auto iculos = out.column_index("ICULOS");
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    if (iculos && c == *iculos) continue;
    for (std::size_t t = 1; t < out.rows.size(); ++t) {
      Cell& cell = out.rows[t][c];
      const Cell& prev = out.rows[t - 1][c];
      if (cell.present() || !prev.present()) continue;
      if (out.hours(t) - prev.observed_at <= options.horizon_hours) {
        cell.value = prev.value;
        cell.filled = true;
        cell.observed_at = prev.observed_at;
      }
    }
  }
  if (options.required_columns.empty()) return out;

  std::vector<std::vector<Cell>> kept;
  kept.reserve(out.rows.size());
  for (std::size_t t = 0; t < out.rows.size(); ++t) {
    const bool complete = std::all_of(options.required_columns.begin(), options.required_columns.end(),
                                      [&](const std::string& col) { return measurement(out, t, col).has_value(); });
    if (complete) kept.push_back(std::move(out.rows[t]));
  }
  out.rows = std::move(kept);
  return out;
}

RawRecord forward_fill(const RawRecord& record, int horizon_hours) {
  return forward_fill(record, FillOptions{horizon_hours, default_required_columns()});
}

SadSeries build_sad_series(const RawRecord& record, std::span<const SadRule> rules) {
  for (const auto& rule : rules) {
    if (std::find(kPhysionetColumns.begin(), kPhysionetColumns.end(), rule.measurement) == kPhysionetColumns.end())
      throw ConfigError("SAD rule references unknown measurement '" + rule.measurement + "'");
  }
  const auto T = static_cast<Eigen::Index>(record.size());
  SadSeries out;
  for (auto g : all_sad_groups()) out.names.emplace_back(to_string(g));
  out.names.emplace_back("SepsisLabel");
  out.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.names.size()), T);
  out.valid = decltype(out.valid)::Constant(out.scores.rows(), T, true);

  for (Eigen::Index t = 0; t < T; ++t) {
    const auto row = static_cast<std::size_t>(t);
    for (const auto& rule : rules) {
      const auto v = measurement(record, row, rule.measurement);
      if (v && rule.rule(*v)) out.scores(static_cast<Eigen::Index>(rule.group), t) += rule.risk_score;
    }
    const auto sepsis = record.value(row, "SepsisLabel");
    const Eigen::Index last = out.scores.rows() - 1;
    if (sepsis) {
      out.scores(last, t) = *sepsis;
    } else {
      out.valid(last, t) = false;
    }
  }
  return out;
}

ExogenousSeries build_exogenous(const RawRecord& record, int window_hours) {
  if (window_hours < 1) throw ValidationError("build_exogenous: window_hours must be >= 1");
  struct Summary {
    std::string column;
    bool max, min, mean;
  };
  const std::vector<Summary> roster = {{"HR", true, true, true},
                                       {"O2Sat", true, true, true},
                                       {"Temp", true, true, true},
                                       {"MAP", true, true, true},
                                       {"Resp", false, true, true}};
  ExogenousSeries out;
  for (const auto& s : roster) {
    if (s.max) out.names.push_back(s.column + " (max)");
    if (s.min) out.names.push_back(s.column + " (min)");
    if (s.mean) out.names.push_back(s.column + " (mean)");
  }
  out.names.emplace_back("Lab count");
  out.names.emplace_back("ICULOS");

  const auto T = static_cast<Eigen::Index>(record.size());
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.names.size()), T);
  out.valid = decltype(out.valid)::Constant(out.values.rows(), T, true);

  std::vector<std::size_t> lab_idx;
  for (const auto& lab : kLabColumns)
    if (auto i = record.column_index(lab)) lab_idx.push_back(*i);

  std::size_t begin = 0;
  for (std::size_t t = 0; t < record.size(); ++t) {
    const double now = record.hours(t);
    while (record.hours(begin) <= now - window_hours) ++begin;

    Eigen::Index feature = 0;
    const auto col = static_cast<Eigen::Index>(t);
    for (const auto& s : roster) {
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      double sum = 0.0;
      int n = 0;
      for (std::size_t r = begin; r <= t; ++r) {
        if (auto v = measurement(record, r, s.column)) {
          hi = std::max(hi, *v);
          lo = std::min(lo, *v);
          sum += *v;
          ++n;
        }
      }
      const auto put = [&](double v) {
        if (n == 0) out.valid(feature, col) = false;
        out.values(feature, col) = n == 0 ? 0.0 : v;
        ++feature;
      };
      if (s.max) put(hi);
      if (s.min) put(lo);
      if (s.mean) put(n > 0 ? sum / n : 0.0);
    }

    int labs = 0;
    for (std::size_t r = begin; r <= t; ++r)
      for (auto i : lab_idx) labs += record.rows[r][i].raw() ? 1 : 0;
    out.values(feature++, col) = labs;
    out.values(feature, col) = now;
  }
  return out;
}

IndicatorSeries abnormality_indicators(const RawRecord& record, std::span<const SadRule> rules) {
  IndicatorSeries out;
  for (const auto& rule : rules) out.names.push_back(rule.measurement);
  out.names.emplace_back("SepsisLabel");
  const auto T = static_cast<Eigen::Index>(record.size());
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.names.size()), T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto row = static_cast<std::size_t>(t);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      std::optional<double> v;
      if (rules[k].measurement == "MAP") {
        const Cell* map = record.cell(row, "MAP");
        const Cell* sbp = record.cell(row, "SBP");
        const Cell* dbp = record.cell(row, "DBP");
        if (map && map->raw()) {
          v = map->value;
        } else if (sbp && dbp && sbp->raw() && dbp->raw()) {
          v = (*sbp->value + 2.0 * *dbp->value) / 3.0;
        }
      } else if (const Cell* c = record.cell(row, rules[k].measurement); c && c->raw()) {
        v = c->value;
      }
      if (v && rules[k].rule(*v)) out.values(static_cast<Eigen::Index>(k), t) = 1.0;
    }
    if (auto s = record.value(row, "SepsisLabel"); s && *s > 0)
      out.values(static_cast<Eigen::Index>(rules.size()), t) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

void PatientPanel::validate() const {
  const auto T = y.cols();
  if (static_cast<std::size_t>(y.rows()) != y_names.size() || static_cast<std::size_t>(x.rows()) != x_names.size() ||
      static_cast<std::size_t>(z.size()) != z_names.size())
    throw ValidationError("panel '" + id + "': series names and data disagree");
  if (x.cols() != T && x.rows() > 0) throw ValidationError("panel '" + id + "': series lengths differ");
  if (y_valid.rows() != y.rows() || y_valid.cols() != T || x_valid.rows() != x.rows() ||
      (x.rows() > 0 && x_valid.cols() != T))
    throw ValidationError("panel '" + id + "': validity mask shape mismatch");
}

PatientPanel PatientPanel::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > length()) throw ValidationError("panel slice out of range");
  PatientPanel out = *this;
  const auto b = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(end - begin);
  out.y = y.middleCols(b, n);
  out.y_valid = y_valid.middleCols(b, n);
  out.x = x.rows() > 0 ? Eigen::MatrixXd(x.middleCols(b, n)) : Eigen::MatrixXd(0, n);
  out.x_valid = x.rows() > 0 ? decltype(x_valid)(x_valid.middleCols(b, n)) : decltype(x_valid)(0, n);
  return out;
}

bool SubgroupFilter::matches(const RawRecord& record) const {
  if (record.size() == 0) return false;
  if (sex) {
    const auto g = record.value(0, "Gender");
    if (!g || static_cast<int>(std::lround(*g)) != *sex) return false;
  }
  if (age_above) {
    const auto a = record.value(0, "Age");
    if (!a || !(*a > *age_above)) return false;
  }
  return true;
}

PatientPanel assemble_panel(const RawRecord& record, std::span<const SadRule> rules, const IngestOptions& options,
                            IngestCounts* counts) {
  const RawRecord filled = forward_fill(record, options.fill);
  if (counts != nullptr) {
    counts->rows_before = record.size();
    counts->rows_after = filled.size();
  }
  const SadSeries sad = build_sad_series(filled, rules);
  const ExogenousSeries exo = build_exogenous(filled, options.window_hours);

  PatientPanel panel;
  panel.id = record.patient_id;
  panel.y_names = sad.names;
  panel.y = sad.scores;
  panel.y_valid = sad.valid;
  panel.x_names = exo.names;
  panel.x = exo.values;
  panel.x_valid = exo.valid;
  if (options.include_demographics) {
    panel.z_names = {"Age", "Gender"};
    panel.z = Eigen::VectorXd::Zero(2);
    if (filled.size() > 0) {
      panel.z(0) = filled.value(0, "Age").value_or(0.0);
      panel.z(1) = filled.value(0, "Gender").value_or(0.0);
    }
  } else {
    panel.z = Eigen::VectorXd(0);
  }
  return panel;
}

void write_panel_psv(std::ostream& out, const PatientPanel& panel) {
  panel.validate();
  std::vector<std::string> header;
  for (const auto& n : panel.y_names) header.push_back("y:" + n);
  for (const auto& n : panel.x_names) header.push_back("x:" + n);
  for (const auto& n : panel.z_names) header.push_back("z:" + n);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "|" : "") << header[i];
  out << '\n';
  const auto emit = [&](double v, bool valid, bool& first) {
    if (!first) out << '|';
    first = false;
    if (valid) {
      out << detail::format_double(v);
    } else {
      out << "NaN";
    }
  };
  for (Eigen::Index t = 0; t < panel.y.cols(); ++t) {
    bool first = true;
    for (Eigen::Index i = 0; i < panel.y.rows(); ++i) emit(panel.y(i, t), panel.y_valid(i, t), first);
    for (Eigen::Index i = 0; i < panel.x.rows(); ++i) emit(panel.x(i, t), panel.x_valid(i, t), first);
    for (Eigen::Index i = 0; i < panel.z.size(); ++i) emit(panel.z(i), true, first);
    out << '\n';
  }
}

PatientPanel read_panel_psv(std::istream& in, std::string id) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("panel file: missing header", 0);
  const auto header = detail::split(detail::strip_cr(line), '|');
  PatientPanel panel;
  panel.id = std::move(id);
  enum class Role { y, x, z };
  std::vector<Role> roles;
  for (const auto& h : header) {
    const auto name = detail::trim(h);
    if (name.size() < 2 || name[1] != ':') throw ParseError("panel file: bad column '" + std::string(name) + "'", 0);
    const std::string label(name.substr(2));
    switch (name[0]) {
      case 'y': roles.push_back(Role::y); panel.y_names.push_back(label); break;
      case 'x': roles.push_back(Role::x); panel.x_names.push_back(label); break;
      case 'z': roles.push_back(Role::z); panel.z_names.push_back(label); break;
      default: throw ParseError("panel file: bad column role in '" + std::string(name) + "'", 0);
    }
  }
  std::vector<std::vector<std::optional<double>>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    line = detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, '|');
    if (fields.size() != header.size())
      throw ParseError("panel file row " + std::to_string(row_number) + ": wrong field count", row_number);
    std::vector<std::optional<double>> r;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto tok = detail::trim(fields[i]);
      if (is_missing_token(tok)) {
        r.emplace_back();
        continue;
      }
      const auto v = detail::parse_double(tok);
      if (!v) throw ParseError("panel file row " + std::to_string(row_number) + ": non-numeric cell", row_number);
      r.emplace_back(*v);
    }
    rows.push_back(std::move(r));
  }
  const auto T = static_cast<Eigen::Index>(rows.size());
  const auto ny = static_cast<Eigen::Index>(panel.y_names.size());
  const auto nx = static_cast<Eigen::Index>(panel.x_names.size());
  panel.y = Eigen::MatrixXd::Zero(ny, T);
  panel.x = Eigen::MatrixXd::Zero(nx, T);
  panel.z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(panel.z_names.size()));
  panel.y_valid = decltype(panel.y_valid)::Constant(ny, T, true);
  panel.x_valid = decltype(panel.x_valid)::Constant(nx, T, true);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Index iy = 0, ix = 0, iz = 0;
    for (std::size_t c = 0; c < roles.size(); ++c) {
      const auto& v = rows[static_cast<std::size_t>(t)][c];
      switch (roles[c]) {
        case Role::y:
          panel.y(iy, t) = v.value_or(0.0);
          panel.y_valid(iy++, t) = v.has_value();
          break;
        case Role::x:
          panel.x(ix, t) = v.value_or(0.0);
          panel.x_valid(ix++, t) = v.has_value();
          break;
        case Role::z:
          if (t == 0) panel.z(iz) = v.value_or(0.0);
          ++iz;
          break;
      }
    }
  }
  return panel;
}

}  // namespace sadgraph
