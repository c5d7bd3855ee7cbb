#pragma once

// Ingestion of hourly ICU records: PSV parsing, forward filling, SAD risk
// scores, vital-sign window summaries and the lab-count acuity proxy.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sadgraph {

/// One cell of a record. `filled` cells were copied forward from an earlier
/// observation taken at `observed_at` (ICULOS hours).
struct Cell {
  std::optional<double> value;
  bool filled{false};
  double observed_at{0.0};

  [[nodiscard]] bool present() const noexcept { return value.has_value(); }
  [[nodiscard]] bool raw() const noexcept { return value.has_value() && !filled; }
};

struct RawRecord {
  std::string patient_id;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;  // rows[t][column]

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] std::optional<std::size_t> column_index(std::string_view name) const;
  [[nodiscard]] std::optional<double> value(std::size_t row, std::string_view column) const;
  [[nodiscard]] const Cell* cell(std::size_t row, std::string_view column) const;
  /// Hours since ICU admission. Falls back to row+1 when ICULOS is absent.
  [[nodiscard]] double hours(std::size_t row) const;
};

/// Column names of the hourly PhysioNet 2019 challenge files.
[[nodiscard]] std::span<const std::string> physionet_columns();
/// The laboratory subset of `physionet_columns()`.
[[nodiscard]] std::span<const std::string> physionet_lab_columns();

/// Parses a pipe-separated file. Columns not in `known_columns` are ignored;
/// "", "NaN" and "NA" denote absent values.
[[nodiscard]] RawRecord parse_psv(std::istream& in, std::string patient_id,
                                  std::span<const std::string> known_columns = physionet_columns());
[[nodiscard]] RawRecord parse_psv_file(const std::string& path,
                                       std::span<const std::string> known_columns = physionet_columns());

struct FillOptions {
  int horizon_hours{24};
  /// Rows still missing any of these columns after filling are dropped.
  std::vector<std::string> required_columns;
};

/// Vitals feeding the default exogenous roster; the default drop set.
[[nodiscard]] std::vector<std::string> default_required_columns();

[[nodiscard]] RawRecord forward_fill(const RawRecord& record, const FillOptions& options);
[[nodiscard]] RawRecord forward_fill(const RawRecord& record, int horizon_hours = 24);

// ---------------------------------------------------------------------------
// SAD rules

enum class SadGroup {
  renal_injury,
  electrolyte_imbalance,
  oxygen_carrying_dysfunction,
  shock,
  diminished_cardiac_output,
  coagulopathy,
  cholestasis,
  hepatocellular_injury,
  oxygenation_dysfunction,
  inflammation,
};

inline constexpr std::size_t kSadGroupCount = 10;

[[nodiscard]] std::string_view to_string(SadGroup group);
[[nodiscard]] std::optional<SadGroup> parse_sad_group(std::string_view name);
[[nodiscard]] std::array<SadGroup, kSadGroupCount> all_sad_groups();

/// Abnormal when any of the one-sided comparisons holds ("<98 or >106").
struct AbnormalityPredicate {
  struct Comparison {
    bool less_than{true};
    double threshold{0.0};
  };
  std::vector<Comparison> any_of;

  [[nodiscard]] bool operator()(double value) const;
  [[nodiscard]] static AbnormalityPredicate parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;
};

struct SadRule {
  SadGroup group{SadGroup::renal_injury};
  std::string measurement;
  AbnormalityPredicate rule;
  double risk_score{0.0};
};

/// Default rule table. Thresholds are in the native units of the PhysioNet
/// files (platelets and WBC in 10^3/uL, FiO2 as a fraction).
[[nodiscard]] const std::vector<SadRule>& default_sad_rules();
[[nodiscard]] std::string_view default_sad_rules_text();

/// Table format: `SAD name|Measurement|Rule|Risk score`, one rule per line,
/// '#' comments and a header line allowed.
[[nodiscard]] std::vector<SadRule> parse_sad_rules(std::istream& in);
[[nodiscard]] std::vector<SadRule> load_sad_rules(const std::string& path);

/// Throws ConfigError on unknown measurements, duplicate memberships or group
/// scores that do not sum to 1 within 0.01.
void validate_sad_rules(std::span<const SadRule> rules);

struct SadSeries {
  std::vector<std::string> names;  // 10 SAD groups, then "SepsisLabel"
  Eigen::MatrixXd scores;          // names.size() x T
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

[[nodiscard]] SadSeries build_sad_series(const RawRecord& record, std::span<const SadRule> rules);

/// MAP at a row, derived from SBP and DBP when the MAP cell is absent.
[[nodiscard]] std::optional<double> mean_arterial_pressure(const RawRecord& record, std::size_t row);

struct ExogenousSeries {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // names.size() x T
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

/// Trailing-window summaries: max/min/mean of HR, O2Sat, Temp and MAP, min and
/// mean of Resp, the count of raw lab cells, and ICULOS.
[[nodiscard]] ExogenousSeries build_exogenous(const RawRecord& record, int window_hours = 6);

/// Binary "reported and abnormal" indicator per rule measurement plus the
/// SepsisLabel series. Uses raw (unfilled) cells only.
struct IndicatorSeries {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // names.size() x T, entries in {0,1}
};
[[nodiscard]] IndicatorSeries abnormality_indicators(const RawRecord& record,
                                                     std::span<const SadRule> rules);

// ---------------------------------------------------------------------------
// Panels

/// Aligned mixed-type series for one patient. Node series `y` are N1 x T,
/// exogenous series `x` are N2 x T, static covariates `z` have length N3.
struct PatientPanel {
  std::string id;
  std::vector<std::string> y_names;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;
  Eigen::VectorXd z;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> y_valid;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> x_valid;

  [[nodiscard]] std::size_t length() const noexcept { return static_cast<std::size_t>(y.cols()); }
  [[nodiscard]] std::size_t node_count() const noexcept { return static_cast<std::size_t>(y.rows()); }
  [[nodiscard]] std::size_t exogenous_count() const noexcept { return static_cast<std::size_t>(x.rows()); }
  [[nodiscard]] std::size_t static_count() const noexcept { return static_cast<std::size_t>(z.size()); }

  /// Throws ValidationError when shapes disagree.
  void validate() const;
  /// Copy of rows [begin, end).
  [[nodiscard]] PatientPanel slice(std::size_t begin, std::size_t end) const;
};

struct SubgroupFilter {
  std::optional<int> sex;
  std::optional<double> age_above;

  [[nodiscard]] bool matches(const RawRecord& record) const;
  [[nodiscard]] bool active() const noexcept { return sex.has_value() || age_above.has_value(); }
};

struct IngestOptions {
  FillOptions fill;
  int window_hours{6};
  bool include_demographics{false};
};

struct IngestCounts {
  std::size_t rows_before{0};
  std::size_t rows_after{0};
};

[[nodiscard]] PatientPanel assemble_panel(const RawRecord& record, std::span<const SadRule> rules,
                                          const IngestOptions& options, IngestCounts* counts = nullptr);

/// Writes a panel as PSV with `y:`, `x:` and `z:` prefixed columns. Invalid
/// cells are written as NaN. `read_panel_psv` inverts it.
void write_panel_psv(std::ostream& out, const PatientPanel& panel);
[[nodiscard]] PatientPanel read_panel_psv(std::istream& in, std::string id);

}  // namespace sadgraph
