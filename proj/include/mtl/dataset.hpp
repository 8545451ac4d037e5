#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mtl/common.hpp"

namespace mtl {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

struct NumericColumn {};
struct CategoricalColumn {
  std::vector<std::string> levels;
};
struct OrdinalColumn {
  std::map<std::string, double> mapping;
};
/// One day (or other step) of a series; members sharing a group are summed.
struct TimeseriesColumn {
  std::string group;
};
struct IdentifierColumn {};
struct OutcomeColumn {
  int task_index = 0;
  TaskKind task = TaskKind::classification;
  int num_classes = 2;  // ignored for regression
};

using ColumnKind = std::variant<NumericColumn, CategoricalColumn, OrdinalColumn,
                                TimeseriesColumn, IdentifierColumn, OutcomeColumn>;

struct ColumnDescriptor {
  std::string name;
  ColumnKind kind;

  /// True for the columns that describe the subject (everything except
  /// identifiers and outcomes).
  bool is_input() const;
  bool is_outcome() const { return std::holds_alternative<OutcomeColumn>(kind); }
  /// Kinds whose raw CSV cells are numbers.
  bool parses_numeric() const;
  std::string kind_name() const;
};

using Schema = std::vector<ColumnDescriptor>;

/// Throws std::invalid_argument on duplicate names, empty or repeated
/// categorical levels, or outcome task indices that are not exactly 0..M-1.
void validate_schema(const Schema& schema);

/// JSON form: array of {"name", "kind", "params"}.
Schema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Raw tables
// ---------------------------------------------------------------------------

/// A cell is missing (monostate), a number, or a string token.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct RawTable {
  Schema schema;
  std::vector<std::vector<Cell>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return schema.size(); }
  /// Throws std::invalid_argument if the column does not exist.
  std::size_t column_index(std::string_view name) const;
  std::size_t missing_count(std::size_t col) const;
  std::size_t total_missing() const;
};

/// Reads a CSV file laid out per `schema`. Header order may differ from the
/// schema; the returned table follows schema order. Empty cells and "NA" are
/// missing. Errors carry the file name, row and column.
RawTable load_csv(const std::filesystem::path& path, const Schema& schema);
RawTable parse_csv(std::istream& in, const Schema& schema, std::string_view source = "<stream>");

/// Writes a raw table; missing cells are written as "NA".
void write_table_csv(const RawTable& table, std::ostream& out);

struct CleaningReport {
  struct Drop {
    std::string name;
    std::string reason;
  };
  std::vector<Drop> dropped_columns;
  std::size_t duplicates_removed = 0;

  nlohmann::json to_json() const;
};

struct CleanResult {
  RawTable table;
  CleaningReport report;
};

/// Removes duplicate rows (identical input-attribute cells; first occurrence
/// kept), then single-valued input columns, then input columns whose missing
/// fraction is strictly above `max_missing_frac`. The three passes repeat
/// until nothing changes, which makes the operation idempotent.
CleanResult clean(const RawTable& raw, double max_missing_frac);

/// Maps ordinal tokens through their dictionaries and categorical tokens to
/// their level index, so every input column becomes numeric.
RawTable encode_nominal(const RawTable& table);

/// Inverse of the categorical half of encode_nominal: rounds each code to the
/// nearest valid level and restores the level token.
RawTable decode_categorical(const RawTable& table);

/// Chained-equation imputation over the input columns (see mice.cpp).
RawTable mice_impute(const RawTable& table, int max_sweeps, double tol);

// ---------------------------------------------------------------------------
// Model-ready datasets
// ---------------------------------------------------------------------------

struct OutcomeVector {
  std::string task_name;
  TaskKind kind = TaskKind::classification;
  int num_classes = 2;
  std::vector<int> labels;      // classification
  std::vector<double> targets;  // regression

  std::size_t size() const {
    return kind == TaskKind::classification ? labels.size() : targets.size();
  }
  OutcomeVector subset(std::span<const std::size_t> rows) const;
};

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;
};

struct Dataset {
  Matrix features;  // N x D
  std::vector<std::string> feature_names;
  std::vector<OutcomeVector> outcomes;
  /// Statistics that were applied to `features`; identity (0, 1) when the
  /// features are raw.
  std::vector<FeatureStats> normalization_stats;

  std::size_t n_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t n_tasks() const { return outcomes.size(); }

  /// Index of the named task; throws std::invalid_argument listing valid names.
  std::size_t task_index(std::string_view name) const;
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset select_tasks(std::span<const std::string> names) const;
  /// Checks the documented invariants; throws std::invalid_argument.
  void validate() const;
};

/// Turns a complete table into a Dataset: ordinal mapping, timeseries
/// summation into "<group>_sum", one-hot expansion ("<name>=<level>") and,
/// when `normalize` is set, z-scoring with population statistics over all rows.
Dataset transform(const RawTable& table, bool normalize = true);

/// Population mean/std of every column over `rows`. Columns with std below
/// 1e-12 get std = 1 so that they normalize to exactly zero.
std::vector<FeatureStats> fit_normalization(const Matrix& features,
                                            std::span<const std::size_t> rows);
std::vector<FeatureStats> fit_normalization(const Matrix& features);
Matrix apply_normalization(const Matrix& features, std::span<const FeatureStats> stats);

/// Schema describing a model-ready dataset: numeric features then outcomes.
Schema dataset_schema(const Dataset& ds);
void write_dataset_csv(const Dataset& ds, std::ostream& out);
/// Loads a complete, model-ready CSV without normalizing it.
Dataset load_dataset(const std::filesystem::path& csv, const Schema& schema);

nlohmann::json stats_to_json(std::span<const FeatureStats> stats);
std::vector<FeatureStats> stats_from_json(const nlohmann::json& j);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Cross-validation folds
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per sample

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

/// Shuffles 0..n-1 with the seeded stream and deals the result round-robin
/// into k folds. Requires 2 <= k <= n.
FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed);

}  // namespace mtl
