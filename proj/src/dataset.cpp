#include "mtl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mtl/rng.hpp"

namespace mtl {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string task_kind_name(TaskKind k) {
  return k == TaskKind::classification ? "classification" : "regression";
}

std::string where(std::size_t row, const ColumnDescriptor& col) {
  return "row " + std::to_string(row) + ", column '" + col.name + "'";
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

bool ColumnDescriptor::is_input() const {
  return !std::holds_alternative<IdentifierColumn>(kind) &&
         !std::holds_alternative<OutcomeColumn>(kind);
}

bool ColumnDescriptor::parses_numeric() const {
  return std::holds_alternative<NumericColumn>(kind) ||
         std::holds_alternative<TimeseriesColumn>(kind) ||
         std::holds_alternative<OutcomeColumn>(kind);
}

std::string ColumnDescriptor::kind_name() const {
  return std::visit(overloaded{
                        [](const NumericColumn&) { return std::string("numeric"); },
                        [](const CategoricalColumn&) { return std::string("categorical"); },
                        [](const OrdinalColumn&) { return std::string("ordinal"); },
                        [](const TimeseriesColumn&) { return std::string("timeseries"); },
                        [](const IdentifierColumn&) { return std::string("identifier"); },
                        [](const OutcomeColumn&) { return std::string("outcome"); },
                    },
                    kind);
}

void validate_schema(const Schema& schema) {
  std::set<std::string> names;
  std::vector<int> task_indices;
  for (const auto& col : schema) {
    if (col.name.empty()) throw std::invalid_argument("schema: empty column name");
    if (!names.insert(col.name).second)
      throw std::invalid_argument("schema: duplicate column name '" + col.name + "'");
    if (const auto* cat = std::get_if<CategoricalColumn>(&col.kind)) {
      if (cat->levels.empty())
        throw std::invalid_argument("schema: categorical column '" + col.name + "' has no levels");
      std::set<std::string> levels(cat->levels.begin(), cat->levels.end());
      if (levels.size() != cat->levels.size())
        throw std::invalid_argument("schema: categorical column '" + col.name +
                                    "' has repeated levels");
    } else if (const auto* ord = std::get_if<OrdinalColumn>(&col.kind)) {
      if (ord->mapping.empty())
        throw std::invalid_argument("schema: ordinal column '" + col.name + "' has no mapping");
      for (const auto& [token, value] : ord->mapping)
        if (!std::isfinite(value))
          throw std::invalid_argument("schema: ordinal column '" + col.name +
                                      "' maps '" + token + "' to a non-finite value");
    } else if (const auto* ts = std::get_if<TimeseriesColumn>(&col.kind)) {
      if (ts->group.empty())
        throw std::invalid_argument("schema: timeseries column '" + col.name + "' has no group");
    } else if (const auto* out = std::get_if<OutcomeColumn>(&col.kind)) {
      if (out->task == TaskKind::classification && out->num_classes < 2)
        throw std::invalid_argument("schema: outcome '" + col.name + "' needs num_classes >= 2");
      task_indices.push_back(out->task_index);
    }
  }
  std::sort(task_indices.begin(), task_indices.end());
  for (std::size_t i = 0; i < task_indices.size(); ++i)
    if (task_indices[i] != static_cast<int>(i))
      throw std::invalid_argument("schema: outcome task_index values must be exactly 0.." +
                                  std::to_string(task_indices.size() - 1));
}

Schema schema_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("schema: expected a JSON array of columns");
  Schema schema;
  for (const auto& entry : j) {
    ColumnDescriptor col;
    col.name = entry.at("name").get<std::string>();
    const auto kind = entry.at("kind").get<std::string>();
    const json params = entry.value("params", json::object());
    if (kind == "numeric") {
      col.kind = NumericColumn{};
    } else if (kind == "categorical") {
      col.kind = CategoricalColumn{params.at("levels").get<std::vector<std::string>>()};
    } else if (kind == "ordinal") {
      col.kind = OrdinalColumn{params.at("mapping").get<std::map<std::string, double>>()};
    } else if (kind == "timeseries") {
      col.kind = TimeseriesColumn{params.at("group").get<std::string>()};
    } else if (kind == "identifier") {
      col.kind = IdentifierColumn{};
    } else if (kind == "outcome") {
      OutcomeColumn out;
      out.task_index = params.at("task_index").get<int>();
      const auto type = params.value("type", std::string("classification"));
      if (type == "classification") {
        out.task = TaskKind::classification;
        out.num_classes = params.value("num_classes", 2);
      } else if (type == "regression") {
        out.task = TaskKind::regression;
        out.num_classes = 0;
      } else {
        throw std::invalid_argument("schema: outcome '" + col.name + "' has unknown type '" +
                                    type + "'");
      }
      col.kind = out;
    } else {
      throw std::invalid_argument("schema: column '" + col.name + "' has unknown kind '" + kind +
                                  "'");
    }
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

json schema_to_json(const Schema& schema) {
  json arr = json::array();
  for (const auto& col : schema) {
    json params = json::object();
    std::visit(overloaded{
                   [](const NumericColumn&) {},
                   [&](const CategoricalColumn& c) { params["levels"] = c.levels; },
                   [&](const OrdinalColumn& c) { params["mapping"] = c.mapping; },
                   [&](const TimeseriesColumn& c) { params["group"] = c.group; },
                   [](const IdentifierColumn&) {},
                   [&](const OutcomeColumn& c) {
                     params["task_index"] = c.task_index;
                     params["type"] = task_kind_name(c.task);
                     if (c.task == TaskKind::classification) params["num_classes"] = c.num_classes;
                   },
               },
               col.kind);
    arr.push_back({{"name", col.name}, {"kind", col.kind_name()}, {"params", params}});
  }
  return arr;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open schema file " + path.string());
  try {
    return schema_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// RawTable

std::size_t RawTable::column_index(std::string_view name) const {
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (schema[c].name == name) return c;
  throw std::invalid_argument("no column named '" + std::string(name) + "'");
}

std::size_t RawTable::missing_count(std::size_t col) const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [col](const auto& row) { return is_missing(row[col]); }));
}

std::size_t RawTable::total_missing() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < n_cols(); ++c) n += missing_count(c);
  return n;
}

nlohmann::json CleaningReport::to_json() const {
  json dropped = json::array();
  for (const auto& d : dropped_columns) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
  return {{"dropped_columns", dropped}, {"duplicates_removed", duplicates_removed}};
}

namespace {

void drop_columns(RawTable& t, const std::vector<bool>& drop) {
  Schema schema;
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    if (!drop[c]) schema.push_back(t.schema[c]);
  for (auto& row : t.rows) {
    std::vector<Cell> kept;
    kept.reserve(schema.size());
    for (std::size_t c = 0; c < row.size(); ++c)
      if (!drop[c]) kept.push_back(std::move(row[c]));
    row = std::move(kept);
  }
  t.schema = std::move(schema);
}

std::size_t remove_duplicates(RawTable& t) {
  std::vector<std::size_t> inputs;
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    if (t.schema[c].is_input()) inputs.push_back(c);
  std::set<std::vector<Cell>> seen;
  std::vector<std::vector<Cell>> kept;
  for (auto& row : t.rows) {
    std::vector<Cell> key;
    key.reserve(inputs.size());
    for (auto c : inputs) key.push_back(row[c]);
    if (seen.insert(std::move(key)).second) kept.push_back(std::move(row));
  }
  const std::size_t removed = t.rows.size() - kept.size();
  t.rows = std::move(kept);
  return removed;
}

}  // namespace

CleanResult clean(const RawTable& raw, double max_missing_frac) {
  if (!(max_missing_frac >= 0.0 && max_missing_frac <= 1.0))
    throw std::invalid_argument("clean: max_missing_frac must lie in [0, 1]");
  if (raw.rows.empty()) throw std::invalid_argument("clean: table has no rows");

  CleanResult result{raw, {}};
  RawTable& t = result.table;
  auto& report = result.report;

  for (bool changed = true; changed;) {
    changed = false;

    const std::size_t dups = remove_duplicates(t);
    report.duplicates_removed += dups;
    changed |= dups > 0;

    std::vector<bool> drop(t.n_cols(), false);
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      if (!t.schema[c].is_input()) continue;
      std::set<Cell> distinct;
      for (const auto& row : t.rows)
        if (!is_missing(row[c])) distinct.insert(row[c]);
      if (distinct.size() <= 1) {
        drop[c] = true;
        report.dropped_columns.push_back(
            {t.schema[c].name, distinct.empty() ? "no_observed_values" : "single_valued"});
      }
    }
    if (std::find(drop.begin(), drop.end(), true) != drop.end()) {
      drop_columns(t, drop);
      changed = true;
    }

    drop.assign(t.n_cols(), false);
    const auto n = static_cast<double>(t.n_rows());
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      if (!t.schema[c].is_input()) continue;
      if (static_cast<double>(t.missing_count(c)) / n > max_missing_frac) {
        drop[c] = true;
        report.dropped_columns.push_back({t.schema[c].name, "missing_fraction"});
      }
    }
    if (std::find(drop.begin(), drop.end(), true) != drop.end()) {
      drop_columns(t, drop);
      changed = true;
    }
  }

  if (std::none_of(t.schema.begin(), t.schema.end(), [](const auto& c) { return c.is_input(); }))
    throw std::invalid_argument("clean: every input column was dropped");
  return result;
}

RawTable encode_nominal(const RawTable& table) {
  RawTable out = table;
  for (std::size_t c = 0; c < out.n_cols(); ++c) {
    const auto& col = out.schema[c];
    const auto* ord = std::get_if<OrdinalColumn>(&col.kind);
    const auto* cat = std::get_if<CategoricalColumn>(&col.kind);
    if (!ord && !cat) continue;
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
      auto& cell = out.rows[r][c];
      const auto* token = std::get_if<std::string>(&cell);
      if (!token) continue;
      if (ord) {
        auto it = ord->mapping.find(*token);
        if (it == ord->mapping.end())
          throw std::invalid_argument(where(r, col) + ": value '" + *token +
                                      "' is not in the ordinal mapping");
        cell = it->second;
      } else {
        auto it = std::find(cat->levels.begin(), cat->levels.end(), *token);
        if (it == cat->levels.end())
          throw std::invalid_argument(where(r, col) + ": value '" + *token +
                                      "' is not a declared level");
        cell = static_cast<double>(it - cat->levels.begin());
      }
    }
  }
  return out;
}

RawTable decode_categorical(const RawTable& table) {
  RawTable out = table;
  for (std::size_t c = 0; c < out.n_cols(); ++c) {
    const auto* cat = std::get_if<CategoricalColumn>(&out.schema[c].kind);
    if (!cat) continue;
    const double top = static_cast<double>(cat->levels.size() - 1);
    for (auto& row : out.rows) {
      if (const auto* code = std::get_if<double>(&row[c])) {
        const double idx = std::clamp(std::round(*code), 0.0, top);
        row[c] = cat->levels[static_cast<std::size_t>(idx)];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outcomes and datasets

OutcomeVector OutcomeVector::subset(std::span<const std::size_t> rows) const {
  OutcomeVector out{task_name, kind, num_classes, {}, {}};
  if (kind == TaskKind::classification) {
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(labels[r]);
  } else {
    out.targets.reserve(rows.size());
    for (auto r : rows) out.targets.push_back(targets[r]);
  }
  return out;
}

std::size_t Dataset::task_index(std::string_view name) const {
  std::string valid;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (outcomes[j].task_name == name) return j;
    valid += (j ? ", " : "") + outcomes[j].task_name;
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'; valid tasks: " + valid);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
  out.feature_names = feature_names;
  for (const auto& o : outcomes) out.outcomes.push_back(o.subset(rows));
  out.normalization_stats = normalization_stats;
  return out;
}

Dataset Dataset::select_tasks(std::span<const std::string> names) const {
  if (names.empty()) throw std::invalid_argument("select_tasks: no task names given");
  Dataset out;
  out.features = features;
  out.feature_names = feature_names;
  out.normalization_stats = normalization_stats;
  for (const auto& name : names) out.outcomes.push_back(outcomes[task_index(name)]);
  return out;
}

void Dataset::validate() const {
  if (n_samples() == 0 || n_features() == 0)
    throw std::invalid_argument("dataset: needs at least one sample and one feature");
  if (outcomes.empty()) throw std::invalid_argument("dataset: needs at least one outcome");
  if (feature_names.size() != n_features())
    throw std::invalid_argument("dataset: feature name count does not match feature columns");
  if (!features.allFinite()) throw std::invalid_argument("dataset: non-finite feature value");
  for (const auto& o : outcomes) {
    if (o.size() != n_samples())
      throw std::invalid_argument("dataset: outcome '" + o.task_name + "' has wrong length");
    if (o.kind == TaskKind::classification) {
      for (int y : o.labels)
        if (y < 0 || y >= o.num_classes)
          throw std::invalid_argument("dataset: label out of range in '" + o.task_name + "'");
    } else {
      for (double y : o.targets)
        if (!std::isfinite(y))
          throw std::invalid_argument("dataset: non-finite target in '" + o.task_name + "'");
    }
  }
}

namespace {

struct ColumnMoments {
  FeatureStats stats;
  bool degenerate = false;
};

ColumnMoments column_moments(const Matrix& x, Eigen::Index col,
                             std::span<const std::size_t> rows) {
  const auto n = static_cast<double>(rows.size());
  double sum = 0.0;
  for (auto r : rows) sum += x(static_cast<Eigen::Index>(r), col);
  const double mean = sum / n;
  double ss = 0.0;
  for (auto r : rows) {
    const double d = x(static_cast<Eigen::Index>(r), col) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / n);
  if (sd < 1e-12) {
    // Centre on an observed value so an exactly constant column maps to 0.
    return {{x(static_cast<Eigen::Index>(rows.front()), col), 1.0}, true};
  }
  return {{mean, sd}, false};
}

std::vector<std::size_t> all_rows(const Matrix& x) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

std::vector<FeatureStats> fit_normalization(const Matrix& features,
                                            std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("fit_normalization: no rows");
  std::vector<FeatureStats> stats;
  stats.reserve(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index c = 0; c < features.cols(); ++c)
    stats.push_back(column_moments(features, c, rows).stats);
  return stats;
}

std::vector<FeatureStats> fit_normalization(const Matrix& features) {
  const auto rows = all_rows(features);
  return fit_normalization(features, rows);
}

Matrix apply_normalization(const Matrix& features, std::span<const FeatureStats> stats) {
  if (stats.size() != static_cast<std::size_t>(features.cols()))
    throw std::invalid_argument("apply_normalization: stats do not match feature count");
  Matrix out(features.rows(), features.cols());
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      out(r, c) = (features(r, c) - stats[static_cast<std::size_t>(c)].mean) /
                  stats[static_cast<std::size_t>(c)].std;
  return out;
}

Dataset transform(const RawTable& table, bool normalize) {
  const std::size_t n = table.n_rows();
  if (n == 0) throw std::invalid_argument("transform: table has no rows");

  auto number_at = [&](std::size_t r, std::size_t c) -> double {
    const auto& col = table.schema[c];
    const auto& cell = table.rows[r][c];
    if (is_missing(cell))
      throw std::invalid_argument(where(r, col) + ": missing value (impute before transform)");
    if (const auto* v = std::get_if<double>(&cell)) return *v;
    const auto& token = std::get<std::string>(cell);
    if (const auto* ord = std::get_if<OrdinalColumn>(&col.kind)) {
      auto it = ord->mapping.find(token);
      if (it == ord->mapping.end())
        throw std::invalid_argument(where(r, col) + ": value '" + token +
                                    "' is not in the ordinal mapping");
      return it->second;
    }
    throw std::invalid_argument(where(r, col) + ": expected a number, got '" + token + "'");
  };

  // Feature columns are assembled column by column, then packed.
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  std::set<std::string> emitted_groups;
  std::vector<std::pair<int, std::size_t>> outcome_cols;

  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& col = table.schema[c];
    if (std::holds_alternative<IdentifierColumn>(col.kind)) continue;
    if (const auto* out = std::get_if<OutcomeColumn>(&col.kind)) {
      outcome_cols.emplace_back(out->task_index, c);
      continue;
    }
    if (const auto* ts = std::get_if<TimeseriesColumn>(&col.kind)) {
      if (!emitted_groups.insert(ts->group).second) continue;
      std::vector<double> sum(n, 0.0);
      for (std::size_t m = c; m < table.n_cols(); ++m) {
        const auto* member = std::get_if<TimeseriesColumn>(&table.schema[m].kind);
        if (!member || member->group != ts->group) continue;
        for (std::size_t r = 0; r < n; ++r) sum[r] += number_at(r, m);
      }
      columns.push_back(std::move(sum));
      names.push_back(ts->group + "_sum");
      continue;
    }
    if (const auto* cat = std::get_if<CategoricalColumn>(&col.kind)) {
      const std::size_t k = cat->levels.size();
      std::vector<std::vector<double>> onehot(k, std::vector<double>(n, 0.0));
      for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = table.rows[r][c];
        std::size_t level = k;
        if (const auto* token = std::get_if<std::string>(&cell)) {
          level = static_cast<std::size_t>(
              std::find(cat->levels.begin(), cat->levels.end(), *token) - cat->levels.begin());
        } else if (const auto* code = std::get_if<double>(&cell)) {
          if (*code >= 0 && *code < static_cast<double>(k) && std::floor(*code) == *code)
            level = static_cast<std::size_t>(*code);
        } else {
          throw std::invalid_argument(where(r, col) + ": missing value (impute before transform)");
        }
        if (level >= k)
          throw std::invalid_argument(where(r, col) + ": value outside the declared levels");
        onehot[level][r] = 1.0;
      }
      for (std::size_t l = 0; l < k; ++l) {
        columns.push_back(std::move(onehot[l]));
        names.push_back(col.name + "=" + cat->levels[l]);
      }
      continue;
    }
    std::vector<double> values(n);
    for (std::size_t r = 0; r < n; ++r) values[r] = number_at(r, c);
    columns.push_back(std::move(values));
    names.push_back(col.name);
  }

  if (columns.empty()) throw std::invalid_argument("transform: no feature columns");
  if (outcome_cols.empty()) throw std::invalid_argument("transform: no outcome columns");

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (std::size_t r = 0; r < n; ++r)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = columns[c][r];
  ds.feature_names = std::move(names);

  std::sort(outcome_cols.begin(), outcome_cols.end());
  for (const auto& [task_index, c] : outcome_cols) {
    const auto& col = table.schema[c];
    const auto& spec = std::get<OutcomeColumn>(col.kind);
    OutcomeVector o;
    o.task_name = col.name;
    o.kind = spec.task;
    o.num_classes = spec.task == TaskKind::classification ? spec.num_classes : 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = number_at(r, c);
      if (spec.task == TaskKind::classification) {
        if (std::floor(v) != v || v < 0 || v >= spec.num_classes)
          throw std::invalid_argument(where(r, col) + ": class label must be an integer in [0, " +
                                      std::to_string(spec.num_classes) + ")");
        o.labels.push_back(static_cast<int>(v));
      } else {
        if (!std::isfinite(v)) throw std::invalid_argument(where(r, col) + ": non-finite target");
        o.targets.push_back(v);
      }
    }
    ds.outcomes.push_back(std::move(o));
  }

  if (normalize) {
    const auto rows = all_rows(ds.features);
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      const auto m = column_moments(ds.features, c, rows);
      ds.normalization_stats.push_back(m.stats);
      if (m.degenerate)
        ds.features.col(c).setZero();
      else
        ds.features.col(c) = (ds.features.col(c).array() - m.stats.mean) / m.stats.std;
    }
  } else {
    ds.normalization_stats.assign(columns.size(), FeatureStats{});
  }
  ds.validate();
  return ds;
}

Schema dataset_schema(const Dataset& ds) {
  Schema schema;
  for (const auto& name : ds.feature_names) schema.push_back({name, NumericColumn{}});
  for (std::size_t j = 0; j < ds.outcomes.size(); ++j) {
    const auto& o = ds.outcomes[j];
    schema.push_back({o.task_name, OutcomeColumn{static_cast<int>(j), o.kind, o.num_classes}});
  }
  return schema;
}

json stats_to_json(std::span<const FeatureStats> stats) {
  json arr = json::array();
  for (const auto& s : stats) arr.push_back({{"mean", s.mean}, {"std", s.std}});
  return arr;
}

std::vector<FeatureStats> stats_from_json(const json& j) {
  std::vector<FeatureStats> stats;
  for (const auto& e : j) stats.push_back({e.at("mean").get<double>(), e.at("std").get<double>()});
  return stats;
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) idx.push_back(i);
  return idx;
}

FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("kfold_split: need 2 <= k <= n (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  FoldPlan plan{k, std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) plan.assignments[perm[i]] = static_cast<int>(i % k);
  return plan;
}

}  // namespace mtl
