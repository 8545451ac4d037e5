#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mtl/dataset.hpp"

namespace mtl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

RawTable parse_csv(std::istream& in, const Schema& schema, std::string_view source) {
  validate_schema(schema);
  const std::string src(source);
  std::string line;
  std::size_t line_no = 0;

  // Skip leading blank lines; the first non-blank line is the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw std::invalid_argument(src + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split(line);
  std::vector<std::size_t> to_schema(header.size());
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t h = 0; h < header.size(); ++h) {
    std::size_t c = 0;
    while (c < schema.size() && schema[c].name != header[h]) ++c;
    if (c == schema.size())
      throw std::invalid_argument(src + ":" + std::to_string(line_no) + ": unknown column '" +
                                  std::string(header[h]) + "'");
    if (seen[c])
      throw std::invalid_argument(src + ":" + std::to_string(line_no) + ": column '" +
                                  schema[c].name + "' appears twice");
    seen[c] = true;
    to_schema[h] = c;
  }
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (!seen[c])
      throw std::invalid_argument(src + ": header lacks schema column '" + schema[c].name + "'");

  RawTable table{schema, {}};
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(src + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " cells, found " +
                                  std::to_string(cells.size()));
    std::vector<Cell> row(schema.size());
    for (std::size_t h = 0; h < cells.size(); ++h) {
      const auto c = to_schema[h];
      const auto text = cells[h];
      if (text.empty() || text == "NA") continue;
      if (schema[c].parses_numeric()) {
        double v = 0.0;
        if (!parse_number(text, v))
          throw std::invalid_argument(src + ":" + std::to_string(line_no) + ": column '" +
                                      schema[c].name + "': cannot parse '" + std::string(text) +
                                      "' as a number");
        row[c] = v;
      } else {
        row[c] = std::string(text);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return parse_csv(in, schema, path.string());
}

void write_table_csv(const RawTable& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    out << (c ? "," : "") << table.schema[c].name;
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (const auto* v = std::get_if<double>(&row[c]))
        out << format_double(*v);
      else if (const auto* s = std::get_if<std::string>(&row[c]))
        out << *s;
      else
        out << "NA";
    }
    out << '\n';
  }
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  bool first = true;
  for (const auto& name : ds.feature_names) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  for (const auto& o : ds.outcomes) out << ',' << o.task_name;
  out << '\n';
  for (std::size_t r = 0; r < ds.n_samples(); ++r) {
    for (std::size_t c = 0; c < ds.n_features(); ++c)
      out << (c ? "," : "")
          << format_double(ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    for (const auto& o : ds.outcomes) {
      out << ',';
      if (o.kind == TaskKind::classification)
        out << o.labels[r];
      else
        out << format_double(o.targets[r]);
    }
    out << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& csv, const Schema& schema) {
  return transform(load_csv(csv, schema), /*normalize=*/false);
}

}  // namespace mtl
