#include "vtwins/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vtwins {

std::vector<ColumnKind> Dataset::kinds() const {
  std::vector<ColumnKind> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.kind);
  return out;
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void Dataset::validate() const {
  require(static_cast<Index>(columns.size()) == X.cols(), "column metadata does not match X");
  require(static_cast<Index>(T.size()) == X.rows() && Y.size() == X.rows(),
          "row counts of X, T and Y differ");
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    require(columns[j].index == static_cast<int>(j), "column index is not dense");
    require(seen.insert(columns[j].name).second, "duplicate column name: " + columns[j].name);
    if (columns[j].kind == ColumnKind::Binary) {
      for (Index i = 0; i < X.rows(); ++i) {
        const double v = X(i, static_cast<Index>(j));
        require(v == 0.0 || v == 1.0, "binary column " + columns[j].name + " has value outside {0,1}");
      }
    }
  }
  for (int t : T) require(t == 0 || t == 1, "treatment not binary");
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.columns = columns;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.Y.resize(static_cast<Index>(rows.size()));
  out.T.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    out.X.row(static_cast<Index>(r)) = X.row(i);
    out.Y(static_cast<Index>(r)) = Y(i);
    out.T[r] = T[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<ColumnMeta> default_columns(int p, int binary_from) {
  std::vector<ColumnMeta> cols;
  cols.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const bool binary = binary_from >= 0 && j >= binary_from;
    cols.push_back({"x" + std::to_string(j + 1), binary ? ColumnKind::Binary : ColumnKind::Continuous, j});
  }
  return cols;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error("non-numeric cell '" + cell + "' in column " + column + " at line " +
                std::to_string(line_no));
  }
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  RawTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty file: " + path);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    require(cells.size() == table.header.size(),
            "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                " cells, expected " + std::to_string(table.header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_number(cells[c], line_no, table.header[c]);
    table.rows.push_back(std::move(values));
  }
  return table;
}

std::size_t find_column(const RawTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return c;
  throw Error("missing column: " + name);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  const RawTable table = read_table(path);
  const std::size_t trt_col = find_column(table, schema.treatment);
  const std::size_t y_col = find_column(table, schema.outcome);
  std::vector<std::size_t> cov_cols;
  for (const auto& meta : schema.covariates) cov_cols.push_back(find_column(table, meta.name));

  Dataset d;
  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(cov_cols.size());
  d.columns = schema.covariates;
  for (std::size_t j = 0; j < d.columns.size(); ++j) d.columns[j].index = static_cast<int>(j);
  d.X.resize(n, p);
  d.Y.resize(n);
  d.T.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) d.X(i, j) = row[cov_cols[static_cast<std::size_t>(j)]];
    const double t = row[trt_col];
    require(t == 0.0 || t == 1.0, "treatment not binary at data row " + std::to_string(i + 1));
    d.T[static_cast<std::size_t>(i)] = static_cast<int>(t);
    d.Y(i) = row[y_col];
  }
  d.validate();
  return d;
}

CsvSchema infer_schema(const std::string& path, const std::string& treatment, const std::string& outcome) {
  const RawTable table = read_table(path);
  find_column(table, treatment);
  find_column(table, outcome);
  CsvSchema schema{{}, treatment, outcome};
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (name == treatment || name == outcome) continue;
    bool binary = !table.rows.empty();
    for (const auto& row : table.rows) binary = binary && (row[c] == 0.0 || row[c] == 1.0);
    schema.covariates.push_back({name, binary ? ColumnKind::Binary : ColumnKind::Continuous,
                                 static_cast<int>(schema.covariates.size())});
  }
  return schema;
}

namespace {
void put_double(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}
}  // namespace

void write_csv(const Dataset& d, const std::string& path, const std::string& treatment,
               const std::string& outcome) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path);
  for (const auto& c : d.columns) out << c.name << ',';
  out << treatment << ',' << outcome << '\n';
  for (Index i = 0; i < d.rows(); ++i) {
    for (Index j = 0; j < d.cols(); ++j) {
      put_double(out, d.X(i, j));
      out << ',';
    }
    out << d.T[static_cast<std::size_t>(i)] << ',';
    put_double(out, d.Y(i));
    out << '\n';
  }
  require(static_cast<bool>(out), "write failed: " + path);
}

std::pair<std::vector<int>, std::vector<int>> arm_rows(const std::vector<int>& T) {
  std::vector<int> control, treated;
  for (std::size_t i = 0; i < T.size(); ++i) (T[i] == 1 ? treated : control).push_back(static_cast<int>(i));
  return {control, treated};
}

std::pair<Dataset, Dataset> split_by_arm(const Dataset& d) {
  auto [control, treated] = arm_rows(d.T);
  require(!control.empty(), "control arm is empty");
  require(!treated.empty(), "treated arm is empty");
  return {d.subset(control), d.subset(treated)};
}

StandardizationParams standardize_fit(const Matrix& X, const std::vector<ColumnKind>& kinds) {
  const Index p = X.cols();
  const auto n = static_cast<double>(X.rows());
  StandardizationParams params;
  params.means = Vector::Zero(p);
  params.scales = Vector::Ones(p);
  params.constant.assign(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    const bool binary = !kinds.empty() && kinds[static_cast<std::size_t>(j)] == ColumnKind::Binary;
    const double mean = X.rows() > 0 ? X.col(j).mean() : 0.0;
    const double var = X.rows() > 0 ? (X.col(j).array() - mean).square().sum() / n : 0.0;
    if (var <= 0.0) params.constant[static_cast<std::size_t>(j)] = true;
    if (binary) continue;
    if (var > 0.0) {
      params.means(j) = mean;
      params.scales(j) = std::sqrt(var);
    }
  }
  return params;
}

Matrix standardize_apply(const StandardizationParams& params, const Matrix& X) {
  require(X.cols() == params.means.size(), "standardize_apply: column count mismatch");
  Matrix out = X;
  for (Index j = 0; j < X.cols(); ++j) {
    if (params.constant[static_cast<std::size_t>(j)]) continue;
    out.col(j) = (X.col(j).array() - params.means(j)) / params.scales(j);
  }
  return out;
}

}  // namespace vtwins
