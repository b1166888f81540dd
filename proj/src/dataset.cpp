// Copyright 2026 The facts Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "facts/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace facts {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string format_double(double v) {
  char buf[40];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
  }
  return buf;
}

}  // namespace

std::string to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Binary: return "binary";
    case ColumnType::Categorical: return "categorical";
    case ColumnType::Continuous: return "continuous";
  }
  return "?";
}

std::vector<ColumnSchema> Dataset::parse_schema(const std::string& text) {
  std::vector<ColumnSchema> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw Error("E_SCHEMA", "line " + std::to_string(line_no) +
                                  ": expected 'column:type'");
    ColumnSchema cs;
    cs.name = trim(line.substr(0, colon));
    std::string type = trim(line.substr(colon + 1));
    if (type == "binary") cs.type = ColumnType::Binary;
    else if (type == "categorical") cs.type = ColumnType::Categorical;
    else if (type == "continuous") cs.type = ColumnType::Continuous;
    else
      throw Error("E_SCHEMA", "unknown column type '" + type + "'");
    out.push_back(cs);
  }
  if (out.empty()) throw Error("E_SCHEMA", "empty schema");
  return out;
}

std::vector<ColumnSchema> Dataset::parse_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("E_SCHEMA", "cannot open schema file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

Dataset Dataset::load_csv(const std::string& path,
                          const std::vector<ColumnSchema>& schema) {
  std::ifstream in(path);
  if (!in) throw Error("E_DATA", "cannot open data file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_csv_text(ss.str(), schema);
}

Dataset Dataset::from_csv_text(const std::string& text,
                               const std::vector<ColumnSchema>& schema) {
  Dataset d;
  d.schema_ = schema;
  d.columns_.assign(schema.size(), {});
  d.levels_.assign(schema.size(), {});
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (schema[c].type == ColumnType::Binary) d.levels_[c] = {"0", "1"};

  std::istringstream in(text);
  std::string line;
  // Leading '#' lines carry provenance comments.
  do {
    if (!std::getline(in, line)) throw Error("E_DATA", "empty data file");
  } while (!trim(line).empty() && trim(line)[0] == '#');
  std::vector<std::string> header = split_csv_line(line);
  std::vector<int> col_of(schema.size(), -1);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), schema[c].name);
    if (it == header.end())
      throw Error("E_DATA", "column '" + schema[c].name + "' missing from header");
    col_of[c] = static_cast<int>(it - header.begin());
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    bool missing = false;
    std::vector<double> row(schema.size());
    for (std::size_t c = 0; c < schema.size() && !missing; ++c) {
      if (col_of[c] >= static_cast<int>(cells.size())) { missing = true; break; }
      const std::string& cell = cells[col_of[c]];
      if (cell.empty()) { missing = true; break; }
      switch (schema[c].type) {
        case ColumnType::Binary: {
          if (cell == "0") row[c] = 0;
          else if (cell == "1") row[c] = 1;
          else
            throw Error("E_DATA", "line " + std::to_string(line_no) +
                                      ": binary column '" + schema[c].name +
                                      "' has value '" + cell + "'");
          break;
        }
        case ColumnType::Categorical: {
          auto& levels = d.levels_[c];
          auto it = std::find(levels.begin(), levels.end(), cell);
          if (it == levels.end()) {
            levels.push_back(cell);
            row[c] = static_cast<double>(levels.size() - 1);
          } else {
            row[c] = static_cast<double>(it - levels.begin());
          }
          break;
        }
        case ColumnType::Continuous: {
          char* end = nullptr;
          row[c] = std::strtod(cell.c_str(), &end);
          if (end == cell.c_str() || *end != '\0')
            throw Error("E_DATA", "line " + std::to_string(line_no) +
                                      ": continuous column '" + schema[c].name +
                                      "' has value '" + cell + "'");
          break;
        }
      }
    }
    if (missing) {
      ++d.dropped_rows_;
      continue;
    }
    for (std::size_t c = 0; c < schema.size(); ++c)
      d.columns_[c].push_back(row[c]);
    ++d.rows_;
  }
  if (d.rows_ == 0) throw Error("E_DATA", "no usable rows in data file");
  return d;
}

Dataset Dataset::from_columns(std::vector<ColumnSchema> schema,
                              std::vector<std::vector<double>> columns,
                              std::vector<std::vector<std::string>> levels) {
  if (schema.size() != columns.size())
    throw Error("E_DATA", "schema/column count mismatch");
  Dataset d;
  d.schema_ = std::move(schema);
  d.columns_ = std::move(columns);
  d.rows_ = d.columns_.empty() ? 0 : static_cast<int>(d.columns_[0].size());
  for (const auto& col : d.columns_)
    if (static_cast<int>(col.size()) != d.rows_)
      throw Error("E_DATA", "ragged columns");
  if (levels.empty()) levels.resize(d.schema_.size());
  d.levels_ = std::move(levels);
  for (std::size_t c = 0; c < d.schema_.size(); ++c) {
    if (d.schema_[c].type == ColumnType::Binary && d.levels_[c].empty())
      d.levels_[c] = {"0", "1"};
    if (d.schema_[c].type == ColumnType::Categorical && d.levels_[c].empty())
      throw Error("E_DATA", "categorical column '" + d.schema_[c].name +
                                "' needs level names");
  }
  return d;
}

int Dataset::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < schema_.size(); ++c)
    if (schema_[c].name == name) return static_cast<int>(c);
  return -1;
}

int Dataset::level_count(int col) const {
  switch (schema_.at(col).type) {
    case ColumnType::Binary: return 2;
    case ColumnType::Categorical: return static_cast<int>(levels_[col].size());
    case ColumnType::Continuous: return 0;
  }
  return 0;
}

void Dataset::set_sensitive(const std::string& name) {
  int col = column_index(name);
  if (col < 0) throw Error("E_DATA", "sensitive column '" + name + "' not found");
  for (double v : columns_[col])
    if (v != 0.0 && v != 1.0)
      throw Error("E_DATA", "sensitive column '" + name + "' is not binary 0/1");
  sensitive_col_ = col;
}

void Dataset::set_outcome(const std::string& name) {
  int col = column_index(name);
  if (col < 0) throw Error("E_OUTCOME", "outcome column '" + name + "' not found");
  for (double v : columns_[col])
    if (v != 0.0 && v != 1.0)
      throw Error("E_OUTCOME", "outcome column '" + name + "' is not binary 0/1");
  outcome_col_ = col;
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < schema_.size(); ++c)
    out << (c ? "," : "") << schema_[c].name;
  out << "\n";
  for (int r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      if (c) out << ",";
      if (schema_[c].type == ColumnType::Categorical)
        out << levels_[c][static_cast<int>(columns_[c][r])];
      else
        out << format_double(columns_[c][r]);
    }
    out << "\n";
  }
  return out.str();
}

std::string Dataset::schema_text() const {
  std::ostringstream out;
  for (const auto& cs : schema_)
    out << cs.name << ":" << to_string(cs.type) << "\n";
  return out.str();
}

Dataset Dataset::subset(const std::vector<int>& row_ids) const {
  Dataset d = *this;
  d.rows_ = static_cast<int>(row_ids.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    d.columns_[c].clear();
    d.columns_[c].reserve(row_ids.size());
    for (int r : row_ids) d.columns_[c].push_back(columns_[c][r]);
  }
  return d;
}

Encoding::Encoding(const Dataset& data, std::vector<int> columns)
    : columns_(std::move(columns)) {
  for (int col : columns_) {
    int width = data.schema(col).type == ColumnType::Categorical
                    ? data.level_count(col)
                    : 1;
    offsets_.push_back(dim_);
    widths_.push_back(width);
    dim_ += width;
  }
}

Eigen::VectorXd Encoding::encode(const std::vector<double>& raw) const {
  if (raw.size() != columns_.size())
    throw Error("E_ENCODING", "raw value count mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (widths_[i] == 1) {
      out[offsets_[i]] = raw[i];
    } else {
      int level = static_cast<int>(raw[i]);
      if (level < 0 || level >= widths_[i])
        throw Error("E_ENCODING", "categorical level out of range");
      out[offsets_[i] + level] = 1.0;
    }
  }
  return out;
}

Eigen::VectorXd Encoding::encode_row(const Dataset& data, int row) const {
  std::vector<double> raw(columns_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i)
    raw[i] = data.value(row, columns_[i]);
  return encode(raw);
}

std::vector<double> Encoding::decode(const Eigen::VectorXd& encoded) const {
  if (encoded.size() != dim_) throw Error("E_ENCODING", "dimension mismatch");
  std::vector<double> raw(columns_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (widths_[i] == 1) {
      raw[i] = encoded[offsets_[i]];
    } else {
      int best = 0;
      for (int k = 1; k < widths_[i]; ++k)
        if (encoded[offsets_[i] + k] > encoded[offsets_[i] + best]) best = k;
      raw[i] = best;
    }
  }
  return raw;
}

}  // namespace facts
