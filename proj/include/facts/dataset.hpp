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

#ifndef FACTS_DATASET_HPP_
#define FACTS_DATASET_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facts/graph.hpp"

namespace facts {

enum class ColumnType { Binary, Categorical, Continuous };

std::string to_string(ColumnType type);

struct ColumnSchema {
  std::string name;
  ColumnType type = ColumnType::Continuous;
};

// Columnar table. Categorical cells are stored as level indices; the level
// strings (in order of first appearance) are kept per column. Rows with
// missing cells are dropped at ingestion and counted.
class Dataset {
 public:
  // Schema sidecar: one `column:type` per line, '#' comments.
  static std::vector<ColumnSchema> parse_schema(const std::string& text);
  static std::vector<ColumnSchema> parse_schema_file(const std::string& path);

  static Dataset load_csv(const std::string& path,
                          const std::vector<ColumnSchema>& schema);
  static Dataset from_csv_text(const std::string& text,
                               const std::vector<ColumnSchema>& schema);
  static Dataset from_columns(std::vector<ColumnSchema> schema,
                              std::vector<std::vector<double>> columns,
                              std::vector<std::vector<std::string>> levels = {});

  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(schema_.size()); }
  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& schema(int col) const { return schema_.at(col); }
  int column_index(const std::string& name) const;  // -1 when absent

  double value(int row, int col) const { return columns_[col][row]; }
  const std::vector<double>& column(int col) const { return columns_.at(col); }
  const std::vector<std::string>& levels(int col) const { return levels_.at(col); }
  // Number of discrete levels: 2 for binary, level count for categorical,
  // 0 for continuous.
  int level_count(int col) const;

  std::size_t dropped_rows() const { return dropped_rows_; }

  void set_sensitive(const std::string& name);
  void set_outcome(const std::string& name);
  int sensitive_col() const { return sensitive_col_; }
  int outcome_col() const { return outcome_col_; }

  std::string to_csv() const;
  std::string schema_text() const;

  Dataset subset(const std::vector<int>& row_ids) const;

 private:
  std::vector<ColumnSchema> schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::string>> levels_;
  int rows_ = 0;
  std::size_t dropped_rows_ = 0;
  int sensitive_col_ = -1;
  int outcome_col_ = -1;
};

// Maps an ordered list of dataset columns to a numeric vector: continuous and
// binary columns map to one slot, categorical columns to a one-hot block.
// encode/decode are mutually inverse on observed values.
class Encoding {
 public:
  Encoding() = default;
  Encoding(const Dataset& data, std::vector<int> columns);

  int dim() const { return dim_; }
  const std::vector<int>& columns() const { return columns_; }

  Eigen::VectorXd encode(const std::vector<double>& raw) const;
  Eigen::VectorXd encode_row(const Dataset& data, int row) const;
  std::vector<double> decode(const Eigen::VectorXd& encoded) const;

 private:
  std::vector<int> columns_;
  std::vector<int> offsets_;
  std::vector<int> widths_;
  int dim_ = 0;
};

}  // namespace facts

#endif  // FACTS_DATASET_HPP_
