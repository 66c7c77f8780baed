#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace bae {

/// Empty cells (std::monostate) mark values a failed sweep cell could not produce.
using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

struct Column {
  std::string name;
  std::string unit;
};

struct Axis {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

/// Tables are row lists. Matrices are stored long-form: one row per cell,
/// with the two axis values first, in row-major order.
struct DataProduct {
  enum class Kind { table, matrix };

  Kind kind = Kind::table;
  std::string experiment;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<Axis> axes;
  std::map<std::string, nlohmann::json> provenance;

  void add_row(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

}  // namespace bae
