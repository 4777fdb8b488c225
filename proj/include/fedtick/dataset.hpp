#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedtick/errors.hpp"

namespace fedtick {

// In-memory classification dataset: dense feature rows plus integer labels.
struct Dataset {
  std::vector<double> features;  // rows x n_features, row-major
  std::vector<int> labels;
  int n_rows = 0;
  int n_features = 0;
  int n_classes = 0;

  const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * n_features; }
};

namespace detail {
inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  if (line.find(',') != std::string::npos) {
    while (std::getline(ss, field, ',')) out.push_back(field);
  } else {
    while (ss >> field) out.push_back(field);
  }
  return out;
}
}  // namespace detail

// Columnar text ingestion. First line is a header naming the columns; every
// following line holds the feature values as decimals with the class label as
// the final integer column. Comma- or whitespace-separated.
inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("load_dataset: '" + path + "' is empty");
  const auto header = detail::split_fields(line);
  if (header.size() < 2)
    throw ConfigError("load_dataset: header must name at least one feature and the label column");
  Dataset ds;
  ds.n_features = static_cast<int>(header.size()) - 1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (static_cast<int>(fields.size()) != ds.n_features + 1)
      throw ConfigError("load_dataset: line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " columns, expected " +
                        std::to_string(ds.n_features + 1));
    try {
      for (int f = 0; f < ds.n_features; ++f)
        ds.features.push_back(std::stod(fields[static_cast<std::size_t>(f)]));
      const int label = std::stoi(fields.back());
      if (label < 0) throw ConfigError("load_dataset: negative class label at line " + std::to_string(line_no));
      ds.labels.push_back(label);
    } catch (const std::invalid_argument&) {
      throw ConfigError("load_dataset: unparseable value at line " + std::to_string(line_no));
    }
    ++ds.n_rows;
  }
  if (ds.n_rows == 0) throw ConfigError("load_dataset: '" + path + "' has no data rows");
  ds.n_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

}  // namespace fedtick
