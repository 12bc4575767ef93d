#include "radf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "radf/error.hpp"

namespace radf::data {

Task task_from_name(const std::string& name) {
  if (name == "regression") return Task::Regression;
  if (name == "classification") return Task::Classification;
  throw std::invalid_argument("unknown task: " + name);
}

std::string task_name(Task task) {
  return task == Task::Regression ? "regression" : "classification";
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& cell, std::size_t row,
                    const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("cannot parse numeric cell '" + cell + "' at row " +
                    std::to_string(row) + ", column '" + column + "'");
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column,
                 Task task, MissingPolicy missing) {
  std::ifstream file(path);
  if (!file) {
    throw DataError("cannot open file: " + path);
  }

  std::string line;
  if (!std::getline(file, line)) {
    throw DataError("empty file: " + path);
  }
  const auto header = split_line(line);
  std::vector<std::string> names;
  names.reserve(header.size());
  for (const auto& h : header) names.push_back(trim(h));

  std::size_t target_index = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == target_column) {
      target_index = i;
      break;
    }
  }
  if (target_index == names.size()) {
    throw DataError("target column '" + target_column + "' not found in header");
  }

  Dataset ds;
  ds.task = task;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i != target_index) ds.feature_names.push_back(names[i]);
  }
  const std::size_t feature_count = ds.feature_names.size();
  if (feature_count == 0) {
    throw DataError("no feature columns in " + path);
  }

  std::vector<double> feature_cells;
  std::vector<double> regression_targets;
  std::unordered_map<std::string, std::size_t> label_index;
  std::size_t row = 0;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != names.size()) {
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(names.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string cell = trim(cells[i]);
      if (i == target_index) {
        if (cell.empty()) {
          throw DataError("missing target at row " + std::to_string(row));
        }
        if (task == Task::Regression) {
          regression_targets.push_back(parse_number(cell, row, names[i]));
        } else {
          const auto [it, inserted] =
              label_index.try_emplace(cell, ds.class_labels.size());
          if (inserted) ds.class_labels.push_back(cell);
          ds.target_classes.push_back(it->second);
        }
      } else {
        if (cell.empty()) {
          if (missing == MissingPolicy::Error) {
            throw DataError("missing value at row " + std::to_string(row) +
                            ", column '" + names[i] + "'");
          }
          feature_cells.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          const double v = parse_number(cell, row, names[i]);
          if (!std::isfinite(v)) {
            throw DataError("non-finite value at row " + std::to_string(row) +
                            ", column '" + names[i] + "'");
          }
          feature_cells.push_back(v);
        }
      }
    }
  }
  if (row == 0) {
    throw DataError("no data rows in " + path);
  }

  ds.features = Matrix(row, feature_count);
  ds.features.data = std::move(feature_cells);
  if (task == Task::Regression) {
    ds.target_values = Matrix(row, 1);
    ds.target_values.data = std::move(regression_targets);
  }
  return ds;
}

namespace {

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.task = ds.task;
  out.feature_names = ds.feature_names;
  out.class_labels = ds.class_labels;
  out.features = Matrix(rows.size(), ds.feature_count());
  if (ds.task == Task::Regression) {
    out.target_values = Matrix(rows.size(), ds.target_values.cols);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    std::copy(ds.features.row(src).begin(), ds.features.row(src).end(),
              out.features.row(r).begin());
    if (ds.task == Task::Regression) {
      std::copy(ds.target_values.row(src).begin(), ds.target_values.row(src).end(),
                out.target_values.row(r).begin());
    } else {
      out.target_classes.push_back(ds.target_classes[src]);
    }
  }
  return out;
}

}  // namespace

std::array<Dataset, 3> split_dataset(const Dataset& ds, SplitFractions fractions,
                                     std::uint64_t seed) {
  if (!(fractions.train > 0.0 && fractions.val > 0.0 && fractions.test > 0.0)) {
    throw std::invalid_argument("split_dataset: fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  }
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * fractions.train));
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * fractions.val));
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw DataError("split_dataset: a split would be empty (N=" +
                    std::to_string(n) + ")");
  }

  std::span<const std::size_t> all(order);
  return {take_rows(ds, all.subspan(0, n_train)),
          take_rows(ds, all.subspan(n_train, n_val)),
          take_rows(ds, all.subspan(n_train + n_val, n_test))};
}

StandardizationStats compute_standardization(const Dataset& train) {
  if (train.size() == 0) {
    throw std::invalid_argument("compute_standardization: empty training set");
  }
  const std::size_t m = train.feature_count();
  const double n = static_cast<double>(train.size());
  StandardizationStats stats;
  stats.mean.assign(m, 0.0);
  stats.stdev.assign(m, 0.0);
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto row = train.features.row(r);
    for (std::size_t c = 0; c < m; ++c) stats.mean[c] += row[c];
  }
  for (double& v : stats.mean) v /= n;
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto row = train.features.row(r);
    for (std::size_t c = 0; c < m; ++c) {
      const double d = row[c] - stats.mean[c];
      stats.stdev[c] += d * d;
    }
  }
  for (double& v : stats.stdev) {
    v = std::sqrt(v / n);  // population standard deviation
    if (v < 1e-12) v = 1.0;
  }
  return stats;
}

void apply_standardization(const StandardizationStats& stats, Dataset& ds) {
  if (stats.mean.size() != ds.feature_count()) {
    throw std::invalid_argument("apply_standardization: feature count mismatch");
  }
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto row = ds.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = (row[c] - stats.mean[c]) / stats.stdev[c];
    }
  }
}

StandardizationStats standardize(Dataset& train, const std::vector<Dataset*>& others) {
  const auto stats = compute_standardization(train);
  apply_standardization(stats, train);
  for (Dataset* ds : others) apply_standardization(stats, *ds);
  return stats;
}

void impute_missing(Dataset& train, const std::vector<Dataset*>& others) {
  const std::size_t m = train.feature_count();
  std::vector<double> mean(m, 0.0);
  std::vector<std::size_t> finite(m, 0);
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto row = train.features.row(r);
    for (std::size_t c = 0; c < m; ++c) {
      if (std::isfinite(row[c])) {
        mean[c] += row[c];
        ++finite[c];
      }
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    mean[c] = finite[c] > 0 ? mean[c] / static_cast<double>(finite[c]) : 0.0;
  }
  auto fill = [&](Dataset& ds) {
    for (std::size_t r = 0; r < ds.size(); ++r) {
      auto row = ds.features.row(r);
      for (std::size_t c = 0; c < m; ++c) {
        if (!std::isfinite(row[c])) row[c] = mean[c];
      }
    }
  };
  fill(train);
  for (Dataset* ds : others) fill(*ds);
}

std::size_t RawCsv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return header.size();
}

RawCsv read_raw_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw DataError("cannot open file: " + path);
  }
  std::string line;
  if (!std::getline(file, line)) {
    throw DataError("empty file: " + path);
  }
  RawCsv csv;
  for (const auto& cell : split_line(line)) csv.header.push_back(trim(cell));
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != csv.header.size()) {
      throw DataError("row " + std::to_string(csv.rows.size() + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(csv.header.size()));
    }
    for (auto& cell : cells) cell = trim(cell);
    csv.rows.push_back(std::move(cells));
  }
  if (csv.rows.empty()) {
    throw DataError("no data rows in " + path);
  }
  return csv;
}

double parse_csv_number(const std::string& cell, std::size_t row,
                        const std::string& column) {
  return parse_number(cell, row, column);
}

std::vector<std::vector<std::size_t>> batches(const Dataset& ds,
                                              std::size_t batch_size,
                                              std::uint64_t seed,
                                              std::size_t epoch) {
  if (batch_size == 0) {
    throw std::invalid_argument("batches: batch size must be positive");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{seed, static_cast<std::uint64_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace radf::data
