#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radf/matrix.hpp"

namespace radf::data {

enum class Task { Regression, Classification };

Task task_from_name(const std::string& name);
std::string task_name(Task task);

// Tabular dataset. Regression targets are an N x F matrix; classification
// targets are class indices with the label strings kept in first-appearance
// order. Immutable after ingestion.
struct Dataset {
  Task task = Task::Regression;
  Matrix features;                           // N x M
  Matrix target_values;                      // N x F (regression)
  std::vector<std::size_t> target_classes;   // N (classification)
  std::vector<std::string> feature_names;    // M
  std::vector<std::string> class_labels;     // label index -> string

  std::size_t size() const { return features.rows; }
  std::size_t feature_count() const { return features.cols; }
  // Width of the response a model must produce: F or the class count.
  std::size_t response_width() const {
    return task == Task::Regression ? target_values.cols : class_labels.size();
  }
};

enum class MissingPolicy {
  Error,     // empty feature cell is a hard error
  AllowNan,  // empty feature cell becomes NaN, to be imputed after splitting
};

// Parses a comma-separated UTF-8 file: first row is the header, one target
// column, every other column a numeric feature. Classification targets may be
// arbitrary strings and are mapped to indices by first appearance.
Dataset load_csv(const std::string& path, const std::string& target_column,
                 Task task, MissingPolicy missing = MissingPolicy::Error);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

// Seeded permutation then contiguous cut: floor(N*train), floor(N*val),
// remainder. Throws if any split would be empty.
std::array<Dataset, 3> split_dataset(const Dataset& ds, SplitFractions fractions,
                                     std::uint64_t seed);

// Per-feature mean and population standard deviation (divisor N), computed on
// the training split only. Constant features get stdev 1.
struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stdev;
};

StandardizationStats compute_standardization(const Dataset& train);
void apply_standardization(const StandardizationStats& stats, Dataset& ds);

// Computes stats from `train`, transforms `train` and every dataset in
// `others` in place as (x - mean) / stdev.
StandardizationStats standardize(Dataset& train, const std::vector<Dataset*>& others);

// Replaces NaN feature cells with the train-split mean of the finite values
// of that feature (0 if a train feature is entirely missing).
void impute_missing(Dataset& train, const std::vector<Dataset*>& others);

// Row-index batches for one epoch: seeded shuffle keyed by (seed, epoch),
// final partial batch kept.
std::vector<std::vector<std::size_t>> batches(const Dataset& ds,
                                              std::size_t batch_size,
                                              std::uint64_t seed,
                                              std::size_t epoch);

// Header plus raw string cells, for callers that select columns by name
// (prediction against a trained model's schema).
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column, or header.size() if absent.
  std::size_t column(const std::string& name) const;
};

RawCsv read_raw_csv(const std::string& path);

// Parses one raw cell as a number; errors carry the 1-based data row and the
// column name.
double parse_csv_number(const std::string& cell, std::size_t row,
                        const std::string& column);

}  // namespace radf::data
