#pragma once

#include <string>
#include <vector>

#include "radf/data.hpp"
#include "radf/forest.hpp"
#include "radf/memory.hpp"
#include "radf/numerics.hpp"

namespace radf::cli {

inline constexpr int kModelFormatVersion = 1;

// Self-contained trained model: everything prediction needs, nothing else.
// Persisted as a human-readable JSON document with fixed key order and
// 17-significant-digit reals, so save -> load -> save is byte identical and
// doubles survive bit exactly.
struct ModelFile {
  int format_version = kModelFormatVersion;
  data::Task task = data::Task::Regression;
  numerics::LossKind loss = numerics::LossKind::MSE;
  std::string target_column;
  std::vector<std::string> feature_names;
  data::StandardizationStats stats;
  std::vector<std::string> class_labels;  // classification only
  forest::ForestParams forest;            // carries the gate temperature
  memory::ResponseBank bank;
};

// Shortest-width decimal rendering at 17 significant digits ("%.17g"); parses
// back to the identical double.
std::string format_double(double value);

std::string serialize_model(const ModelFile& model);
void save_model(const ModelFile& model, const std::string& path);

// Throws DataError on version mismatch or malformed documents; structural
// messages carry the offending key path.
ModelFile parse_model(const std::string& text);
ModelFile load_model(const std::string& path);

}  // namespace radf::cli
