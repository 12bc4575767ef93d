#include "radf/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "radf/error.hpp"

namespace radf::cli {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

using nlohmann::json;

std::string quote(const std::string& s) { return json(s).dump(); }

void write_numbers(std::ostream& out, std::span<const double> values) {
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ", ";
    out << format_double(values[i]);
  }
  out << ']';
}

void write_strings(std::ostream& out, const std::vector<std::string>& values) {
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ", ";
    out << quote(values[i]);
  }
  out << ']';
}

void write_rows(std::ostream& out, const Matrix& m, const char* indent) {
  out << "[\n";
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << indent << "  ";
    write_numbers(out, m.row(r));
    out << (r + 1 < m.rows ? ",\n" : "\n");
  }
  out << indent << ']';
}

// --- load-side helpers: every structural error names its key path ---

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError("model file: missing key " + path + "." + key);
  }
  return obj.at(key);
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw DataError("model file: expected number at " + path);
  }
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) {
    throw DataError("model file: expected string at " + path);
  }
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) {
    throw DataError("model file: expected array at " + path);
  }
  return v;
}

std::vector<double> as_doubles(const json& v, const std::string& path) {
  std::vector<double> out;
  for (const auto& e : as_array(v, path)) {
    out.push_back(as_double(e, path + "[" + std::to_string(out.size()) + "]"));
  }
  return out;
}

std::vector<std::string> as_strings(const json& v, const std::string& path) {
  std::vector<std::string> out;
  for (const auto& e : as_array(v, path)) {
    out.push_back(as_string(e, path + "[" + std::to_string(out.size()) + "]"));
  }
  return out;
}

Matrix as_matrix(const json& v, std::size_t rows, std::size_t cols,
                 const std::string& path) {
  const auto& arr = as_array(v, path);
  if (arr.size() != rows) {
    throw DataError("model file: expected " + std::to_string(rows) +
                    " rows at " + path);
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    const auto row = as_doubles(arr.at(r), row_path);
    if (row.size() != cols) {
      throw DataError("model file: expected " + std::to_string(cols) +
                      " values at " + row_path);
    }
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

std::string serialize_model(const ModelFile& model) {
  const auto& forest = model.forest;
  if (forest.trees.empty()) {
    throw std::invalid_argument("serialize_model: empty forest");
  }
  const double temperature = forest.trees.front().temperature;
  for (const auto& tree : forest.trees) {
    if (tree.temperature != temperature) {
      throw std::invalid_argument("serialize_model: non-uniform temperature");
    }
  }

  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << model.format_version << ",\n";
  out << "  \"task\": " << quote(data::task_name(model.task)) << ",\n";
  out << "  \"loss\": " << quote(numerics::loss_kind_name(model.loss)) << ",\n";
  out << "  \"trees\": " << forest.tree_count() << ",\n";
  out << "  \"depth\": " << forest.topology.depth << ",\n";
  out << "  \"features\": " << forest.feature_count << ",\n";
  out << "  \"response_width\": " << forest.response_width << ",\n";
  out << "  \"temperature\": " << format_double(temperature) << ",\n";
  out << "  \"target_column\": " << quote(model.target_column) << ",\n";
  out << "  \"feature_names\": ";
  write_strings(out, model.feature_names);
  out << ",\n";
  out << "  \"standardization\": {\n    \"mean\": ";
  write_numbers(out, model.stats.mean);
  out << ",\n    \"stdev\": ";
  write_numbers(out, model.stats.stdev);
  out << "\n  },\n";
  out << "  \"class_labels\": ";
  write_strings(out, model.class_labels);
  out << ",\n";
  out << "  \"gates\": [\n";
  for (std::size_t h = 0; h < forest.tree_count(); ++h) {
    const auto& tree = forest.trees[h];
    out << "    {\n      \"weights\": ";
    write_rows(out, tree.weights, "      ");
    out << ",\n      \"thresholds\": ";
    write_numbers(out, tree.thresholds);
    out << "\n    }" << (h + 1 < forest.tree_count() ? ",\n" : "\n");
  }
  out << "  ],\n";
  out << "  \"bank\": ";
  write_rows(out, model.bank.cells, "  ");
  out << "\n}\n";
  return out.str();
}

void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw DataError("cannot open model file for writing: " + path);
  }
  file << serialize_model(model);
  if (!file) {
    throw DataError("failed writing model file: " + path);
  }
}

ModelFile parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file: malformed document: ") + e.what());
  }
  const std::string root = "$";

  ModelFile model;
  const auto version = require(doc, "format_version", root);
  if (!version.is_number_integer() ||
      version.get<int>() != kModelFormatVersion) {
    throw DataError("model file: unsupported format_version " + version.dump() +
                    " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  model.task = data::task_from_name(as_string(require(doc, "task", root), "$.task"));
  model.loss = numerics::loss_kind_from_name(
      as_string(require(doc, "loss", root), "$.loss"));

  const auto tree_count =
      static_cast<std::size_t>(as_double(require(doc, "trees", root), "$.trees"));
  const int depth =
      static_cast<int>(as_double(require(doc, "depth", root), "$.depth"));
  const auto feature_count = static_cast<std::size_t>(
      as_double(require(doc, "features", root), "$.features"));
  const auto response_width = static_cast<std::size_t>(
      as_double(require(doc, "response_width", root), "$.response_width"));
  if (tree_count == 0 || depth < 1 || feature_count == 0 || response_width == 0) {
    throw DataError("model file: invalid shape fields");
  }
  const double temperature =
      as_double(require(doc, "temperature", root), "$.temperature");
  if (!(temperature > 0.0)) {
    throw DataError("model file: temperature must be positive at $.temperature");
  }

  model.target_column =
      as_string(require(doc, "target_column", root), "$.target_column");
  model.feature_names =
      as_strings(require(doc, "feature_names", root), "$.feature_names");
  if (model.feature_names.size() != feature_count) {
    throw DataError("model file: feature_names size mismatch at $.feature_names");
  }

  const auto& std_block = require(doc, "standardization", root);
  model.stats.mean = as_doubles(require(std_block, "mean", "$.standardization"),
                                "$.standardization.mean");
  model.stats.stdev = as_doubles(require(std_block, "stdev", "$.standardization"),
                                 "$.standardization.stdev");
  if (model.stats.mean.size() != feature_count ||
      model.stats.stdev.size() != feature_count) {
    throw DataError("model file: standardization size mismatch at $.standardization");
  }

  model.class_labels =
      as_strings(require(doc, "class_labels", root), "$.class_labels");
  if (model.task == data::Task::Classification &&
      model.class_labels.size() != response_width) {
    throw DataError("model file: class_labels size mismatch at $.class_labels");
  }

  model.forest.topology.depth = depth;
  model.forest.feature_count = feature_count;
  model.forest.response_width = response_width;
  const std::size_t internal = model.forest.topology.internal_count();
  const auto& gates = as_array(require(doc, "gates", root), "$.gates");
  if (gates.size() != tree_count) {
    throw DataError("model file: expected " + std::to_string(tree_count) +
                    " trees at $.gates");
  }
  for (std::size_t h = 0; h < tree_count; ++h) {
    const std::string path = "$.gates[" + std::to_string(h) + "]";
    forest::GateParams tree;
    tree.weights = as_matrix(require(gates.at(h), "weights", path), internal,
                             feature_count, path + ".weights");
    tree.thresholds =
        as_doubles(require(gates.at(h), "thresholds", path), path + ".thresholds");
    if (tree.thresholds.size() != internal) {
      throw DataError("model file: expected " + std::to_string(internal) +
                      " thresholds at " + path + ".thresholds");
    }
    tree.temperature = temperature;
    model.forest.trees.push_back(std::move(tree));
  }

  model.bank.cells =
      as_matrix(require(doc, "bank", root),
                tree_count * model.forest.topology.leaf_count(), response_width,
                "$.bank");
  return model;
}

ModelFile load_model(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw DataError("cannot open model file: " + path);
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace radf::cli
