#include "radf/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "radf/data.hpp"
#include "radf/error.hpp"
#include "radf/forest.hpp"
#include "radf/gradcheck.hpp"
#include "radf/memory.hpp"
#include "radf/model_io.hpp"
#include "radf/training.hpp"

namespace radf::cli {

namespace {

// Sub-seeds derived from --seed: gate init s, bank init s+1, shuffling s+2,
// dataset split s+3.
struct TrainArgs {
  std::string data_path;
  std::string target;
  std::string task_name;
  std::size_t trees = 8;
  int depth = 4;
  double lr = 0.05;
  std::size_t batch = 32;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  std::string optimizer = "adam";
  double decay = 0.0;
  double temperature = 1.0;
  std::uint64_t seed = 1;
  std::string out_path = "model.json";
  std::string split = "0.7,0.15,0.15";
  bool impute = false;
};

struct PredictArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;  // stdout when empty
};

struct EvalArgs {
  std::string model_path;
  std::string data_path;
  std::string metric;
};

struct GradcheckArgs {
  std::uint64_t seed = 1;
  std::size_t cases = 50;
  bool inject_error = false;
};

data::SplitFractions parse_split(const std::string& text) {
  data::SplitFractions fractions;
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> parts;
  while (std::getline(ss, cell, ',')) {
    try {
      parts.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::invalid_argument("--split: cannot parse '" + cell + "'");
    }
  }
  if (parts.size() != 3) {
    throw std::invalid_argument("--split expects three comma-separated fractions");
  }
  fractions.train = parts[0];
  fractions.val = parts[1];
  fractions.test = parts[2];
  return fractions;
}

void print_epoch(std::ostream& out, const training::EpochRecord& rec) {
  out << "epoch=" << rec.epoch << " train=" << format_double(rec.train_loss)
      << " val=" << format_double(rec.val_loss) << "\n";
}

std::vector<double> softmax(std::span<const double> logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - zmax);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

// Feature matrix in model column order, standardized with the model's stats.
Matrix features_for_model(const ModelFile& model, const data::RawCsv& csv) {
  std::vector<std::size_t> columns;
  std::string missing;
  for (const auto& name : model.feature_names) {
    const std::size_t idx = csv.column(name);
    if (idx == csv.header.size()) {
      missing += missing.empty() ? name : ", " + name;
    } else {
      columns.push_back(idx);
    }
  }
  if (!missing.empty()) {
    throw DataError("data file missing feature columns: " + missing);
  }
  Matrix features(csv.rows.size(), columns.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    for (std::size_t m = 0; m < columns.size(); ++m) {
      features(r, m) = data::parse_csv_number(csv.rows[r][columns[m]], r + 1,
                                              model.feature_names[m]);
    }
  }
  for (std::size_t r = 0; r < features.rows; ++r) {
    auto row = features.row(r);
    for (std::size_t m = 0; m < row.size(); ++m) {
      row[m] = (row[m] - model.stats.mean[m]) / model.stats.stdev[m];
    }
  }
  return features;
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  const data::Task task = data::task_from_name(args.task_name);
  const auto fractions = parse_split(args.split);
  const auto policy =
      args.impute ? data::MissingPolicy::AllowNan : data::MissingPolicy::Error;

  const auto full = data::load_csv(args.data_path, args.target, task, policy);
  auto [train, val, test] = data::split_dataset(full, fractions, args.seed + 3);
  if (args.impute) data::impute_missing(train, {&val, &test});
  const auto stats = data::standardize(train, {&val, &test});

  const std::size_t width = train.response_width();
  if (task == data::Task::Classification && width < 2) {
    throw DataError("classification needs at least two classes, got " +
                    std::to_string(width));
  }

  auto forest = forest::init_forest(args.trees, args.depth, train.feature_count(),
                                    width, args.temperature, args.seed);
  auto bank = memory::init_bank(forest.total_leaves(), width, args.seed + 1);

  training::TrainConfig cfg;
  cfg.eta = args.lr;
  cfg.batch_size = args.batch;
  cfg.max_epochs = args.epochs;
  cfg.patience = args.patience;
  cfg.optimizer = training::optimizer_from_name(args.optimizer);
  cfg.loss = task == data::Task::Classification
                 ? numerics::LossKind::CrossEntropy
                 : numerics::LossKind::MSE;
  cfg.decay = args.decay;
  cfg.temperature = args.temperature;
  cfg.shuffle_seed = args.seed + 2;
  cfg.init_seed = args.seed;

  training::FitResult result;
  try {
    result = training::fit(std::move(forest), std::move(bank), train, val, cfg);
  } catch (const training::TrainingDivergence& div) {
    for (const auto& rec : div.history.epochs) print_epoch(out, rec);
    throw;
  }
  for (const auto& rec : result.history.epochs) print_epoch(out, rec);

  const auto metric = task == data::Task::Classification
                          ? training::Metric::Accuracy
                          : training::Metric::Rmse;
  const double score =
      training::evaluate(result.forest, result.bank, test, metric, cfg.loss);
  out << "test " << training::metric_name(metric) << "=" << format_double(score)
      << "\n";

  ModelFile model;
  model.task = task;
  model.loss = cfg.loss;
  model.target_column = args.target;
  model.feature_names = train.feature_names;
  model.stats = stats;
  model.class_labels = train.class_labels;
  model.forest = std::move(result.forest);
  model.bank = std::move(result.bank);
  save_model(model, args.out_path);
  return kExitOk;
}

int cmd_predict(const PredictArgs& args, std::ostream& out) {
  const auto model = load_model(args.model_path);
  const auto csv = data::read_raw_csv(args.data_path);
  const auto features = features_for_model(model, csv);

  std::ofstream file;
  if (!args.out_path.empty()) {
    file.open(args.out_path);
    if (!file) {
      throw DataError("cannot open output file: " + args.out_path);
    }
  }
  std::ostream& sink = args.out_path.empty() ? out : file;

  if (model.task == data::Task::Regression) {
    for (std::size_t f = 0; f < model.forest.response_width; ++f) {
      sink << (f ? "," : "") << "pred_" << f;
    }
    sink << "\n";
    for (std::size_t r = 0; r < features.rows; ++r) {
      const auto pred =
          forest::forward_forest(model.forest, model.bank, features.row(r));
      for (std::size_t f = 0; f < pred.size(); ++f) {
        sink << (f ? "," : "") << format_double(pred[f]);
      }
      sink << "\n";
    }
  } else {
    sink << "label";
    for (const auto& label : model.class_labels) sink << ",p_" << label;
    sink << "\n";
    for (std::size_t r = 0; r < features.rows; ++r) {
      const auto pred =
          forest::forward_forest(model.forest, model.bank, features.row(r));
      const auto probs = softmax(pred);
      const auto arg = static_cast<std::size_t>(std::distance(
          pred.begin(), std::max_element(pred.begin(), pred.end())));
      sink << model.class_labels[arg];
      for (double p : probs) sink << "," << format_double(p);
      sink << "\n";
    }
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto metric = training::metric_from_name(args.metric);
  const auto model = load_model(args.model_path);
  const auto csv = data::read_raw_csv(args.data_path);

  const std::size_t target_idx = csv.column(model.target_column);
  if (target_idx == csv.header.size()) {
    throw DataError("data file missing target column: " + model.target_column);
  }

  data::Dataset ds;
  ds.task = model.task;
  ds.feature_names = model.feature_names;
  ds.class_labels = model.class_labels;
  ds.features = features_for_model(model, csv);
  if (model.task == data::Task::Regression) {
    ds.target_values = Matrix(csv.rows.size(), 1);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      ds.target_values(r, 0) = data::parse_csv_number(
          csv.rows[r][target_idx], r + 1, model.target_column);
    }
  } else {
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& label = csv.rows[r][target_idx];
      const auto it = std::find(model.class_labels.begin(),
                                model.class_labels.end(), label);
      if (it == model.class_labels.end()) {
        throw DataError("unknown class label '" + label + "' at row " +
                        std::to_string(r + 1));
      }
      ds.target_classes.push_back(static_cast<std::size_t>(
          std::distance(model.class_labels.begin(), it)));
    }
  }

  const double value =
      training::evaluate(model.forest, model.bank, ds, metric, model.loss);
  out << "metric=" << training::metric_name(metric)
      << " value=" << format_double(value) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out,
                  std::ostream& err) {
  gradcheck::GradCheckOptions options;
  options.seed = args.seed;
  options.cases = args.cases;
  options.inject_error = args.inject_error;
  const auto report = gradcheck::run_gradcheck(options);
  out << "max_rel_err=" << format_double(report.max_rel_err) << "\n";
  if (!report.pass) {
    err << "error: gradcheck: gradient mismatch at case seed="
        << report.worst_seed << " rel_err=" << format_double(report.max_rel_err)
        << "\n";
    return kExitGradcheck;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Soft-gated decision forests with an external response memory"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a model on a CSV dataset");
  train->add_option("--data", targs.data_path, "Input CSV file")->required();
  train->add_option("--target", targs.target, "Target column name")->required();
  train->add_option("--task", targs.task_name, "Task kind")
      ->required()
      ->check(CLI::IsMember({"regression", "classification"}));
  train->add_option("--trees", targs.trees, "Number of trees")
      ->check(CLI::PositiveNumber);
  train->add_option("--depth", targs.depth, "Tree depth")
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", targs.lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", targs.batch, "Batch size")
      ->check(CLI::PositiveNumber);
  train->add_option("--epochs", targs.epochs, "Maximum epochs")
      ->check(CLI::PositiveNumber);
  train->add_option("--patience", targs.patience,
                    "Early-stop epochs without validation improvement")
      ->check(CLI::PositiveNumber);
  train->add_option("--optimizer", targs.optimizer, "Gate optimizer")
      ->check(CLI::IsMember({"sgd", "adam"}));
  train->add_option("--decay", targs.decay, "Erase decay of the memory write")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--temperature", targs.temperature, "Gate temperature")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", targs.seed, "Master seed");
  train->add_option("--out", targs.out_path, "Model output path");
  train->add_option("--split", targs.split, "train,val,test fractions");
  train->add_flag("--impute", targs.impute,
                  "Replace missing feature cells with train-split means");

  PredictArgs pargs;
  auto* predict = app.add_subcommand("predict", "Predict rows of a CSV file");
  predict->add_option("--model", pargs.model_path, "Model file")->required();
  predict->add_option("--data", pargs.data_path, "Input CSV file")->required();
  predict->add_option("--out", pargs.out_path, "Prediction CSV (stdout if absent)");

  EvalArgs eargs;
  auto* eval = app.add_subcommand("eval", "Score a model on labeled data");
  eval->add_option("--model", eargs.model_path, "Model file")->required();
  eval->add_option("--data", eargs.data_path, "Input CSV file")->required();
  eval->add_option("--metric", eargs.metric, "loss | accuracy | rmse")
      ->required();

  GradcheckArgs gargs;
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against finite differences");
  gradcheck_cmd->add_option("--seed", gargs.seed, "Base seed");
  gradcheck_cmd->add_option("--cases", gargs.cases, "Number of random cases")
      ->check(CLI::PositiveNumber);
  gradcheck_cmd->add_flag("--inject-error", gargs.inject_error,
                          "Self-test hook: corrupt one gradient coordinate");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("radf");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    err << app.help();
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(targs, out);
    if (app.got_subcommand(predict)) return cmd_predict(pargs, out);
    if (app.got_subcommand(eval)) return cmd_eval(eargs, out);
    return cmd_gradcheck(gargs, out, err);
  } catch (const DataError& e) {
    err << "error: data: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: numeric: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace radf::cli
