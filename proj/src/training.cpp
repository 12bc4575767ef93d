#include "radf/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radf::training {

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::SGD ? "sgd" : "adam";
}

Metric metric_from_name(const std::string& name) {
  if (name == "loss") return Metric::Loss;
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "rmse") return Metric::Rmse;
  throw std::invalid_argument("unknown metric: " + name);
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::Loss: return "loss";
    case Metric::Accuracy: return "accuracy";
    case Metric::Rmse: return "rmse";
  }
  throw std::invalid_argument("metric_name: unknown metric");
}

OptimizerState make_optimizer_state(const forest::ForestParams& forest,
                                    OptimizerKind kind) {
  OptimizerState state;
  if (kind == OptimizerKind::Adam) {
    const std::size_t internal = forest.topology.internal_count();
    for (std::size_t h = 0; h < forest.tree_count(); ++h) {
      state.weight_m.emplace_back(internal, forest.feature_count);
      state.weight_v.emplace_back(internal, forest.feature_count);
      state.threshold_m.emplace_back(internal, 0.0);
      state.threshold_v.emplace_back(internal, 0.0);
    }
  }
  return state;
}

namespace {

void check_grad_shapes(const forest::ForestParams& params,
                       const forest::Gradients& grads) {
  if (grads.weight_grads.size() != params.tree_count() ||
      grads.threshold_grads.size() != params.tree_count()) {
    throw std::invalid_argument("optimizer_update: gradient shape mismatch");
  }
  for (std::size_t h = 0; h < params.tree_count(); ++h) {
    if (!grads.weight_grads[h].same_shape(params.trees[h].weights) ||
        grads.threshold_grads[h].size() != params.trees[h].thresholds.size()) {
      throw std::invalid_argument("optimizer_update: gradient shape mismatch");
    }
  }
}

void sgd_step(double eta, std::span<double> params, std::span<const double> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grads[i];
}

void adam_step(double eta, std::uint64_t step, std::span<double> params,
               std::span<const double> grads, std::span<double> m,
               std::span<double> v) {
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grads[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    params[i] -= eta * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

bool gradients_finite(const forest::Gradients& grads) {
  if (!std::isfinite(grads.mean_loss)) return false;
  for (const auto& w : grads.weight_grads) {
    if (!all_finite(w.data)) return false;
  }
  for (const auto& t : grads.threshold_grads) {
    if (!all_finite(t)) return false;
  }
  return all_finite(grads.bank_grads.data);
}

void check_config(const TrainConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (cfg.max_epochs == 0) throw std::invalid_argument("max epochs must be positive");
  if (cfg.patience == 0) throw std::invalid_argument("patience must be positive");
  if (!(cfg.decay >= 0.0 && cfg.decay <= 1.0)) {
    throw std::invalid_argument("decay outside [0,1]");
  }
}

void check_task_loss(const data::Dataset& ds, numerics::LossKind kind) {
  const bool classification = ds.task == data::Task::Classification;
  if (classification != (kind == numerics::LossKind::CrossEntropy)) {
    throw std::invalid_argument(
        "loss kind does not match dataset task (cross_entropy <-> classification)");
  }
}

}  // namespace

void optimizer_update(forest::ForestParams& params, const forest::Gradients& grads,
                      OptimizerState& state, const TrainConfig& cfg) {
  check_grad_shapes(params, grads);
  if (cfg.optimizer == OptimizerKind::SGD) {
    for (std::size_t h = 0; h < params.tree_count(); ++h) {
      sgd_step(cfg.eta, params.trees[h].weights.data, grads.weight_grads[h].data);
      sgd_step(cfg.eta, params.trees[h].thresholds, grads.threshold_grads[h]);
    }
    return;
  }
  if (state.weight_m.size() != params.tree_count()) {
    throw std::invalid_argument("optimizer_update: state does not match forest");
  }
  ++state.step;
  for (std::size_t h = 0; h < params.tree_count(); ++h) {
    adam_step(cfg.eta, state.step, params.trees[h].weights.data,
              grads.weight_grads[h].data, state.weight_m[h].data,
              state.weight_v[h].data);
    adam_step(cfg.eta, state.step, params.trees[h].thresholds,
              grads.threshold_grads[h], state.threshold_m[h], state.threshold_v[h]);
  }
}

double train_step(TrainState& state, std::span<const forest::Sample> batch,
                  const TrainConfig& cfg) {
  const auto grads = forest::backward(state.forest, state.bank, batch, cfg.loss);
  if (!gradients_finite(grads)) {
    throw NumericError("numerical divergence: non-finite loss or gradient");
  }
  const auto plan = memory::gradient_write_plan(
      grads.bank_grads, grads.mean_leaf_probs, cfg.eta, cfg.decay);
  state.bank = memory::write(state.bank, plan);
  optimizer_update(state.forest, grads, state.opt, cfg);
  return grads.mean_loss;
}

forest::Sample make_sample(const data::Dataset& ds, std::size_t row) {
  forest::Sample sample;
  sample.x = ds.features.row(row);
  if (ds.task == data::Task::Regression) {
    sample.target.values = ds.target_values.row(row);
  } else {
    sample.target.class_index = ds.target_classes[row];
  }
  return sample;
}

std::vector<forest::Sample> make_batch(const data::Dataset& ds,
                                       std::span<const std::size_t> rows) {
  std::vector<forest::Sample> batch;
  batch.reserve(rows.size());
  for (std::size_t row : rows) batch.push_back(make_sample(ds, row));
  return batch;
}

FitResult fit(forest::ForestParams forest, memory::ResponseBank bank,
              const data::Dataset& train, const data::Dataset& val,
              const TrainConfig& cfg) {
  check_config(cfg);
  if (train.size() == 0 || val.size() == 0) {
    throw std::invalid_argument("fit: empty dataset");
  }
  if (train.feature_count() != forest.feature_count ||
      val.feature_count() != forest.feature_count) {
    throw std::invalid_argument("fit: feature count does not match forest");
  }
  if (train.response_width() != forest.response_width) {
    throw std::invalid_argument("fit: response width does not match forest");
  }
  check_task_loss(train, cfg.loss);
  check_task_loss(val, cfg.loss);

  OptimizerState opt = make_optimizer_state(forest, cfg.optimizer);
  TrainState state{std::move(forest), std::move(bank), std::move(opt)};
  FitResult result;
  result.forest = state.forest;  // fallback if nothing improves
  result.bank = state.bank;
  EarlyStopper stopper{cfg.patience};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& rows : data::batches(train, cfg.batch_size,
                                          cfg.shuffle_seed, epoch)) {
      const auto batch = make_batch(train, rows);
      double batch_loss = 0.0;
      try {
        batch_loss = train_step(state, batch, cfg);
      } catch (const NumericError& err) {
        throw TrainingDivergence(err.what(), std::move(result.history));
      }
      loss_sum += batch_loss * static_cast<double>(rows.size());
    }
    const double train_loss = loss_sum / static_cast<double>(train.size());
    const double val_loss =
        evaluate(state.forest, state.bank, val, Metric::Loss, cfg.loss);
    if (!std::isfinite(val_loss)) {
      throw TrainingDivergence("numerical divergence: non-finite validation loss",
                               std::move(result.history));
    }
    result.history.epochs.push_back({epoch, train_loss, val_loss});
    if (stopper.observe(epoch, val_loss)) {
      result.forest = state.forest;
      result.bank = state.bank;
      result.history.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

double evaluate(const forest::ForestParams& forest,
                const memory::ResponseBank& bank, const data::Dataset& ds,
                Metric metric, numerics::LossKind kind) {
  if (ds.size() == 0) {
    throw std::invalid_argument("evaluate: empty dataset");
  }
  if (metric == Metric::Loss) check_task_loss(ds, kind);
  if (metric == Metric::Accuracy && ds.task != data::Task::Classification) {
    throw std::invalid_argument("evaluate: accuracy needs classification targets");
  }
  if (metric == Metric::Rmse && ds.task != data::Task::Regression) {
    throw std::invalid_argument("evaluate: rmse needs regression targets");
  }

  double accum = 0.0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto sample = make_sample(ds, r);
    const auto pred = forest::forward_forest(forest, bank, sample.x);
    switch (metric) {
      case Metric::Loss:
        accum += numerics::loss_and_grad(pred, sample.target, kind).loss;
        break;
      case Metric::Accuracy: {
        const auto arg = static_cast<std::size_t>(std::distance(
            pred.begin(), std::max_element(pred.begin(), pred.end())));
        accum += arg == sample.target.class_index ? 1.0 : 0.0;
        break;
      }
      case Metric::Rmse:
        for (std::size_t f = 0; f < pred.size(); ++f) {
          const double r2 = pred[f] - sample.target.values[f];
          accum += r2 * r2;
        }
        break;
    }
  }
  if (metric == Metric::Rmse) {
    return std::sqrt(accum /
                     static_cast<double>(ds.size() * ds.response_width()));
  }
  return accum / static_cast<double>(ds.size());
}

}  // namespace radf::training
