#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "radf/data.hpp"
#include "radf/error.hpp"
#include "radf/forest.hpp"
#include "radf/memory.hpp"
#include "radf/numerics.hpp"

namespace radf::training {

enum class OptimizerKind { SGD, Adam };

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

// Adam constants are fixed, not configurable.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct TrainConfig {
  double eta = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  OptimizerKind optimizer = OptimizerKind::Adam;
  numerics::LossKind loss = numerics::LossKind::MSE;
  double decay = 0.0;        // erase decay of the memory write
  double temperature = 1.0;  // gate temperature used at init
  std::uint64_t shuffle_seed = 1;
  std::uint64_t init_seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // earliest epoch with minimal validation loss
};

// First/second Adam moments mirroring the gate parameters. The response bank
// is updated through the memory write, never through the optimizer, so it has
// no accumulators here. Empty for SGD.
struct OptimizerState {
  std::vector<Matrix> weight_m, weight_v;
  std::vector<std::vector<double>> threshold_m, threshold_v;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(const forest::ForestParams& forest,
                                    OptimizerKind kind);

// Validation-loss early stopping: stops once `patience` consecutive epochs
// fail to improve on the best loss seen (strict improvement, earliest best
// kept on ties).
struct EarlyStopper {
  std::size_t patience = 1;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t wait = 0;

  // Returns true when this epoch improves on the best validation loss.
  bool observe(std::size_t epoch, double loss) {
    if (loss < best) {
      best = loss;
      best_epoch = epoch;
      wait = 0;
      return true;
    }
    ++wait;
    return false;
  }
  bool should_stop() const { return wait >= patience; }
};

// In-place SGD or bias-corrected Adam step on the gate weights and thresholds
// from batch-mean gradients.
void optimizer_update(forest::ForestParams& params, const forest::Gradients& grads,
                      OptimizerState& state, const TrainConfig& cfg);

struct TrainState {
  forest::ForestParams forest;
  memory::ResponseBank bank;
  OptimizerState opt;
};

// One batch step: backward, erase/add write of the bank, optimizer step for
// the gates. Returns the batch-mean loss. Throws TrainingDivergence via fit
// (NumericError here) if a non-finite loss or gradient shows up.
double train_step(TrainState& state, std::span<const forest::Sample> batch,
                  const TrainConfig& cfg);

struct FitResult {
  forest::ForestParams forest;
  memory::ResponseBank bank;
  TrainHistory history;
};

// Thrown when training hits a non-finite value; carries the epochs completed
// before the abort.
struct TrainingDivergence : NumericError {
  TrainHistory history;
  TrainingDivergence(const std::string& msg, TrainHistory partial)
      : NumericError(msg), history(std::move(partial)) {}
};

// Shuffled epochs over the training set with per-epoch validation; returns
// the snapshot from the best validation epoch.
FitResult fit(forest::ForestParams forest, memory::ResponseBank bank,
              const data::Dataset& train, const data::Dataset& val,
              const TrainConfig& cfg);

enum class Metric { Loss, Accuracy, Rmse };

Metric metric_from_name(const std::string& name);
std::string metric_name(Metric metric);

// Mean metric over the dataset. `kind` selects the loss for Metric::Loss.
double evaluate(const forest::ForestParams& forest,
                const memory::ResponseBank& bank, const data::Dataset& ds,
                Metric metric, numerics::LossKind kind);

// Zero-copy view of one dataset row as a training sample.
forest::Sample make_sample(const data::Dataset& ds, std::size_t row);
std::vector<forest::Sample> make_batch(const data::Dataset& ds,
                                       std::span<const std::size_t> rows);

}  // namespace radf::training
