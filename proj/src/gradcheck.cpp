#include "radf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "radf/memory.hpp"
#include "radf/numerics.hpp"

namespace radf::gradcheck {

namespace {

using forest::ForestParams;
using forest::Sample;
using memory::ResponseBank;
using numerics::LossKind;

struct Config {
  ForestParams forest;
  ResponseBank bank;
  Matrix features;         // batch x M
  Matrix target_values;    // batch x F (MSE/MAE)
  std::vector<std::size_t> target_classes;  // CE
  LossKind kind = LossKind::MSE;
};

std::vector<Sample> to_batch(const Config& cfg) {
  std::vector<Sample> batch;
  for (std::size_t s = 0; s < cfg.features.rows; ++s) {
    Sample sample;
    sample.x = cfg.features.row(s);
    if (cfg.kind == LossKind::CrossEntropy) {
      sample.target.class_index = cfg.target_classes[s];
    } else {
      sample.target.values = cfg.target_values.row(s);
    }
    batch.push_back(sample);
  }
  return batch;
}

Config random_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + rng() % (hi - lo + 1);
  };
  Config cfg;
  const std::size_t trees = pick(1, 3);
  const int depth = static_cast<int>(pick(1, 4));
  const std::size_t features = pick(1, 8);
  const std::size_t width = pick(1, 3);
  const std::size_t batch = pick(1, 8);
  cfg.kind = static_cast<LossKind>(pick(0, 2));

  cfg.forest = forest::init_forest(trees, depth, features, width, 1.0, rng());
  cfg.bank = memory::init_bank(trees << depth, width, rng());

  std::uniform_real_distribution<double> feature_dist(-2.0, 2.0);
  cfg.features = Matrix(batch, features);
  for (double& v : cfg.features.data) v = feature_dist(rng);

  if (cfg.kind == LossKind::CrossEntropy) {
    for (std::size_t s = 0; s < batch; ++s) {
      cfg.target_classes.push_back(pick(0, width - 1));
    }
  } else {
    cfg.target_values = Matrix(batch, width);
    if (cfg.kind == LossKind::MAE) {
      // Keep every residual at least 0.1 from the kink: target = prediction
      // plus a signed offset in [0.1, 1.1].
      std::uniform_real_distribution<double> offset_dist(0.1, 1.1);
      for (std::size_t s = 0; s < batch; ++s) {
        const auto pred =
            forest::forward_forest(cfg.forest, cfg.bank, cfg.features.row(s));
        for (std::size_t f = 0; f < width; ++f) {
          const double sign = rng() % 2 ? 1.0 : -1.0;
          cfg.target_values(s, f) = pred[f] + sign * offset_dist(rng);
        }
      }
    } else {
      std::uniform_real_distribution<double> target_dist(-1.0, 1.0);
      for (double& v : cfg.target_values.data) v = target_dist(rng);
    }
  }
  return cfg;
}

std::size_t parameter_count(const Config& cfg) {
  const auto& f = cfg.forest;
  const std::size_t per_tree =
      f.topology.internal_count() * (f.feature_count + 1);
  return f.tree_count() * per_tree + cfg.bank.cells.data.size();
}

// Flat layout: per tree all weights then thresholds, then the bank.
std::vector<double> flatten(const Config& cfg) {
  std::vector<double> theta;
  theta.reserve(parameter_count(cfg));
  for (const auto& tree : cfg.forest.trees) {
    theta.insert(theta.end(), tree.weights.data.begin(), tree.weights.data.end());
    theta.insert(theta.end(), tree.thresholds.begin(), tree.thresholds.end());
  }
  theta.insert(theta.end(), cfg.bank.cells.data.begin(),
               cfg.bank.cells.data.end());
  return theta;
}

void unflatten(std::span<const double> theta, Config& cfg) {
  std::size_t pos = 0;
  for (auto& tree : cfg.forest.trees) {
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos),
                tree.weights.data.size(), tree.weights.data.begin());
    pos += tree.weights.data.size();
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos),
                tree.thresholds.size(), tree.thresholds.begin());
    pos += tree.thresholds.size();
  }
  std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos),
              cfg.bank.cells.data.size(), cfg.bank.cells.data.begin());
}

std::vector<double> flatten_gradients(const forest::Gradients& grads) {
  std::vector<double> flat;
  for (std::size_t h = 0; h < grads.weight_grads.size(); ++h) {
    flat.insert(flat.end(), grads.weight_grads[h].data.begin(),
                grads.weight_grads[h].data.end());
    flat.insert(flat.end(), grads.threshold_grads[h].begin(),
                grads.threshold_grads[h].end());
  }
  flat.insert(flat.end(), grads.bank_grads.data.begin(),
              grads.bank_grads.data.end());
  return flat;
}

double batch_loss(const Config& cfg) {
  const auto batch = to_batch(cfg);
  double sum = 0.0;
  for (const auto& sample : batch) {
    const auto pred = forest::forward_forest(cfg.forest, cfg.bank, sample.x);
    sum += numerics::loss_and_grad(pred, sample.target, cfg.kind).loss;
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  GradCheckReport report;
  const double floor = options.abs_tol / options.rel_tol;

  for (std::size_t i = 0; i < options.cases; ++i) {
    const std::uint64_t case_seed = options.seed + i;
    Config cfg = random_config(case_seed);

    auto analytic =
        flatten_gradients(forest::backward(cfg.forest, cfg.bank, to_batch(cfg),
                                           cfg.kind));
    if (options.inject_error && i == 0) {
      auto worst = std::max_element(
          analytic.begin(), analytic.end(),
          [](double a, double b) { return std::abs(a) < std::abs(b); });
      *worst = std::abs(*worst) > 1e-3 ? -*worst : *worst + 1.0;
    }

    const auto theta = flatten(cfg);
    Config scratch = cfg;
    const auto numeric = numerics::finite_diff_grad(
        [&](std::span<const double> point) {
          unflatten(point, scratch);
          return batch_loss(scratch);
        },
        theta, options.step);

    for (std::size_t k = 0; k < analytic.size(); ++k) {
      const double denom =
          std::max({std::abs(analytic[k]), std::abs(numeric[k]), floor});
      const double rel = std::abs(analytic[k] - numeric[k]) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_seed = case_seed;
      }
    }
    ++report.cases_run;
  }
  report.pass = report.max_rel_err <= options.rel_tol;
  return report;
}

}  // namespace radf::gradcheck
