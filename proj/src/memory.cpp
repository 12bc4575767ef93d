#include "radf/memory.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace radf::memory {

ResponseBank init_bank(std::size_t n_cells, std::size_t width, std::uint64_t seed) {
  if (n_cells == 0 || width == 0) {
    throw std::invalid_argument("init_bank: cell count and width must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  ResponseBank bank{Matrix(n_cells, width)};
  for (double& v : bank.cells.data) v = dist(rng);
  return bank;
}

std::vector<double> read(const ResponseBank& bank, std::span<const double> weights) {
  if (weights.size() != bank.cell_count()) {
    throw std::invalid_argument("read: weight count does not match cell count");
  }
  std::vector<double> out(bank.width(), 0.0);
  for (std::size_t i = 0; i < bank.cell_count(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const auto cell = bank.cells.row(i);
    for (std::size_t f = 0; f < out.size(); ++f) out[f] += w * cell[f];
  }
  return out;
}

ResponseBank write(const ResponseBank& bank, const WritePlan& plan) {
  if (plan.weights.size() != bank.cell_count()) {
    throw std::invalid_argument("write: weight count does not match cell count");
  }
  if (plan.erase.size() != bank.width() || !plan.add.same_shape(bank.cells)) {
    throw std::invalid_argument("write: plan shape does not match bank");
  }
  for (double w : plan.weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("write: weight outside [0,1]");
    }
  }
  for (double e : plan.erase) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument("write: erase entry outside [0,1]");
    }
  }
  ResponseBank next = bank;
  for (std::size_t i = 0; i < bank.cell_count(); ++i) {
    const double w = plan.weights[i];
    for (std::size_t f = 0; f < bank.width(); ++f) {
      next.cells(i, f) =
          bank.cells(i, f) * (1.0 - w * plan.erase[f]) + w * plan.add(i, f);
    }
  }
  return next;
}

WritePlan gradient_write_plan(const Matrix& bank_grads,
                              std::span<const double> mean_leaf_probs,
                              double eta, double decay) {
  if (!(eta > 0.0)) {
    throw std::invalid_argument("gradient_write_plan: eta must be positive");
  }
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("gradient_write_plan: decay outside [0,1]");
  }
  if (mean_leaf_probs.size() != bank_grads.rows) {
    throw std::invalid_argument("gradient_write_plan: weight/gradient shape mismatch");
  }
  WritePlan plan;
  plan.weights.assign(mean_leaf_probs.begin(), mean_leaf_probs.end());
  for (double w : plan.weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("gradient_write_plan: weight outside [0,1]");
    }
  }
  plan.erase.assign(bank_grads.cols, decay);
  plan.add = Matrix(bank_grads.rows, bank_grads.cols);
  for (std::size_t i = 0; i < bank_grads.rows; ++i) {
    const double w = plan.weights[i];
    if (w < kWeightEpsilon) continue;  // dead leaf: no add
    for (std::size_t f = 0; f < bank_grads.cols; ++f) {
      plan.add(i, f) = -eta * bank_grads(i, f) / std::max(w, kWeightEpsilon);
    }
  }
  return plan;
}

}  // namespace radf::memory
