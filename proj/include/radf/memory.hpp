#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radf/matrix.hpp"

namespace radf::memory {

// External memory bank: one response vector per leaf cell, laid out in tree
// order then leaf BFS order. Treated as an immutable value; writes return a
// new bank.
struct ResponseBank {
  Matrix cells;  // cell_count x width

  std::size_t cell_count() const { return cells.rows; }
  std::size_t width() const { return cells.cols; }

  bool operator==(const ResponseBank& other) const = default;
};

// One attention-weighted erase/add write: per-cell weight w in [0,1], a
// shared erase vector e in [0,1]^F and a per-cell add vector.
struct WritePlan {
  std::vector<double> weights;  // one per cell
  std::vector<double> erase;    // width F
  Matrix add;                   // cell_count x F
};

// Division guard for near-dead cells in gradient_write_plan.
inline constexpr double kWeightEpsilon = 1e-8;

// Seeded uniform init on [-0.1, 0.1]; same seed gives an identical bank.
ResponseBank init_bank(std::size_t n_cells, std::size_t width, std::uint64_t seed);

// Attention-weighted read: sum over cells of weights[i] * cells[i].
std::vector<double> read(const ResponseBank& bank, std::span<const double> weights);

// Per cell i, component f: Q'[i,f] = Q[i,f] * (1 - w[i]*e[f]) + w[i]*a[i,f].
ResponseBank write(const ResponseBank& bank, const WritePlan& plan);

// Derives the write from a bank gradient: weights are the batch-mean leaf
// probabilities, erase = decay * ones, add chosen so that with decay = 0 the
// composed write is exactly the SGD step Q - eta * dQ on every cell whose
// weight is at least kWeightEpsilon. Cells below the guard are left alone.
WritePlan gradient_write_plan(const Matrix& bank_grads,
                              std::span<const double> mean_leaf_probs,
                              double eta, double decay);

}  // namespace radf::memory
