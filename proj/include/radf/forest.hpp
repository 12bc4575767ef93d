#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radf/matrix.hpp"
#include "radf/memory.hpp"
#include "radf/numerics.hpp"

namespace radf::forest {

// Complete binary tree of depth d, BFS 1-based indexing: internal nodes are
// 1 .. 2^d - 1, leaves are 2^d .. 2^(d+1) - 1, children of node i are 2i and
// 2i + 1. Every root-to-leaf path crosses exactly d internal nodes.
struct TreeTopology {
  int depth = 1;

  std::size_t internal_count() const { return (std::size_t{1} << depth) - 1; }
  std::size_t leaf_count() const { return std::size_t{1} << depth; }
  std::size_t first_leaf() const { return std::size_t{1} << depth; }

  bool operator==(const TreeTopology& other) const = default;
};

// Gate parameters of one tree: one weight row and one threshold per internal
// node. The gate at node n is sigmoid((A_n . x - b_n) / temperature).
struct GateParams {
  Matrix weights;                  // internal_count x M
  std::vector<double> thresholds;  // internal_count
  double temperature = 1.0;

  bool operator==(const GateParams& other) const = default;
};

// K trees of uniform depth and feature count. Tree order is stable and fixes
// the cell-block layout of the associated response bank (tree h owns cells
// [h * 2^d, (h+1) * 2^d)).
struct ForestParams {
  TreeTopology topology;
  std::size_t feature_count = 0;   // M
  std::size_t response_width = 0;  // F
  std::vector<GateParams> trees;

  std::size_t tree_count() const { return trees.size(); }
  std::size_t total_leaves() const { return tree_count() * topology.leaf_count(); }

  bool operator==(const ForestParams& other) const = default;
};

// Per-sample routing of one tree: gate values per internal node (index 0 is
// node 1) and probabilities per leaf (index 0 is leaf 2^d). Leaf probabilities
// sum to 1.
struct RoutingResult {
  std::vector<double> gates;
  std::vector<double> leaf_probs;
};

// One training sample: feature row plus its target.
struct Sample {
  std::span<const double> x;
  numerics::TargetView target;
};

// Gradients of the batch-mean loss, plus the batch statistics the memory
// write needs.
struct Gradients {
  std::vector<Matrix> weight_grads;                   // per tree, dA
  std::vector<std::vector<double>> threshold_grads;   // per tree, db
  Matrix bank_grads;                                  // per cell, dQ
  std::vector<double> mean_leaf_probs;                // per cell
  double mean_loss = 0.0;
};

// Seeded uniform init: weight entries on [-1,1]/sqrt(M), thresholds on
// [-0.5, 0.5]. Same seed gives identical parameters.
ForestParams init_forest(std::size_t tree_count, int depth,
                         std::size_t feature_count, std::size_t response_width,
                         double temperature, std::uint64_t seed);

// Gate probabilities for every internal node: sigmoid((A_n . x - b_n) / tau).
std::vector<double> gate_values(const TreeTopology& topology,
                                const GateParams& gates,
                                std::span<const double> x);

// Root-to-leaf products. A node passes mass g to its left child (2i) and
// 1 - g to its right child (2i + 1).
std::vector<double> leaf_probabilities(const TreeTopology& topology,
                                       std::span<const double> gates);

RoutingResult route(const TreeTopology& topology, const GateParams& gates,
                    std::span<const double> x);

// Tree output: probability-weighted read of the tree's bank cells.
std::vector<double> forward_tree(const ForestParams& forest,
                                 const memory::ResponseBank& bank,
                                 std::size_t tree_index,
                                 std::span<const double> x);

// Ensemble prediction: mean of the tree outputs, accumulated in tree order.
std::vector<double> forward_forest(const ForestParams& forest,
                                   const memory::ResponseBank& bank,
                                   std::span<const double> x);

// Classical routing: left when A_n . x - b_n >= 0, right otherwise (ties go
// left, consistent with gate > 0.5 meaning left). Returns the leaf BFS index.
std::size_t hard_route(const TreeTopology& topology, const GateParams& gates,
                       std::span<const double> x);

// Reverse-mode gradients of the batch-mean loss with respect to every gate
// weight row, threshold and bank cell. Accumulation runs in sample order then
// tree order, so results are bitwise reproducible.
Gradients backward(const ForestParams& forest, const memory::ResponseBank& bank,
                   std::span<const Sample> batch, numerics::LossKind kind);

}  // namespace radf::forest
