#include "radf/forest.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace radf::forest {

namespace {

void check_tree_shapes(const TreeTopology& topology, const GateParams& gates,
                       std::span<const double> x) {
  if (gates.weights.rows != topology.internal_count() ||
      gates.thresholds.size() != topology.internal_count()) {
    throw std::invalid_argument("gate parameter count does not match topology");
  }
  if (x.size() != gates.weights.cols) {
    throw std::invalid_argument("feature vector width does not match gate weights");
  }
  if (!(gates.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
}

void check_forest_bank(const ForestParams& forest, const memory::ResponseBank& bank) {
  if (bank.cell_count() != forest.total_leaves() ||
      bank.width() != forest.response_width) {
    throw std::invalid_argument("bank shape does not match forest");
  }
}

double gate_margin(const GateParams& gates, std::size_t node,
                   std::span<const double> x) {
  const auto row = gates.weights.row(node - 1);
  double dot = 0.0;
  for (std::size_t m = 0; m < row.size(); ++m) dot += row[m] * x[m];
  return dot - gates.thresholds[node - 1];
}

// Probability mass arriving at every node, indexed by BFS node id.
std::vector<double> path_probabilities(const TreeTopology& topology,
                                       std::span<const double> gates) {
  std::vector<double> mass(2 * topology.leaf_count());
  mass[1] = 1.0;
  for (std::size_t i = 1; i < topology.first_leaf(); ++i) {
    const double g = gates[i - 1];
    mass[2 * i] = mass[i] * g;
    mass[2 * i + 1] = mass[i] * (1.0 - g);
  }
  return mass;
}

}  // namespace

ForestParams init_forest(std::size_t tree_count, int depth,
                         std::size_t feature_count, std::size_t response_width,
                         double temperature, std::uint64_t seed) {
  if (tree_count == 0 || depth < 1 || feature_count == 0 || response_width == 0) {
    throw std::invalid_argument("init_forest: all sizes must be positive");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("init_forest: temperature must be positive");
  }
  ForestParams forest;
  forest.topology.depth = depth;
  forest.feature_count = feature_count;
  forest.response_width = response_width;

  std::mt19937_64 rng(seed);
  const double weight_scale = 1.0 / std::sqrt(static_cast<double>(feature_count));
  std::uniform_real_distribution<double> weight_dist(-weight_scale, weight_scale);
  std::uniform_real_distribution<double> threshold_dist(-0.5, 0.5);

  const std::size_t internal = forest.topology.internal_count();
  forest.trees.resize(tree_count);
  for (GateParams& tree : forest.trees) {
    tree.weights = Matrix(internal, feature_count);
    for (double& w : tree.weights.data) w = weight_dist(rng);
    tree.thresholds.resize(internal);
    for (double& b : tree.thresholds) b = threshold_dist(rng);
    tree.temperature = temperature;
  }
  return forest;
}

std::vector<double> gate_values(const TreeTopology& topology,
                                const GateParams& gates,
                                std::span<const double> x) {
  check_tree_shapes(topology, gates, x);
  std::vector<double> out(topology.internal_count());
  for (std::size_t node = 1; node <= topology.internal_count(); ++node) {
    out[node - 1] =
        numerics::sigmoid(gate_margin(gates, node, x) / gates.temperature);
  }
  return out;
}

std::vector<double> leaf_probabilities(const TreeTopology& topology,
                                       std::span<const double> gates) {
  if (gates.size() != topology.internal_count()) {
    throw std::invalid_argument("leaf_probabilities: gate count mismatch");
  }
  for (double g : gates) {
    if (!(g >= 0.0 && g <= 1.0)) {
      throw std::invalid_argument("leaf_probabilities: gate outside [0,1]");
    }
  }
  const auto mass = path_probabilities(topology, gates);
  return {mass.begin() + static_cast<std::ptrdiff_t>(topology.first_leaf()),
          mass.end()};
}

RoutingResult route(const TreeTopology& topology, const GateParams& gates,
                    std::span<const double> x) {
  RoutingResult result;
  result.gates = gate_values(topology, gates, x);
  result.leaf_probs = leaf_probabilities(topology, result.gates);
  return result;
}

std::vector<double> forward_tree(const ForestParams& forest,
                                 const memory::ResponseBank& bank,
                                 std::size_t tree_index,
                                 std::span<const double> x) {
  check_forest_bank(forest, bank);
  if (tree_index >= forest.tree_count()) {
    throw std::invalid_argument("forward_tree: tree index out of range");
  }
  const RoutingResult routing =
      route(forest.topology, forest.trees[tree_index], x);
  std::vector<double> weights(bank.cell_count(), 0.0);
  const std::size_t block = tree_index * forest.topology.leaf_count();
  for (std::size_t j = 0; j < routing.leaf_probs.size(); ++j) {
    weights[block + j] = routing.leaf_probs[j];
  }
  return memory::read(bank, weights);
}

std::vector<double> forward_forest(const ForestParams& forest,
                                   const memory::ResponseBank& bank,
                                   std::span<const double> x) {
  check_forest_bank(forest, bank);
  std::vector<double> sum(forest.response_width, 0.0);
  for (std::size_t h = 0; h < forest.tree_count(); ++h) {
    const auto tree_out = forward_tree(forest, bank, h, x);
    for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += tree_out[f];
  }
  const double inv_k = 1.0 / static_cast<double>(forest.tree_count());
  for (double& v : sum) v *= inv_k;
  return sum;
}

std::size_t hard_route(const TreeTopology& topology, const GateParams& gates,
                       std::span<const double> x) {
  check_tree_shapes(topology, gates, x);
  std::size_t node = 1;
  for (int level = 0; level < topology.depth; ++level) {
    node = gate_margin(gates, node, x) >= 0.0 ? 2 * node : 2 * node + 1;
  }
  return node;
}

Gradients backward(const ForestParams& forest, const memory::ResponseBank& bank,
                   std::span<const Sample> batch, numerics::LossKind kind) {
  check_forest_bank(forest, bank);
  if (batch.empty()) {
    throw std::invalid_argument("backward: empty batch");
  }

  const std::size_t tree_count = forest.tree_count();
  const std::size_t internal = forest.topology.internal_count();
  const std::size_t leaves = forest.topology.leaf_count();
  const std::size_t width = forest.response_width;
  const double inv_k = 1.0 / static_cast<double>(tree_count);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  Gradients grads;
  grads.weight_grads.assign(tree_count, Matrix(internal, forest.feature_count));
  grads.threshold_grads.assign(tree_count, std::vector<double>(internal, 0.0));
  grads.bank_grads = Matrix(forest.total_leaves(), width);
  grads.mean_leaf_probs.assign(forest.total_leaves(), 0.0);

  std::vector<std::vector<double>> gates(tree_count);
  std::vector<std::vector<double>> mass(tree_count);
  std::vector<double> prediction(width);
  std::vector<double> upstream(2 * leaves);

  for (const Sample& sample : batch) {
    // Forward: route every tree, average the weighted cell reads.
    std::fill(prediction.begin(), prediction.end(), 0.0);
    for (std::size_t h = 0; h < tree_count; ++h) {
      gates[h] = gate_values(forest.topology, forest.trees[h], sample.x);
      mass[h] = path_probabilities(forest.topology, gates[h]);
      const std::size_t block = h * leaves;
      for (std::size_t j = 0; j < leaves; ++j) {
        const double p = mass[h][leaves + j];
        const auto cell = bank.cells.row(block + j);
        for (std::size_t f = 0; f < width; ++f) prediction[f] += p * cell[f];
      }
    }
    for (double& v : prediction) v *= inv_k;

    const auto lg = numerics::loss_and_grad(prediction, sample.target, kind);
    grads.mean_loss += lg.loss;

    for (std::size_t h = 0; h < tree_count; ++h) {
      const GateParams& tree = forest.trees[h];
      const std::size_t block = h * leaves;

      // Leaf terms: dL/dq_j = p_j * lossgrad / K, and the upstream scalar
      // dL/dp_j = lossgrad . q_j / K seeding the gate sweep.
      for (std::size_t j = 0; j < leaves; ++j) {
        const double p = mass[h][leaves + j];
        const auto cell = bank.cells.row(block + j);
        double dot = 0.0;
        for (std::size_t f = 0; f < width; ++f) {
          grads.bank_grads(block + j, f) += inv_batch * inv_k * p * lg.grad[f];
          dot += lg.grad[f] * cell[f];
        }
        upstream[leaves + j] = inv_k * dot;
        grads.mean_leaf_probs[block + j] += inv_batch * p;
      }

      // Bottom-up sweep: upstream[i] = g_i * up[2i] + (1-g_i) * up[2i+1],
      // then dL/dg_i = mass[i] * (up[2i] - up[2i+1]). Division-free, so
      // saturated gates cannot produce NaNs.
      for (std::size_t i = internal; i >= 1; --i) {
        const double g = gates[h][i - 1];
        const double up_left = upstream[2 * i];
        const double up_right = upstream[2 * i + 1];
        upstream[i] = g * up_left + (1.0 - g) * up_right;

        const double dg = mass[h][i] * (up_left - up_right);
        const double slope = g * (1.0 - g) / tree.temperature;
        const double common = inv_batch * dg * slope;
        auto wrow = grads.weight_grads[h].row(i - 1);
        for (std::size_t m = 0; m < wrow.size(); ++m) {
          wrow[m] += common * sample.x[m];
        }
        grads.threshold_grads[h][i - 1] -= common;
      }
    }
  }

  grads.mean_loss *= inv_batch;
  return grads;
}

}  // namespace radf::forest
