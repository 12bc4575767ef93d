#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "radf/forest.hpp"
#include "radf/memory.hpp"

using namespace radf;
using forest::ForestParams;
using forest::GateParams;
using forest::Sample;
using forest::TreeTopology;

namespace {

// Depth-1 single-feature tree with given weight, threshold, temperature.
ForestParams stump(double a, double b, double tau) {
  ForestParams params;
  params.topology.depth = 1;
  params.feature_count = 1;
  params.response_width = 1;
  GateParams gates;
  gates.weights = Matrix(1, 1, a);
  gates.thresholds = {b};
  gates.temperature = tau;
  params.trees.push_back(gates);
  return params;
}

memory::ResponseBank bank_rows(std::initializer_list<double> values) {
  memory::ResponseBank bank;
  bank.cells = Matrix(values.size(), 1);
  std::size_t i = 0;
  for (double v : values) bank.cells(i++, 0) = v;
  return bank;
}

}  // namespace

TEST_CASE("topology counts follow the complete-binary-tree layout") {
  TreeTopology t1{1};
  CHECK(t1.internal_count() == 1);
  CHECK(t1.leaf_count() == 2);
  CHECK(t1.first_leaf() == 2);

  TreeTopology t3{3};
  CHECK(t3.internal_count() == 7);
  CHECK(t3.leaf_count() == 8);
  CHECK(t3.first_leaf() == 8);
}

TEST_CASE("gate values apply the tempered sigmoid to the margin") {
  const auto params = stump(1.0, 0.0, 1.0);
  const std::vector<double> origin{0.0};
  auto g = forest::gate_values(params.topology, params.trees[0], origin);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == 0.5);

  const std::vector<double> two{2.0};
  g = forest::gate_values(params.topology, params.trees[0], two);
  CHECK(g[0] == doctest::Approx(0.8807970779778823).epsilon(1e-15));

  const auto sharp = stump(1.0, 0.0, 0.5);
  g = forest::gate_values(sharp.topology, sharp.trees[0], two);
  CHECK(g[0] == doctest::Approx(0.9820137900379085).epsilon(1e-15));
}

TEST_CASE("gate values validate shapes and temperature") {
  const auto params = stump(1.0, 0.0, 1.0);
  const std::vector<double> wide{1.0, 2.0};
  CHECK_THROWS_AS(forest::gate_values(params.topology, params.trees[0], wide),
                  std::invalid_argument);

  auto bad = params;
  bad.trees[0].temperature = 0.0;
  const std::vector<double> x{1.0};
  CHECK_THROWS_AS(forest::gate_values(bad.topology, bad.trees[0], x),
                  std::invalid_argument);

  auto short_gates = params;
  short_gates.topology.depth = 2;
  CHECK_THROWS_AS(
      forest::gate_values(short_gates.topology, short_gates.trees[0], x),
      std::invalid_argument);
}

TEST_CASE("depth-2 leaf probabilities multiply the gates along each path") {
  TreeTopology topology{2};
  const std::vector<double> gates{0.3, 0.7, 0.4};
  const auto p = forest::leaf_probabilities(topology, gates);
  REQUIRE(p.size() == 4);
  CHECK(p[0] == doctest::Approx(0.21).epsilon(1e-15));  // left, left
  CHECK(p[1] == doctest::Approx(0.09).epsilon(1e-15));  // left, right
  CHECK(p[2] == doctest::Approx(0.28).epsilon(1e-15));  // right, left
  CHECK(p[3] == doctest::Approx(0.42).epsilon(1e-15));  // right, right
  // right-then-left = (1 - g1) g3 exactly
  CHECK(p[2] == (1.0 - gates[0]) * gates[2]);
}

TEST_CASE("indifferent gates spread mass uniformly") {
  for (int depth = 1; depth <= 5; ++depth) {
    TreeTopology topology{depth};
    const std::vector<double> gates(topology.internal_count(), 0.5);
    const auto p = forest::leaf_probabilities(topology, gates);
    const double expected = 1.0 / static_cast<double>(topology.leaf_count());
    for (double v : p) CHECK(v == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("leaf probabilities sum to one for random gates") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    TreeTopology topology{1 + static_cast<int>(rng() % 6)};
    std::vector<double> gates(topology.internal_count());
    for (double& g : gates) g = dist(rng);
    const auto p = forest::leaf_probabilities(topology, gates);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("leaf probabilities validate the gate vector") {
  TreeTopology topology{2};
  const std::vector<double> short_gates{0.5, 0.5};
  CHECK_THROWS_AS(forest::leaf_probabilities(topology, short_gates),
                  std::invalid_argument);
  const std::vector<double> bad_range{0.5, 0.5, 1.5};
  CHECK_THROWS_AS(forest::leaf_probabilities(topology, bad_range),
                  std::invalid_argument);
}

TEST_CASE("init_forest is seeded and shaped correctly") {
  const auto a = forest::init_forest(3, 2, 4, 2, 1.0, 5);
  const auto b = forest::init_forest(3, 2, 4, 2, 1.0, 5);
  const auto c = forest::init_forest(3, 2, 4, 2, 1.0, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.tree_count() == 3);
  CHECK(a.total_leaves() == 12);
  REQUIRE(a.trees.size() == 3);
  const double bound = 1.0 / std::sqrt(4.0);
  for (const auto& tree : a.trees) {
    CHECK(tree.weights.rows == 3);
    CHECK(tree.weights.cols == 4);
    CHECK(tree.thresholds.size() == 3);
    CHECK(tree.temperature == 1.0);
    for (double w : tree.weights.data) {
      CHECK(w >= -bound);
      CHECK(w <= bound);
    }
    for (double t : tree.thresholds) {
      CHECK(t >= -0.5);
      CHECK(t <= 0.5);
    }
  }
  CHECK_THROWS_AS(forest::init_forest(0, 2, 4, 2, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(forest::init_forest(3, 0, 4, 2, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(forest::init_forest(3, 2, 4, 2, -1.0, 5), std::invalid_argument);
}

TEST_CASE("forward_tree reads the bank weighted by leaf probability") {
  const auto params = stump(1.0, 0.0, 1.0);
  const auto bank = bank_rows({0.0, 1.0});
  const std::vector<double> origin{0.0};
  const auto out = forest::forward_tree(params, bank, 0, origin);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 0.5);

  // saturate the gate left: all mass on the first cell
  const auto left = stump(1.0, -100.0, 1.0);
  const auto out_left = forest::forward_tree(left, bank, 0, origin);
  CHECK(out_left[0] == 0.0);

  CHECK_THROWS_AS(forest::forward_tree(params, bank, 1, origin),
                  std::invalid_argument);
}

TEST_CASE("forward_forest averages tree outputs in tree order") {
  ForestParams params;
  params.topology.depth = 1;
  params.feature_count = 1;
  params.response_width = 1;
  GateParams left;  // gate saturated left
  left.weights = Matrix(1, 1, 1.0);
  left.thresholds = {-100.0};
  GateParams right;  // gate saturated right
  right.weights = Matrix(1, 1, 1.0);
  right.thresholds = {100.0};
  params.trees = {left, right};

  // tree 0 owns cells 0..1, tree 1 owns cells 2..3
  const auto bank = bank_rows({10.0, 20.0, 30.0, 40.0});
  const std::vector<double> x{0.0};
  const auto out = forest::forward_forest(params, bank, x);
  REQUIRE(out.size() == 1);
  // tree 0 lands on its left cell (10), tree 1 on its right cell (40)
  CHECK(out[0] == doctest::Approx(25.0).epsilon(1e-12));

  CHECK_THROWS_AS(forest::forward_forest(params, bank_rows({1.0, 2.0}), x),
                  std::invalid_argument);
}

TEST_CASE("ensemble mean is invariant to tree order") {
  const auto params = forest::init_forest(3, 2, 2, 2, 1.0, 11);
  auto swapped = params;
  std::swap(swapped.trees[0], swapped.trees[2]);

  const auto bank = memory::init_bank(params.total_leaves(), 2, 12);
  auto swapped_bank = bank;
  // move the cell blocks with their trees
  const std::size_t block = params.topology.leaf_count();
  for (std::size_t j = 0; j < block; ++j) {
    for (std::size_t f = 0; f < 2; ++f) {
      swapped_bank.cells(0 * block + j, f) = bank.cells(2 * block + j, f);
      swapped_bank.cells(2 * block + j, f) = bank.cells(0 * block + j, f);
    }
  }

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x{dist(rng), dist(rng)};
    const auto a = forest::forward_forest(params, bank, x);
    const auto b = forest::forward_forest(swapped, swapped_bank, x);
    for (std::size_t f = 0; f < 2; ++f) {
      CHECK(std::abs(a[f] - b[f]) <= 1e-12);
    }
  }
}

TEST_CASE("hard routing follows margins with ties going left") {
  const auto params = stump(1.0, 0.5, 1.0);
  const std::vector<double> above{1.0};
  CHECK(forest::hard_route(params.topology, params.trees[0], above) == 2);
  const std::vector<double> below{0.0};
  CHECK(forest::hard_route(params.topology, params.trees[0], below) == 3);
  const std::vector<double> tie{0.5};
  CHECK(forest::hard_route(params.topology, params.trees[0], tie) == 2);
}

TEST_CASE("hard routing walks the expected depth-2 path") {
  ForestParams params;
  params.topology.depth = 2;
  params.feature_count = 1;
  params.response_width = 1;
  GateParams gates;
  gates.weights = Matrix(3, 1);
  gates.weights(0, 0) = 1.0;   // root: left iff x >= 0
  gates.weights(1, 0) = 1.0;   // node 2: left iff x >= -1
  gates.weights(2, 0) = 1.0;   // node 3: left iff x >= 1
  gates.thresholds = {0.0, -1.0, 1.0};
  params.trees.push_back(gates);

  const std::vector<double> a{0.5};   // root left, node 2 left -> leaf 4
  const std::vector<double> b{-0.5};  // root right, node 3 right -> leaf 7
  const std::vector<double> c{2.0};   // root left, node 2 left -> leaf 4
  CHECK(forest::hard_route(params.topology, params.trees[0], a) == 4);
  CHECK(forest::hard_route(params.topology, params.trees[0], b) == 7);
  CHECK(forest::hard_route(params.topology, params.trees[0], c) == 4);
}

TEST_CASE("cold gates concentrate mass on the hard-routing leaf") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto params = forest::init_forest(1, 3, 2, 1, 1e-3, 200 + trial);
    params.trees[0].temperature = 1e-3;
    std::vector<double> x{dist(rng), dist(rng)};

    // only keep draws where every margin on any node is comfortably nonzero
    const auto& tree = params.trees[0];
    bool safe = true;
    for (std::size_t n = 0; n < tree.thresholds.size(); ++n) {
      const double margin =
          tree.weights(n, 0) * x[0] + tree.weights(n, 1) * x[1] - tree.thresholds[n];
      if (std::abs(margin) < 0.1) safe = false;
    }
    if (!safe) continue;

    const auto routing = forest::route(params.topology, tree, x);
    const std::size_t hard = forest::hard_route(params.topology, tree, x);
    const std::size_t hard_index = hard - params.topology.first_leaf();
    CHECK(routing.leaf_probs[hard_index] >= 1.0 - 1e-6);
  }
}

TEST_CASE("warmer gates route more mass right when the root threshold rises") {
  const std::vector<double> x{0.0};
  double previous = 1.0;
  for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const auto params = stump(1.0, b, 1.0);
    const auto routing = forest::route(params.topology, params.trees[0], x);
    CHECK(routing.leaf_probs[0] < previous);
    previous = routing.leaf_probs[0];
  }
}

TEST_CASE("backward gradients on a fully worked stump") {
  // g = 0.5, leaves hold 0 and 1, target 0, squared loss:
  // prediction 0.5, loss 0.25, d loss / d threshold = +0.25,
  // d loss / d cell = 0.5 for both cells.
  const auto params = stump(1.0, 0.0, 1.0);
  const auto bank = bank_rows({0.0, 1.0});
  const std::vector<double> x{0.0};
  const std::vector<double> y{0.0};
  Sample sample{x, numerics::TargetView{y}};
  const auto grads = forest::backward(params, bank, std::span(&sample, 1),
                                      numerics::LossKind::MSE);
  CHECK(grads.mean_loss == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(grads.weight_grads[0](0, 0) == 0.0);
  CHECK(grads.threshold_grads[0][0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(grads.bank_grads(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(grads.bank_grads(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(grads.mean_leaf_probs == std::vector<double>{0.5, 0.5});
}

TEST_CASE("backward is zero at a perfect fit") {
  const auto params = stump(1.0, 0.0, 1.0);
  const auto bank = bank_rows({0.5, 0.5});
  const std::vector<double> x{0.0};
  const std::vector<double> y{0.5};
  Sample sample{x, numerics::TargetView{y}};
  const auto grads = forest::backward(params, bank, std::span(&sample, 1),
                                      numerics::LossKind::MSE);
  CHECK(grads.mean_loss == 0.0);
  CHECK(grads.weight_grads[0](0, 0) == 0.0);
  CHECK(grads.threshold_grads[0][0] == 0.0);
  CHECK(grads.bank_grads(0, 0) == 0.0);
  CHECK(grads.bank_grads(1, 0) == 0.0);
}

TEST_CASE("backward stays finite when gates saturate completely") {
  const auto params = stump(1.0, -1000.0, 1e-3);  // gate pinned at exactly 1
  const auto bank = bank_rows({0.0, 1.0});
  const std::vector<double> x{0.0};
  const std::vector<double> y{2.0};
  Sample sample{x, numerics::TargetView{y}};
  const auto grads = forest::backward(params, bank, std::span(&sample, 1),
                                      numerics::LossKind::MSE);
  CHECK(std::isfinite(grads.threshold_grads[0][0]));
  CHECK(std::isfinite(grads.weight_grads[0](0, 0)));
  CHECK(grads.threshold_grads[0][0] == 0.0);  // slope g(1-g) vanishes
  // all mass sits on the first cell, so only it gets gradient
  CHECK(grads.bank_grads(0, 0) == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(grads.bank_grads(1, 0) == 0.0);
}

TEST_CASE("backward matches finite differences on a small random forest") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  auto params = forest::init_forest(2, 2, 3, 2, 0.7, 301);
  const auto bank = memory::init_bank(params.total_leaves(), 2, 302);

  std::vector<double> x(3), y(2);
  for (double& v : x) v = dist(rng);
  for (double& v : y) v = dist(rng);
  Sample sample{x, numerics::TargetView{y}};

  const auto grads = forest::backward(params, bank, std::span(&sample, 1),
                                      numerics::LossKind::MSE);

  // thresholds, perturbed one at a time
  for (std::size_t tree = 0; tree < params.tree_count(); ++tree) {
    for (std::size_t n = 0; n < params.trees[tree].thresholds.size(); ++n) {
      const double saved = params.trees[tree].thresholds[n];
      const double h = 1e-6;
      params.trees[tree].thresholds[n] = saved + h;
      const auto up = forest::forward_forest(params, bank, x);
      params.trees[tree].thresholds[n] = saved - h;
      const auto down = forest::forward_forest(params, bank, x);
      params.trees[tree].thresholds[n] = saved;
      const auto lu = numerics::loss_and_grad(up, sample.target,
                                              numerics::LossKind::MSE);
      const auto ld = numerics::loss_and_grad(down, sample.target,
                                              numerics::LossKind::MSE);
      const double fd = (lu.loss - ld.loss) / (2.0 * h);
      CHECK(grads.threshold_grads[tree][n] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("backward rejects empty batches and mismatched banks") {
  const auto params = stump(1.0, 0.0, 1.0);
  const auto bank = bank_rows({0.0, 1.0});
  CHECK_THROWS_AS(
      forest::backward(params, bank, {}, numerics::LossKind::MSE),
      std::invalid_argument);

  const std::vector<double> x{0.0};
  const std::vector<double> y{0.0};
  Sample sample{x, numerics::TargetView{y}};
  const auto bad_bank = bank_rows({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(forest::backward(params, bad_bank, std::span(&sample, 1),
                                   numerics::LossKind::MSE),
                  std::invalid_argument);
}
