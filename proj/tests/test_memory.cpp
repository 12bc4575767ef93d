#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "radf/memory.hpp"

using namespace radf;
using memory::ResponseBank;
using memory::WritePlan;

TEST_CASE("init_bank is seeded and bounded") {
  const auto a = memory::init_bank(6, 3, 42);
  const auto b = memory::init_bank(6, 3, 42);
  const auto c = memory::init_bank(6, 3, 43);
  CHECK(a.cell_count() == 6);
  CHECK(a.width() == 3);
  CHECK(a == b);
  CHECK(a.cells.data != c.cells.data);
  for (double v : a.cells.data) {
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
  CHECK_THROWS_AS(memory::init_bank(0, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(memory::init_bank(3, 0, 1), std::invalid_argument);
}

TEST_CASE("read blends cells by weight") {
  ResponseBank bank;
  bank.cells = Matrix(2, 1);
  bank.cells(0, 0) = 2.0;
  bank.cells(1, 0) = 4.0;

  const std::vector<double> one_hot{1.0, 0.0};
  CHECK(memory::read(bank, one_hot) == std::vector<double>{2.0});

  const std::vector<double> even{0.5, 0.5};
  CHECK(memory::read(bank, even) == std::vector<double>{3.0});

  const std::vector<double> none{0.0, 0.0};
  CHECK(memory::read(bank, none) == std::vector<double>{0.0});
}

TEST_CASE("read is linear in the weights") {
  const auto bank = memory::init_bank(5, 3, 7);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w1(5), w2(5), sum(5);
    for (std::size_t i = 0; i < 5; ++i) {
      w1[i] = dist(rng);
      w2[i] = dist(rng);
      sum[i] = w1[i] + w2[i];
    }
    const auto r1 = memory::read(bank, w1);
    const auto r2 = memory::read(bank, w2);
    const auto rs = memory::read(bank, sum);
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(std::abs(rs[f] - (r1[f] + r2[f])) <= 1e-12);
    }
  }
}

TEST_CASE("read rejects a weight count mismatch") {
  const auto bank = memory::init_bank(4, 2, 1);
  const std::vector<double> short_weights{1.0, 0.0};
  CHECK_THROWS_AS(memory::read(bank, short_weights), std::invalid_argument);
}

TEST_CASE("write with zero weights is the identity") {
  const auto bank = memory::init_bank(4, 2, 3);
  WritePlan plan;
  plan.weights.assign(4, 0.0);
  plan.erase.assign(2, 1.0);
  plan.add = Matrix(4, 2, 9.0);
  const auto after = memory::write(bank, plan);
  CHECK(after == bank);
}

TEST_CASE("write with full weight and erase replaces the cell") {
  ResponseBank bank;
  bank.cells = Matrix(1, 1, 1.0);
  WritePlan plan;
  plan.weights = {1.0};
  plan.erase = {1.0};
  plan.add = Matrix(1, 1, 1.5);
  const auto after = memory::write(bank, plan);
  CHECK(after.cells(0, 0) == 1.5);
}

TEST_CASE("write applies erase then add") {
  // Q' = Q (1 - w e) + w a = 1 (1 - 0.5 * 0.8) + 0.5 * 1.1 = 1.15
  ResponseBank bank;
  bank.cells = Matrix(1, 1, 1.0);
  WritePlan plan;
  plan.weights = {0.5};
  plan.erase = {0.8};
  plan.add = Matrix(1, 1, 1.1);
  const auto after = memory::write(bank, plan);
  CHECK(after.cells(0, 0) == doctest::Approx(1.15).epsilon(1e-15));
  CHECK(bank.cells(0, 0) == 1.0);  // input bank untouched
}

TEST_CASE("write validates plan shapes and ranges") {
  const auto bank = memory::init_bank(2, 2, 1);
  WritePlan plan;
  plan.weights = {0.5, 0.5};
  plan.erase = {0.0, 0.0};
  plan.add = Matrix(2, 2);

  auto bad = plan;
  bad.weights = {0.5};
  CHECK_THROWS_AS(memory::write(bank, bad), std::invalid_argument);

  bad = plan;
  bad.add = Matrix(2, 3);
  CHECK_THROWS_AS(memory::write(bank, bad), std::invalid_argument);

  bad = plan;
  bad.weights[0] = 1.2;
  CHECK_THROWS_AS(memory::write(bank, bad), std::invalid_argument);

  bad = plan;
  bad.erase[1] = -0.1;
  CHECK_THROWS_AS(memory::write(bank, bad), std::invalid_argument);
}

TEST_CASE("gradient write with zero decay reduces to a gradient step") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> grad_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> prob_dist(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto bank = memory::init_bank(6, 2, 100 + trial);
    Matrix grads(6, 2);
    std::vector<double> probs(6);
    for (double& g : grads.data) g = grad_dist(rng);
    for (double& p : probs) p = prob_dist(rng);

    const auto plan = memory::gradient_write_plan(grads, probs, 0.05, 0.0);
    const auto after = memory::write(bank, plan);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t f = 0; f < 2; ++f) {
        const double sgd = bank.cells(i, f) - 0.05 * grads(i, f);
        CHECK(std::abs(after.cells(i, f) - sgd) <= 1e-12);
      }
    }
  }
}

TEST_CASE("gradient write with decay follows the erase/add composition") {
  // w = 0.5, e = 0.1, a = -eta dQ / w = -0.4
  // Q' = 1 (1 - 0.5 * 0.1) + 0.5 * (-0.4) = 0.75
  ResponseBank bank;
  bank.cells = Matrix(1, 1, 1.0);
  Matrix grads(1, 1, 2.0);
  const std::vector<double> probs{0.5};
  const auto plan = memory::gradient_write_plan(grads, probs, 0.1, 0.1);
  CHECK(plan.erase == std::vector<double>{0.1});
  CHECK(plan.add(0, 0) == doctest::Approx(-0.4).epsilon(1e-15));
  const auto after = memory::write(bank, plan);
  CHECK(after.cells(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("cells no sample reaches stay bitwise unchanged") {
  const auto bank = memory::init_bank(3, 2, 9);
  Matrix grads(3, 2, 5.0);
  const std::vector<double> probs{0.0, 1.0, 0.0};
  const auto plan = memory::gradient_write_plan(grads, probs, 0.1, 0.0);
  CHECK(plan.add(0, 0) == 0.0);  // dead cell gets no compensation
  CHECK(plan.add(2, 1) == 0.0);
  const auto after = memory::write(bank, plan);
  CHECK(after.cells.row(0)[0] == bank.cells.row(0)[0]);
  CHECK(after.cells.row(0)[1] == bank.cells.row(0)[1]);
  CHECK(after.cells.row(2)[0] == bank.cells.row(2)[0]);
  CHECK(after.cells.row(2)[1] == bank.cells.row(2)[1]);
  // the active cell moved by -eta dQ
  CHECK(after.cells(1, 0) == doctest::Approx(bank.cells(1, 0) - 0.5).epsilon(1e-12));
}

TEST_CASE("tiny weights are treated as dead to avoid huge compensations") {
  Matrix grads(1, 1, 2.0);
  const std::vector<double> probs{1e-12};
  const auto plan = memory::gradient_write_plan(grads, probs, 0.1, 0.0);
  CHECK(plan.add(0, 0) == 0.0);
}

TEST_CASE("gradient write validates its arguments") {
  Matrix grads(2, 1);
  const std::vector<double> probs{0.5, 0.5};
  CHECK_THROWS_AS(memory::gradient_write_plan(grads, probs, 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(memory::gradient_write_plan(grads, probs, 0.1, 1.5),
                  std::invalid_argument);
  const std::vector<double> bad_len{0.5};
  CHECK_THROWS_AS(memory::gradient_write_plan(grads, bad_len, 0.1, 0.0),
                  std::invalid_argument);
  const std::vector<double> bad_range{0.5, 1.5};
  CHECK_THROWS_AS(memory::gradient_write_plan(grads, bad_range, 0.1, 0.0),
                  std::invalid_argument);
}
