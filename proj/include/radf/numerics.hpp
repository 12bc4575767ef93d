#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace radf::numerics {

enum class LossKind { MSE, MAE, CrossEntropy };

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

// Target of one sample. MSE/MAE use `values` (width F); CrossEntropy uses
// `class_index` into [0, F) and leaves `values` empty.
struct TargetView {
  std::span<const double> values;
  std::size_t class_index = 0;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Logistic function with the argument clamped to [-40, 40] so the result is
// deterministic and finite for any finite input. Throws std::invalid_argument
// on non-finite input.
double sigmoid(double z);

// Loss value and gradient w.r.t. `pred`.
//   MSE: mean over components of squared residuals.
//   MAE: mean over components of absolute residuals, subgradient 0 at kinks.
//   CrossEntropy: `pred` holds logits; softmax applied with max-subtraction.
LossGrad loss_and_grad(std::span<const double> pred, const TargetView& target,
                       LossKind kind);

// Central finite difference of a scalar function, coordinate by coordinate.
// Independent of any analytic gradient path; used as the gradient oracle.
// Throws NumericError if f evaluates to a non-finite value.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h);

}  // namespace radf::numerics
