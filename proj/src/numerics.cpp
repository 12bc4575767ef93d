#include "radf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radf/error.hpp"

namespace radf::numerics {

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::MSE: return "mse";
    case LossKind::MAE: return "mae";
    case LossKind::CrossEntropy: return "cross_entropy";
  }
  throw std::invalid_argument("loss_kind_name: unknown kind");
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "mse") return LossKind::MSE;
  if (name == "mae") return LossKind::MAE;
  if (name == "cross_entropy") return LossKind::CrossEntropy;
  throw std::invalid_argument("unknown loss kind: " + name);
}

double sigmoid(double z) {
  if (!std::isfinite(z)) {
    throw std::invalid_argument("sigmoid: non-finite input");
  }
  const double clamped = std::clamp(z, -40.0, 40.0);
  return 1.0 / (1.0 + std::exp(-clamped));
}

namespace {

LossGrad mse_loss(std::span<const double> pred, std::span<const double> y) {
  const std::size_t width = pred.size();
  LossGrad out;
  out.grad.resize(width);
  for (std::size_t f = 0; f < width; ++f) {
    const double r = pred[f] - y[f];
    out.loss += r * r;
    out.grad[f] = 2.0 * r / static_cast<double>(width);
  }
  out.loss /= static_cast<double>(width);
  return out;
}

LossGrad mae_loss(std::span<const double> pred, std::span<const double> y) {
  const std::size_t width = pred.size();
  LossGrad out;
  out.grad.resize(width);
  for (std::size_t f = 0; f < width; ++f) {
    const double r = pred[f] - y[f];
    out.loss += std::abs(r);
    // subgradient at the kink is 0
    const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    out.grad[f] = sign / static_cast<double>(width);
  }
  out.loss /= static_cast<double>(width);
  return out;
}

LossGrad cross_entropy_loss(std::span<const double> logits, std::size_t cls) {
  const std::size_t width = logits.size();
  if (cls >= width) {
    throw std::invalid_argument("loss_and_grad: class index out of range");
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - zmax);
  const double log_denom = std::log(denom);

  LossGrad out;
  out.loss = -(logits[cls] - zmax - log_denom);
  out.grad.resize(width);
  for (std::size_t f = 0; f < width; ++f) {
    const double softmax_f = std::exp(logits[f] - zmax) / denom;
    out.grad[f] = softmax_f - (f == cls ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace

LossGrad loss_and_grad(std::span<const double> pred, const TargetView& target,
                       LossKind kind) {
  if (pred.empty()) {
    throw std::invalid_argument("loss_and_grad: empty prediction");
  }
  if (kind == LossKind::CrossEntropy) {
    return cross_entropy_loss(pred, target.class_index);
  }
  if (target.values.size() != pred.size()) {
    throw std::invalid_argument("loss_and_grad: prediction/target width mismatch");
  }
  return kind == LossKind::MSE ? mse_loss(pred, target.values)
                               : mae_loss(pred, target.values);
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_diff_grad: step must be positive");
  }
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace radf::numerics
