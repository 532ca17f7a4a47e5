#include "perfquant/stnet/loss.hpp"

#include <cmath>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_batch(std::size_t a, std::size_t b) {
  require(a == b, ErrorKind::precondition, "batch size mismatch");
  require(a > 0, ErrorKind::precondition, "empty batch");
}

}  // namespace

double integral_from_cbv(double cbv, const kinetics::KineticConstants& k, double kav) {
  return cbv / (100.0 * kinetics::hematocrit_factor(k, kav));
}

double physical_loss(std::span<const double> pred_cbv, std::span<const double> conc_integral,
                     const kinetics::KineticConstants& k, double kav) {
  check_batch(pred_cbv.size(), conc_integral.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_cbv.size(); ++i)
    sum += std::abs(conc_integral[i] - integral_from_cbv(pred_cbv[i], k, kav));
  return sum / static_cast<double>(pred_cbv.size());
}

double supervised_mae(std::span<const Triple> pred, std::span<const Triple> target) {
  check_batch(pred.size(), target.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (int j = 0; j < 3; ++j) sum += std::abs(pred[i][j] - target[i][j]);
  return sum / (3.0 * static_cast<double>(pred.size()));
}

LossTerms total_loss(std::span<const Triple> pred, std::span<const Triple> target,
                     std::span<const double> conc_integral, const Normalization& norm, double w_phys,
                     const kinetics::KineticConstants& k, double kav) {
  check_batch(pred.size(), conc_integral.size());
  LossTerms terms;
  terms.supervised = supervised_mae(pred, target);
  std::vector<double> cbv(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) cbv[i] = norm.to_physical(0, pred[i][0]);
  terms.physical = physical_loss(cbv, conc_integral, k, kav);
  terms.total = terms.supervised + w_phys * terms.physical;
  return terms;
}

std::vector<Triple> total_loss_gradient(std::span<const Triple> pred, std::span<const Triple> target,
                                        std::span<const double> conc_integral, const Normalization& norm,
                                        double w_phys, const kinetics::KineticConstants& k, double kav) {
  check_batch(pred.size(), target.size());
  check_batch(pred.size(), conc_integral.size());
  const double n = static_cast<double>(pred.size());
  const double dfdz = norm.target_scale[0] / (100.0 * kinetics::hematocrit_factor(k, kav));
  std::vector<Triple> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) grad[i][j] = sign(pred[i][j] - target[i][j]) / (3.0 * n);
    const double f = integral_from_cbv(norm.to_physical(0, pred[i][0]), k, kav);
    grad[i][0] += w_phys * sign(f - conc_integral[i]) * dfdz / n;
  }
  return grad;
}

}  // namespace perfquant::stnet
