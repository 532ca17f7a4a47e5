#pragma once

#include <array>
#include <span>
#include <vector>

#include "perfquant/stnet/model.hpp"
#include "perfquant/tracer_kinetics.hpp"

namespace perfquant::stnet {

using Triple = std::array<double, 3>;

/// Concentration-curve integral implied by a CBV value (inverse of the CBV
/// formula): cbv / (100 * hematocrit factor).
double integral_from_cbv(double cbv, const kinetics::KineticConstants& k, double kav);

/// Mean over the batch of |conc_integral - integral_from_cbv(pred_cbv)|.
double physical_loss(std::span<const double> pred_cbv, std::span<const double> conc_integral,
                     const kinetics::KineticConstants& k, double kav);

/// Mean absolute error over the three outputs and the batch, in network units.
double supervised_mae(std::span<const Triple> pred, std::span<const Triple> target);

struct LossTerms {
  double supervised = 0.0;
  double physical = 0.0;
  double total = 0.0;
};

/// supervised_mae + w_phys * physical_loss. `pred` and `target` are in
/// network units; the CBV fed to the physical term is de-normalised.
LossTerms total_loss(std::span<const Triple> pred, std::span<const Triple> target,
                     std::span<const double> conc_integral, const Normalization& norm, double w_phys,
                     const kinetics::KineticConstants& k, double kav);

/// d total_loss / d pred, one triple per sample (subgradient 0 at kinks).
std::vector<Triple> total_loss_gradient(std::span<const Triple> pred, std::span<const Triple> target,
                                        std::span<const double> conc_integral, const Normalization& norm,
                                        double w_phys, const kinetics::KineticConstants& k, double kav);

}  // namespace perfquant::stnet
