#pragma once

#include <span>

#include "perfquant/time_series.hpp"

// Indicator-dilution relations between DSC signal, contrast concentration,
// the flow-scaled residue function and the four perfusion parameters.
// Everything here is a pure function of its arguments.
namespace perfquant::kinetics {

struct KineticConstants {
  double rho = 1.04;     // brain density, g/ml
  double h_lv = 0.45;    // large-vessel hematocrit
  double h_sv = 0.25;    // small-vessel hematocrit
  double x_scale = 1.0;  // concentration per unit delta-R2*

  void validate() const;
};

/// c(t) = x_scale * (-1/TE) * ln(s(t)/s0).
TimeSeries signal_to_concentration(const TimeSeries& s, double s0, double te_s, const KineticConstants& k);

/// Mean of the first n_pre samples (the pre-bolus baseline).
double compute_baseline(std::span<const double> s, int n_pre);
inline double compute_baseline(const TimeSeries& s, int n_pre) { return compute_baseline(s.values, n_pre); }

/// Trapezoidal quadrature over the whole series.
double integrate(std::span<const double> values, double dt_s);
inline double integrate(const TimeSeries& c) { return integrate(c.values, c.dt_s); }

/// Arterial-to-venous area ratio used to rescale the AIF.
double compute_kav(const TimeSeries& c_a, const TimeSeries& c_v);

/// kav * (1 - h_sv) / (rho * (1 - h_lv)).
double hematocrit_factor(const KineticConstants& k, double kav);

/// CBV in ml/100g from a tissue concentration curve.
double compute_cbv(const TimeSeries& c_t, const KineticConstants& k, double kav);
/// CBV from an already-integrated concentration curve.
double cbv_from_integral(double conc_integral, const KineticConstants& k, double kav);

/// CBF in ml/100g/min from the flow-scaled residue (1/s).
double compute_cbf(const TimeSeries& r, const KineticConstants& k, double kav);

struct Mtt {
  double seconds = 0.0;
  bool valid = false;  // false when cbf <= 0; seconds is then 0
};
Mtt compute_mtt(double cbv, double cbf);

/// Time of the residue peak; ties resolve to the earliest sample.
double compute_tmax(const TimeSeries& r);

/// Causal discrete convolution c_t[i] = dt * sum_{j<=i} c_a[j] r[i-j].
TimeSeries convolve_forward(const TimeSeries& c_a, const TimeSeries& r);

}  // namespace perfquant::kinetics
