#include "perfquant/tracer_kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perfquant/error.hpp"

namespace perfquant {

std::string_view to_string(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::signal: return "signal";
    case SeriesKind::concentration: return "concentration";
    case SeriesKind::residue: return "residue";
  }
  return "unknown";
}

SeriesKind series_kind_from_string(std::string_view name) {
  if (name == "signal") return SeriesKind::signal;
  if (name == "concentration") return SeriesKind::concentration;
  if (name == "residue") return SeriesKind::residue;
  fail(ErrorKind::format, "unknown series kind '" + std::string(name) + "'");
}

void TimeSeries::validate() const {
  require(values.size() >= 2, ErrorKind::precondition, "time series needs at least 2 samples");
  require(std::isfinite(dt_s) && dt_s > 0.0, ErrorKind::precondition, "time series dt_s must be > 0");
  for (double v : values) require(std::isfinite(v), ErrorKind::precondition, "time series contains non-finite values");
}

}  // namespace perfquant

namespace perfquant::kinetics {

void KineticConstants::validate() const {
  require(std::isfinite(rho) && rho > 0.0, ErrorKind::precondition, "rho must be > 0");
  require(h_lv >= 0.0 && h_lv < 1.0, ErrorKind::precondition, "h_lv must lie in [0,1)");
  require(h_sv >= 0.0 && h_sv < 1.0, ErrorKind::precondition, "h_sv must lie in [0,1)");
  require(std::isfinite(x_scale) && x_scale > 0.0, ErrorKind::precondition, "x_scale must be > 0");
}

TimeSeries signal_to_concentration(const TimeSeries& s, double s0, double te_s, const KineticConstants& k) {
  s.validate();
  k.validate();
  require(std::isfinite(s0) && s0 > 0.0, ErrorKind::precondition, "baseline s0 must be > 0");
  require(std::isfinite(te_s) && te_s > 0.0, ErrorKind::precondition, "te_s must be > 0");
  TimeSeries c{std::vector<double>(s.size()), s.dt_s, SeriesKind::concentration};
  const double scale = -k.x_scale / te_s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    require(s[i] > 0.0, ErrorKind::numeric, "signal sample " + std::to_string(i) + " is not positive");
    c.values[i] = scale * std::log(s[i] / s0);
  }
  return c;
}

double compute_baseline(std::span<const double> s, int n_pre) {
  require(n_pre >= 1, ErrorKind::precondition, "n_pre must be >= 1");
  require(static_cast<std::size_t>(n_pre) < s.size(), ErrorKind::precondition,
          "n_pre must be shorter than the series");
  double sum = 0.0;
  for (int i = 0; i < n_pre; ++i) sum += s[static_cast<std::size_t>(i)];
  const double mean = sum / n_pre;
  require(mean > 0.0, ErrorKind::numeric, "baseline signal is not positive");
  return mean;
}

double integrate(std::span<const double> values, double dt_s) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return dt_s * sum;
}

double compute_kav(const TimeSeries& c_a, const TimeSeries& c_v) {
  c_a.validate();
  c_v.validate();
  require(c_a.dt_s == c_v.dt_s, ErrorKind::precondition, "AIF and VOF must share dt_s");
  const double venous = integrate(c_v);
  require(venous > 0.0, ErrorKind::numeric, "VOF area must be positive");
  return integrate(c_a) / venous;
}

double hematocrit_factor(const KineticConstants& k, double kav) {
  return kav * (1.0 - k.h_sv) / (k.rho * (1.0 - k.h_lv));
}

double cbv_from_integral(double conc_integral, const KineticConstants& k, double kav) {
  return 100.0 * hematocrit_factor(k, kav) * conc_integral;
}

double compute_cbv(const TimeSeries& c_t, const KineticConstants& k, double kav) {
  c_t.validate();
  return cbv_from_integral(integrate(c_t), k, kav);
}

double compute_cbf(const TimeSeries& r, const KineticConstants& k, double kav) {
  require(!r.values.empty(), ErrorKind::precondition, "residue series is empty");
  const double peak = *std::max_element(r.values.begin(), r.values.end());
  return 100.0 * 60.0 * hematocrit_factor(k, kav) * peak;
}

Mtt compute_mtt(double cbv, double cbf) {
  if (!(cbf > 0.0)) return {};
  return {60.0 * cbv / cbf, true};
}

double compute_tmax(const TimeSeries& r) {
  require(!r.values.empty(), ErrorKind::precondition, "residue series is empty");
  // max_element returns the first maximum.
  const auto it = std::max_element(r.values.begin(), r.values.end());
  return static_cast<double>(std::distance(r.values.begin(), it)) * r.dt_s;
}

TimeSeries convolve_forward(const TimeSeries& c_a, const TimeSeries& r) {
  require(c_a.size() == r.size(), ErrorKind::precondition, "convolve_forward: length mismatch");
  require(c_a.dt_s == r.dt_s, ErrorKind::precondition, "convolve_forward: dt_s mismatch");
  const std::size_t n = c_a.size();
  TimeSeries out{std::vector<double>(n, 0.0), c_a.dt_s, SeriesKind::concentration};
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += c_a[j] * r[i - j];
    out.values[i] = c_a.dt_s * acc;
  }
  return out;
}

}  // namespace perfquant::kinetics
