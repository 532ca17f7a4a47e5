#include "perfquant/phantom.hpp"

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "perfquant/error.hpp"

namespace perfquant::phantom {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void validate_class(const TissueClass& c, const std::array<int, 4>& dims, double dt_s) {
  const std::string tag = "class '" + c.name + "': ";
  require(c.cbf > 0.0 && std::isfinite(c.cbf), ErrorKind::precondition, tag + "cbf must be > 0");
  require(c.cbv > 0.0 && std::isfinite(c.cbv), ErrorKind::precondition, tag + "cbv must be > 0");
  require(c.delay_s >= 0.0 && std::isfinite(c.delay_s), ErrorKind::precondition, tag + "delay_s must be >= 0");
  const double steps = c.delay_s / dt_s;
  require(std::abs(steps - std::round(steps)) < 1e-9, ErrorKind::precondition,
          tag + "delay_s must be a multiple of dt_s");
  const double mtt = c.mtt();
  require(mtt >= dt_s - 1e-12 && mtt <= dims[3] * dt_s / 2.0 + 1e-12, ErrorKind::precondition,
          tag + "implied mtt must lie in [dt, nt*dt/2]");
  const Box& b = c.box;
  require(b.x0 >= 0 && b.x1 <= dims[0] && b.x0 < b.x1 && b.y0 >= 0 && b.y1 <= dims[1] && b.y0 < b.y1 &&
              b.z0 >= 0 && b.z1 <= dims[2] && b.z0 < b.z1,
          ErrorKind::precondition, tag + "box must be nonempty and inside the volume");
}

}  // namespace

void GammaVariateParams::validate() const {
  require(alpha > 0.0, ErrorKind::precondition, "gamma variate alpha must be > 0");
  require(beta > 0.0, ErrorKind::precondition, "gamma variate beta must be > 0");
  require(amplitude > 0.0, ErrorKind::precondition, "gamma variate amplitude must be > 0");
  require(t0_s >= 0.0, ErrorKind::precondition, "gamma variate t0_s must be >= 0");
}

PhantomConfig PhantomConfig::desk() {
  PhantomConfig cfg;
  cfg.classes = {
      {"GM", 60.0, 4.0, 0.0, false, {2, 30, 2, 30, 0, 4}},
      {"WM", 25.0, 2.0, 0.0, false, {7, 25, 7, 25, 0, 4}},
      {"lesion", 12.0, 1.8, 8.0, true, {15, 27, 9, 21, 0, 4}},
  };
  return cfg;
}

io::VolumeHeader PhantomConfig::header() const {
  io::VolumeHeader h;
  h.dims = dims;
  h.dt_s = dt_s;
  h.te_s = te_s;
  h.voxel_mm = voxel_mm;
  return h;
}

TimeSeries gamma_variate(const GammaVariateParams& p, int n, double dt_s) {
  p.validate();
  require(n >= 2 && dt_s > 0.0, ErrorKind::precondition, "gamma_variate: need n >= 2 and dt_s > 0");
  TimeSeries c{std::vector<double>(static_cast<std::size_t>(n), 0.0), dt_s, SeriesKind::concentration};
  const double peak_tau = p.alpha * p.beta;
  for (int i = 0; i < n; ++i) {
    const double tau = i * dt_s - p.t0_s;
    if (tau <= 0.0) continue;
    c.values[static_cast<std::size_t>(i)] =
        p.amplitude * std::pow(tau / peak_tau, p.alpha) * std::exp(p.alpha - tau / p.beta);
  }
  return c;
}

TimeSeries residue_exponential(double mtt_s, int n, double dt_s) {
  require(mtt_s > 0.0, ErrorKind::precondition, "residue_exponential: mtt must be > 0");
  require(n >= 2 && dt_s > 0.0, ErrorKind::precondition, "residue_exponential: need n >= 2 and dt_s > 0");
  TimeSeries r{std::vector<double>(static_cast<std::size_t>(n)), dt_s, SeriesKind::residue};
  for (int i = 0; i < n; ++i) r.values[static_cast<std::size_t>(i)] = std::exp(-i * dt_s / mtt_s);
  return r;
}

double area_matched_time_constant(double mtt_s, double dt_s) {
  require(mtt_s >= dt_s, ErrorKind::precondition, "area-matched residue needs mtt >= dt");
  if (mtt_s == dt_s) return 0.0;  // R = [1, 0, 0, ...]
  return -dt_s / std::log1p(-dt_s / mtt_s);
}

TimeSeries make_aif(const PhantomConfig& cfg) {
  TimeSeries aif = gamma_variate(cfg.aif, cfg.dims[3], cfg.dt_s);
  if (cfg.aif_unit_area) {
    const double area = kinetics::integrate(aif);
    require(area > 0.0, ErrorKind::precondition, "AIF has no area inside the sampling window");
    for (double& v : aif.values) v /= area;
  }
  return aif;
}

TimeSeries make_vof(const TimeSeries& aif, int delay_samples, double area_ratio) {
  require(delay_samples >= 0, ErrorKind::precondition, "VOF delay must be >= 0");
  require(area_ratio > 0.0, ErrorKind::precondition, "VOF area ratio must be > 0");
  TimeSeries vof{std::vector<double>(aif.size(), 0.0), aif.dt_s, SeriesKind::concentration};
  for (std::size_t i = static_cast<std::size_t>(delay_samples); i < aif.size(); ++i)
    vof.values[i] = aif.values[i - static_cast<std::size_t>(delay_samples)];
  const double delayed_area = kinetics::integrate(vof);
  require(delayed_area > 0.0, ErrorKind::precondition, "VOF delay pushes the bolus out of the window");
  const double scale = area_ratio * kinetics::integrate(aif) / delayed_area;
  for (double& v : vof.values) v *= scale;
  return vof;
}

PhantomTruth generate_truth(const PhantomConfig& cfg) {
  cfg.header().validate();
  require(!cfg.classes.empty(), ErrorKind::precondition, "phantom needs at least one tissue class");
  for (const auto& c : cfg.classes) validate_class(c, cfg.dims, cfg.dt_s);

  const io::Dims3 d{cfg.dims[0], cfg.dims[1], cfg.dims[2]};
  const std::size_t n = io::voxel_count(d);
  PhantomTruth truth;
  truth.class_index.assign(n, -1);
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    const Box& b = cfg.classes[ci].box;
    for (int z = b.z0; z < b.z1; ++z)
      for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x) truth.class_index[io::voxel_index(d, x, y, z)] = static_cast<int>(ci);
  }

  truth.maps = io::ParameterMaps::zeros(d, cfg.voxel_mm);
  truth.brain_mask = io::Mask3D::zeros(d, cfg.voxel_mm);
  truth.lesion_mask = io::Mask3D::zeros(d, cfg.voxel_mm);
  for (std::size_t v = 0; v < n; ++v) {
    const int ci = truth.class_index[v];
    if (ci < 0) continue;
    const TissueClass& c = cfg.classes[static_cast<std::size_t>(ci)];
    truth.maps.cbv[v] = c.cbv;
    truth.maps.cbf[v] = c.cbf;
    truth.maps.mtt[v] = c.mtt();
    truth.maps.tmax[v] = c.delay_s;
    truth.brain_mask.data[v] = 1;
    truth.lesion_mask.data[v] = c.lesion ? 1 : 0;
  }
  truth.aif = make_aif(cfg);
  truth.vof = make_vof(truth.aif, cfg.vof_delay_samples, cfg.vof_area_ratio);
  return truth;
}

TimeSeries tissue_concentration(const TimeSeries& aif, double cbf, double cbv, double delay_s,
                                const kinetics::KineticConstants& k, double kav) {
  const int n = static_cast<int>(aif.size());
  const double dt = aif.dt_s;
  const double flow = cbf / (100.0 * 60.0 * kinetics::hematocrit_factor(k, kav));
  const double tau = area_matched_time_constant(60.0 * cbv / cbf, dt);
  const TimeSeries base = tau > 0.0 ? residue_exponential(tau, n, dt) : TimeSeries{};
  const int shift = static_cast<int>(std::lround(delay_s / dt));
  TimeSeries r{std::vector<double>(static_cast<std::size_t>(n), 0.0), dt, SeriesKind::residue};
  for (int i = shift; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i - shift);
    const double shape = tau > 0.0 ? base.values[j] : (j == 0 ? 1.0 : 0.0);
    r.values[static_cast<std::size_t>(i)] = flow * shape;
  }
  return kinetics::convolve_forward(aif, r);
}

TimeSeries concentration_to_signal(const TimeSeries& c, double s0, double te_s, const kinetics::KineticConstants& k) {
  require(s0 > 0.0 && te_s > 0.0, ErrorKind::precondition, "concentration_to_signal: s0 and te_s must be > 0");
  TimeSeries s{std::vector<double>(c.size()), c.dt_s, SeriesKind::signal};
  for (std::size_t i = 0; i < c.size(); ++i) s.values[i] = s0 * std::exp(-te_s * c.values[i] / k.x_scale);
  return s;
}

io::Volume4D synthesize_dsc(const PhantomTruth& truth, const kinetics::KineticConstants& k,
                            const io::VolumeHeader& header, double s0, std::optional<double> snr,
                            std::uint64_t seed) {
  header.validate();
  k.validate();
  const io::Dims3 d = header.spatial();
  require(d == truth.maps.dims, ErrorKind::precondition, "truth dims do not match the volume header");
  require(truth.aif.size() == static_cast<std::size_t>(header.nt()), ErrorKind::precondition,
          "AIF length does not match nt");
  require(truth.aif.dt_s == header.dt_s, ErrorKind::precondition, "AIF dt_s does not match the header");
  require(s0 > 0.0, ErrorKind::precondition, "s0 must be > 0");
  if (snr) require(*snr > 0.0, ErrorKind::precondition, "snr must be > 0");

  const double kav = kinetics::compute_kav(truth.aif, truth.vof);
  const std::size_t nvox = header.voxels();
  const auto nt = static_cast<std::size_t>(header.nt());
  std::vector<double> data(header.samples(), s0);

  // Voxels with identical parameters share one noiseless curve.
  std::map<std::tuple<double, double, double>, std::vector<double>> cache;
  auto signal_for = [&](std::size_t v) -> const std::vector<double>* {
    if (truth.maps.cbv[v] <= 0.0 || truth.maps.cbf[v] <= 0.0) return nullptr;
    const auto key = std::make_tuple(truth.maps.cbf[v], truth.maps.cbv[v], truth.maps.tmax[v]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const TimeSeries c = tissue_concentration(truth.aif, truth.maps.cbf[v], truth.maps.cbv[v],
                                                truth.maps.tmax[v], k, kav);
      it = cache.emplace(key, concentration_to_signal(c, s0, header.te_s, k).values).first;
    }
    return &it->second;
  };

  for (std::size_t v = 0; v < nvox; ++v) {
    const std::vector<double>* curve = signal_for(v);
    if (curve)
      for (std::size_t t = 0; t < nt; ++t) data[v + nvox * t] = (*curve)[t];
    if (!snr) continue;
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(v))));
    std::normal_distribution<double> noise(0.0, s0 / *snr);
    for (std::size_t t = 0; t < nt; ++t) {
      double& s = data[v + nvox * t];
      s = std::max(0.0, s + noise(rng));
    }
  }
  return io::Volume4D(header, std::move(data));
}

}  // namespace perfquant::phantom
