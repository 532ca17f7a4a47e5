#include "perfquant/deconv.hpp"

#include <algorithm>
#include <cmath>

#include "perfquant/error.hpp"

namespace perfquant::deconv {

std::string_view to_string(Mode mode) {
  return mode == Mode::standard ? "standard" : "block_circulant";
}

Mode mode_from_string(std::string_view name) {
  if (name == "standard") return Mode::standard;
  if (name == "block_circulant") return Mode::block_circulant;
  fail(ErrorKind::schema, "unknown deconvolution mode '" + std::string(name) + "'");
}

void DeconvConfig::validate() const {
  require(threshold_frac >= 0.0 && threshold_frac <= 1.0, ErrorKind::precondition,
          "threshold_frac must lie in [0,1]");
  require(pad_factor >= 2, ErrorKind::precondition, "pad_factor must be >= 2");
}

linalg::Matrix build_convolution_matrix(const TimeSeries& c_a, Mode mode, int pad_factor) {
  c_a.validate();
  const std::size_t nt = c_a.size();
  const double dt = c_a.dt_s;
  if (mode == Mode::standard) {
    linalg::Matrix a(nt, nt);
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 0; j <= i; ++j) a(i, j) = dt * c_a[i - j];
    return a;
  }
  require(pad_factor >= 2, ErrorKind::precondition, "pad_factor must be >= 2");
  const std::size_t n = nt * static_cast<std::size_t>(pad_factor);
  std::vector<double> padded(n, 0.0);
  for (std::size_t i = 0; i < nt; ++i) padded[i] = c_a[i];
  linalg::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = dt * padded[(i + n - j) % n];
  return a;
}

TruncatedInverse::TruncatedInverse(const linalg::Matrix& a, double threshold_frac) {
  require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::precondition, "deconvolution matrix must be square");
  require(threshold_frac >= 0.0 && threshold_frac <= 1.0, ErrorKind::precondition,
          "threshold_frac must lie in [0,1]");
  const linalg::Svd svd = linalg::jacobi_svd(a);
  singular_ = svd.singular;
  const double sigma_max = singular_.front();
  require(sigma_max > 0.0, ErrorKind::numeric, "deconvolution matrix is zero");
  const double cutoff = threshold_frac * sigma_max;

  const std::size_t n = a.rows();
  pinv_ = linalg::Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = singular_[k];
    if (s <= 0.0 || s < cutoff) continue;
    ++rank_;
    const double inv = 1.0 / s;
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = svd.v(i, k) * inv;
      for (std::size_t j = 0; j < n; ++j) pinv_(i, j) += vik * svd.u(j, k);
    }
  }
}

std::vector<double> TruncatedInverse::solve(std::span<const double> rhs, std::size_t out_len) const {
  const std::size_t n = pinv_.rows();
  require(rhs.size() <= n && out_len <= n, ErrorKind::precondition, "right-hand side longer than the system");
  std::vector<double> r(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    const auto row = pinv_.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < rhs.size(); ++j) acc += row[j] * rhs[j];
    r[i] = acc;
  }
  return r;
}

TimeSeries svd_deconvolve(const linalg::Matrix& a, const TimeSeries& c_t, double threshold_frac) {
  c_t.validate();
  const TruncatedInverse inverse(a, threshold_frac);
  return TimeSeries{inverse.solve(c_t.values, c_t.size()), c_t.dt_s, SeriesKind::residue};
}

DeconvResult deconvolve_volume(const io::Volume4D& volume, const io::Mask3D& brain, const TimeSeries& aif,
                               const TimeSeries& vof, const kinetics::KineticConstants& k,
                               const DeconvConfig& cfg, int n_pre) {
  cfg.validate();
  k.validate();
  const auto& h = volume.header();
  require(brain.dims == h.spatial(), ErrorKind::precondition, "brain mask dims do not match the volume");
  require(aif.size() == static_cast<std::size_t>(h.nt()), ErrorKind::precondition, "AIF length must equal nt");
  require(std::abs(aif.dt_s - h.dt_s) <= 1e-12 * h.dt_s, ErrorKind::precondition, "AIF dt_s must equal volume dt_s");

  const double kav = kinetics::compute_kav(aif, vof);
  const TruncatedInverse inverse(build_convolution_matrix(aif, cfg.mode, cfg.pad_factor), cfg.threshold_frac);

  DeconvResult result{io::ParameterMaps::zeros(h.spatial(), h.voxel_mm), {}};
  auto& diag = result.diagnostics;
  diag["voxels_in_mask"] = 0;
  diag["voxels_processed"] = 0;
  diag["nonpositive_signal"] = 0;
  diag["undefined_mtt"] = 0;
  diag["clamped_negative"] = 0;
  diag["svd_rank"] = static_cast<long long>(inverse.rank());

  const std::size_t nt = static_cast<std::size_t>(h.nt());
  for (std::size_t v = 0; v < h.voxels(); ++v) {
    if (!brain(v)) continue;
    ++diag["voxels_in_mask"];
    const TimeSeries s = volume.signal_series(v);
    bool positive = true;
    for (double x : s.values) positive = positive && x > 0.0;
    if (!positive) {
      ++diag["nonpositive_signal"];
      continue;
    }
    const double s0 = kinetics::compute_baseline(s, n_pre);
    const TimeSeries c = kinetics::signal_to_concentration(s, s0, h.te_s, k);
    const TimeSeries r{inverse.solve(c.values, nt), h.dt_s, SeriesKind::residue};

    // Noise can drive either estimate below zero; maps stay nonnegative.
    double cbv = kinetics::compute_cbv(c, k, kav);
    double cbf = kinetics::compute_cbf(r, k, kav);
    if (cbv < 0.0 || cbf < 0.0) ++diag["clamped_negative"];
    cbv = std::max(cbv, 0.0);
    cbf = std::max(cbf, 0.0);
    const auto mtt = kinetics::compute_mtt(cbv, cbf);
    if (!mtt.valid) ++diag["undefined_mtt"];
    result.maps.cbv[v] = cbv;
    result.maps.cbf[v] = cbf;
    result.maps.mtt[v] = mtt.seconds;
    result.maps.tmax[v] = kinetics::compute_tmax(r);
    ++diag["voxels_processed"];
  }
  return result;
}

}  // namespace perfquant::deconv
