#include "perfquant/stnet/patches.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

namespace {

constexpr int kHalf = kPatchExtent / 2;

}  // namespace

Patch crop_patch(const io::Volume4D& v, const std::array<int, 3>& center, const TimeSeries& aif, int n_pre) {
  const auto& h = v.header();
  require(h.nt() == kTimeLength, ErrorKind::precondition, "patches need nt = 50");
  require(aif.size() == static_cast<std::size_t>(kTimeLength), ErrorKind::precondition, "AIF must have 50 samples");
  Patch p;
  p.center = center;
  p.signal.assign(kPatchValues, 0.0);
  for (int dx = 0; dx < kPatchExtent; ++dx) {
    const int x = center[0] + dx - kHalf;
    if (x < 0 || x >= h.dims[0]) continue;
    for (int dy = 0; dy < kPatchExtent; ++dy) {
      const int y = center[1] + dy - kHalf;
      if (y < 0 || y >= h.dims[1]) continue;
      double* dst = p.signal.data() + static_cast<std::size_t>(dx * kPatchExtent + dy) * kTimeLength;
      for (int t = 0; t < kTimeLength; ++t) dst[t] = v.at(x, y, center[2], t);
    }
  }
  const double* mid = p.signal.data() + static_cast<std::size_t>(kHalf * kPatchExtent + kHalf) * kTimeLength;
  const std::vector<double> series(mid, mid + kTimeLength);
  p.baseline = kinetics::compute_baseline(series, n_pre);
  p.aif_channel = aif.values;
  return p;
}

Patch make_patch(const io::Volume4D& v, const std::array<int, 3>& center, const TimeSeries& aif,
                 const kinetics::KineticConstants& k, int n_pre) {
  Patch p = crop_patch(v, center, aif, n_pre);
  const auto& h = v.header();
  const double* mid = p.signal.data() + static_cast<std::size_t>(kHalf * kPatchExtent + kHalf) * kTimeLength;
  const std::vector<double> series(mid, mid + kTimeLength);
  // Noise may push single samples to zero; floor them so the log stays finite.
  const double floor = 1e-6 * p.baseline;
  TimeSeries s{series, h.dt_s, SeriesKind::signal};
  for (double& x : s.values) x = std::max(x, floor);
  p.conc_integral = kinetics::integrate(kinetics::signal_to_concentration(s, p.baseline, h.te_s, k));
  return p;
}

std::vector<Patch> extract_patches(const io::Volume4D& v, const io::Mask3D& brain, const io::Mask3D* lesion,
                                   const TimeSeries& aif, const kinetics::KineticConstants& k,
                                   const PatchOptions& options, const io::ParameterMaps* labels) {
  const auto& h = v.header();
  require(h.nt() == kTimeLength, ErrorKind::precondition, "patches need nt = 50");
  require(options.stride >= 1, ErrorKind::precondition, "stride must be >= 1");
  require(options.ratio > 0.0, ErrorKind::precondition, "ratio must be > 0");
  require(brain.dims == h.spatial(), ErrorKind::precondition, "brain mask dims do not match the volume");
  if (lesion) require(lesion->dims == h.spatial(), ErrorKind::precondition, "lesion mask dims do not match the volume");
  if (labels) require(labels->dims == h.spatial(), ErrorKind::precondition, "label maps dims do not match the volume");

  std::vector<std::size_t> normal, diseased;
  for (std::size_t i = 0; i < h.voxels(); ++i) {
    if (!brain(i)) continue;
    const auto c = io::voxel_coords(h.spatial(), i);
    if (c[0] % options.stride != 0 || c[1] % options.stride != 0) continue;
    double sum = 0.0;
    for (int t = 0; t < options.n_pre; ++t) sum += v.at(c[0], c[1], c[2], t);
    if (!(sum > 0.0)) continue;
    (lesion && (*lesion)(i) ? diseased : normal).push_back(i);
  }
  require(!normal.empty() || !diseased.empty(), ErrorKind::precondition, "no patch candidates in the brain mask");

  if (lesion && !diseased.empty()) {
    const auto keep = static_cast<std::size_t>(std::llround(options.ratio * static_cast<double>(diseased.size())));
    if (keep < normal.size()) {
      std::mt19937_64 rng(options.seed);
      std::shuffle(normal.begin(), normal.end(), rng);
      normal.resize(keep);
    }
  }
  std::vector<std::size_t> chosen = normal;
  chosen.insert(chosen.end(), diseased.begin(), diseased.end());
  std::sort(chosen.begin(), chosen.end());

  std::vector<Patch> patches;
  patches.reserve(chosen.size());
  for (std::size_t i : chosen) {
    Patch p = make_patch(v, io::voxel_coords(h.spatial(), i), aif, k, options.n_pre);
    if (labels) p.labels = std::array<double, 3>{labels->cbv[i], labels->cbf[i], labels->tmax[i]};
    patches.push_back(std::move(p));
  }
  return patches;
}

NetInput make_input(const Patch& p, const Normalization& norm) {
  require(p.signal.size() == kPatchValues, ErrorKind::precondition, "patch must be 7x7x50");
  require(p.baseline > 0.0, ErrorKind::precondition, "patch baseline must be > 0");
  NetInput in;
  in.signal.resize(kPatchValues);
  for (std::size_t i = 0; i < kPatchValues; ++i) in.signal[i] = p.signal[i] / p.baseline;
  in.baseline_channel = p.baseline / norm.signal_scale;
  double peak = 0.0;
  for (double a : p.aif_channel) peak = std::max(peak, std::abs(a));
  in.aif_channel.resize(p.aif_channel.size());
  for (std::size_t i = 0; i < p.aif_channel.size(); ++i)
    in.aif_channel[i] = peak > 0.0 ? p.aif_channel[i] / peak : 0.0;
  return in;
}

}  // namespace perfquant::stnet
