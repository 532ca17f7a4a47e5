#include "perfquant/stnet/inference.hpp"

#include <algorithm>

#include "perfquant/error.hpp"
#include "perfquant/stnet/patches.hpp"
#include "perfquant/tracer_kinetics.hpp"

namespace perfquant::stnet {

std::vector<Triple> predict_batch(const ModelParams& m, std::span<const NetInput> inputs) {
  Workspace ws;
  std::vector<Triple> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(predict_physical(m, in, ws));
  return out;
}

io::ParameterMaps predict_volume(const io::Volume4D& v, const io::Mask3D& brain, const TimeSeries& aif,
                                 const ModelParams& m, PredictStats* stats) {
  const auto& h = v.header();
  require(h.nt() == kTimeLength, ErrorKind::precondition, "prediction needs nt = 50");
  require(brain.dims == h.spatial(), ErrorKind::precondition, "brain mask dims do not match the volume");
  auto maps = io::ParameterMaps::zeros(h.spatial(), h.voxel_mm);
  PredictStats local;
  Workspace ws;
  for (std::size_t i = 0; i < h.voxels(); ++i) {
    if (!brain(i)) continue;
    ++local.voxels;
    const auto c = io::voxel_coords(h.spatial(), i);
    double sum = 0.0;
    for (int t = 0; t < m.norm.n_pre; ++t) sum += v.at(c[0], c[1], c[2], t);
    if (!(sum > 0.0)) {
      ++local.skipped_baseline;
      continue;
    }
    const Patch p = crop_patch(v, c, aif, m.norm.n_pre);
    const Triple y = predict_physical(m, make_input(p, m.norm), ws);
    if (y[0] < 0.0 || y[1] < 0.0 || y[2] < 0.0) ++local.clamped_negative;
    maps.cbv[i] = std::max(y[0], 0.0);
    maps.cbf[i] = std::max(y[1], 0.0);
    maps.tmax[i] = std::max(y[2], 0.0);
    const auto mtt = kinetics::compute_mtt(maps.cbv[i], maps.cbf[i]);
    if (!mtt.valid) ++local.undefined_mtt;
    maps.mtt[i] = mtt.seconds;
  }
  if (stats) *stats = local;
  return maps;
}

}  // namespace perfquant::stnet
