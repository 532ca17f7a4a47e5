#pragma once

#include <span>
#include <vector>

#include "perfquant/stnet/loss.hpp"
#include "perfquant/stnet/model.hpp"
#include "perfquant/time_series.hpp"
#include "perfquant/volume_io.hpp"

namespace perfquant::stnet {

struct PredictStats {
  long long voxels = 0;
  long long skipped_baseline = 0;  // nonpositive baseline, left at 0
  long long clamped_negative = 0;
  long long undefined_mtt = 0;
};

/// Physical-unit predictions for a batch of inputs; each sample is
/// evaluated independently, so batch composition never changes a result.
std::vector<Triple> predict_batch(const ModelParams& m, std::span<const NetInput> inputs);

/// Stride-1 patch per brain voxel; negative outputs clamped to 0, MTT
/// derived from CBV and CBF, voxels outside the mask left at 0.
io::ParameterMaps predict_volume(const io::Volume4D& v, const io::Mask3D& brain, const TimeSeries& aif,
                                 const ModelParams& m, PredictStats* stats = nullptr);

}  // namespace perfquant::stnet
