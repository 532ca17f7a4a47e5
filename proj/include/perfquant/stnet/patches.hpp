#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "perfquant/stnet/model.hpp"
#include "perfquant/time_series.hpp"
#include "perfquant/tracer_kinetics.hpp"
#include "perfquant/volume_io.hpp"

namespace perfquant::stnet {

/// A 7x7x50 neighbourhood around one brain voxel, laid out [x][y][t].
struct Patch {
  std::vector<double> signal;
  double baseline = 0.0;
  std::vector<double> aif_channel;  // AIF concentration, raw
  std::array<int, 3> center{};
  std::optional<std::array<double, 3>> labels;  // cbv, cbf, tmax
  double conc_integral = 0.0;  // trapezoidal area of the centre concentration curve
};

struct PatchOptions {
  int stride = 1;
  /// normal:lesion ratio; only applied when a lesion mask is supplied.
  double ratio = 2.0;
  std::uint64_t seed = 1;
  int n_pre = 4;
};

/// Cuts the neighbourhood of one voxel (zero outside the volume) and sets
/// the baseline and AIF channel. Throws numeric for a nonpositive baseline.
Patch crop_patch(const io::Volume4D& v, const std::array<int, 3>& center, const TimeSeries& aif, int n_pre);

/// crop_patch plus the concentration integral of the centre voxel.
Patch make_patch(const io::Volume4D& v, const std::array<int, 3>& center, const TimeSeries& aif,
                 const kinetics::KineticConstants& k, int n_pre);

/// Patches centred on brain voxels whose x and y are multiples of `stride`.
/// Voxels with a nonpositive baseline are skipped. With a lesion mask the
/// normal candidates are subsampled to round(ratio * #lesion).
std::vector<Patch> extract_patches(const io::Volume4D& v, const io::Mask3D& brain, const io::Mask3D* lesion,
                                   const TimeSeries& aif, const kinetics::KineticConstants& k,
                                   const PatchOptions& options, const io::ParameterMaps* labels = nullptr);

/// Normalised network input for a patch.
NetInput make_input(const Patch& p, const Normalization& norm);

}  // namespace perfquant::stnet
