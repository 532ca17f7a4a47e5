#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perfquant/volume_io.hpp"

// Voxel-level map agreement and lesion segmentation scores. Every statistic
// is restricted to the supplied mask.
namespace perfquant::metrics {

struct MaskedPair {
  std::span<const double> reference;
  std::span<const double> estimate;
  const io::Mask3D& mask;  // also supplies dims and voxel spacing
};

/// 10*log10(peak^2/MSE), peak = max reference over the mask. Returns +inf
/// for identical inputs.
double psnr(const MaskedPair& p);

struct SsimOptions {
  int window = 7;
  /// Overrides L (reference max - min over the mask) in C1 and C2; passing
  /// the same value for both argument orders makes ssim symmetric.
  std::optional<double> dynamic_range;
};

/// Mean of 2-D per-slice windowed SSIM over windows centred on masked
/// voxels. Window statistics use only masked in-bounds voxels.
double ssim(const MaskedPair& p, const SsimOptions& options = {});

double pcc(const MaskedPair& p);
/// Pearson correlation of midranks.
double scc(const MaskedPair& p);
/// RMSE over the mask divided by the reference mean over the mask.
double nrmse(const MaskedPair& p);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

struct RocCurve {
  std::vector<double> thresholds;  // ascending; last is +inf
  std::vector<double> tpr;
  std::vector<double> fpr;
};

struct Roc {
  RocCurve curve;
  double auc = 0.0;
};

/// Voxels are positive when tmax > threshold. Thresholds are the midpoints
/// between consecutive distinct tmax values in the brain, plus +inf. AUC is
/// the trapezoid over (fpr, tpr) anchored at (1,1) and (0,0).
Roc roc_and_auc(std::span<const double> tmax, const io::Mask3D& lesion, const io::Mask3D& brain);

/// Threshold minimising |TPR - (1 - FPR)|; ties go to the smaller threshold.
double select_threshold(const RocCurve& roc);

/// brain AND (tmax > threshold).
io::Mask3D segment_hypoperfusion(std::span<const double> tmax, const io::Mask3D& brain, double threshold_s);

double dice(const io::Mask3D& a, const io::Mask3D& b);
double iou(const io::Mask3D& a, const io::Mask3D& b);

/// Voxels of `m` with a 6-neighbour outside `m` (or outside the grid).
std::vector<std::size_t> surface_voxels(const io::Mask3D& m);

/// Squared Euclidean distance (mm^2) from every voxel to the nearest set
/// voxel of `m`, exact, with anisotropic spacing.
std::vector<double> squared_distance_transform(const io::Mask3D& m, const io::Spacing3& voxel_mm);

/// Linear-interpolated percentile, q in [0,1].
double percentile(std::vector<double> values, double q);

/// 95th-percentile symmetric surface distance in mm.
double hd95(const io::Mask3D& a, const io::Mask3D& b, const io::Spacing3& voxel_mm);

}  // namespace perfquant::metrics
