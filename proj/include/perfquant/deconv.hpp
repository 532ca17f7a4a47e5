#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "perfquant/linalg.hpp"
#include "perfquant/time_series.hpp"
#include "perfquant/tracer_kinetics.hpp"
#include "perfquant/volume_io.hpp"

// Truncated-SVD deconvolution of tissue curves by the arterial input.
namespace perfquant::deconv {

enum class Mode { standard, block_circulant };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct DeconvConfig {
  Mode mode = Mode::block_circulant;
  double threshold_frac = 0.10;  // singular values below this fraction of the largest are dropped
  int pad_factor = 2;            // block-circulant zero padding multiple

  void validate() const;
};

/// Standard: lower-triangular Toeplitz A[i][j] = dt*c_a[i-j] (N = nt).
/// Block-circulant: circulant of the AIF zero-padded to N = pad_factor*nt.
linalg::Matrix build_convolution_matrix(const TimeSeries& c_a, Mode mode, int pad_factor);

/// Truncated pseudo-inverse V * Sigma^+ * U^T of a square system, kept for
/// repeated solves against the same AIF.
class TruncatedInverse {
 public:
  TruncatedInverse(const linalg::Matrix& a, double threshold_frac);

  /// Solves for r; `rhs` is zero-padded to the system size and the result
  /// truncated to `out_len` samples.
  std::vector<double> solve(std::span<const double> rhs, std::size_t out_len) const;

  std::size_t size() const { return pinv_.rows(); }
  std::size_t rank() const { return rank_; }
  std::span<const double> singular_values() const { return singular_; }

 private:
  linalg::Matrix pinv_;
  std::vector<double> singular_;
  std::size_t rank_ = 0;
};

/// r = V * Sigma^+ * U^T * c_t, truncated back to length(c_t).
TimeSeries svd_deconvolve(const linalg::Matrix& a, const TimeSeries& c_t, double threshold_frac);

struct DeconvResult {
  io::ParameterMaps maps;
  std::map<std::string, long long> diagnostics;
};

/// Full voxelwise pipeline: baseline, signal -> concentration, CBV from the
/// curve area, residue by SVD, then CBF, MTT and Tmax. The AIF and VOF are
/// concentration curves.
DeconvResult deconvolve_volume(const io::Volume4D& volume, const io::Mask3D& brain, const TimeSeries& aif,
                               const TimeSeries& vof, const kinetics::KineticConstants& k,
                               const DeconvConfig& cfg, int n_pre);

}  // namespace perfquant::deconv
