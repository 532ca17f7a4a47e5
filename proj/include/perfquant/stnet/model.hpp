#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perfquant/stnet/layers.hpp"
#include "perfquant/stnet/tensor.hpp"

namespace perfquant::stnet {

inline constexpr int kPatchExtent = 7;
inline constexpr int kTimeLength = 50;
inline constexpr std::size_t kPatchValues = kPatchExtent * kPatchExtent * kTimeLength;
inline constexpr int kSpatialChannels = 64;
inline constexpr int kTemporalChannels = kSpatialChannels + 2;
inline constexpr int kFcHidden = 128;
inline constexpr double kLeakySlope = 0.01;

/// Maps physical quantities to and from network units.
struct Normalization {
  std::array<double, 3> target_mean{0.0, 0.0, 0.0};   // cbv, cbf, tmax
  std::array<double, 3> target_scale{1.0, 1.0, 1.0};
  double signal_scale = 1.0;  // divides the baseline channel
  int n_pre = 4;

  double to_physical(int output, double z) const { return target_mean[output] + target_scale[output] * z; }
  double to_network(int output, double value) const { return (value - target_mean[output]) / target_scale[output]; }
};

/// One voxel's network input, already normalised.
struct NetInput {
  std::vector<double> signal;       // [x][y][t], patch signal / centre baseline
  double baseline_channel = 0.0;    // centre baseline / signal_scale
  std::vector<double> aif_channel;  // AIF / max(AIF)
};

/// Layer weights of the spatial encoder, the two-pathway temporal network
/// and the regression head, plus the normalisation statistics.
class ModelParams {
 public:
  explicit ModelParams(std::uint64_t seed = 1, double dropout_p = 0.2);

  SpatialConv conv1, conv2, conv3, conv4;
  Conv1d merge;
  Conv1d global1, global2;
  Conv1d local1, local2;
  Conv1d head1, head2;
  Linear fc1, fc2;
  Normalization norm;
  double dropout_p;
  /// Concatenate the local pathway before the global one. Only used to
  /// check that the two pathways are interchangeable.
  bool local_first = false;

  /// Every weight and bias in a fixed order with stable names.
  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
};

/// Activations kept from the forward pass for backward.
struct Workspace {
  std::vector<double> in, a1, a2, a3, a4;
  std::vector<double> t_in, m, g1, g2, l1, l2, cat, h1, h2, f1_act, f1, drop_mask;
  std::array<double, 3> out{};
  bool dropout_applied = false;
  bool has_forward = false;

  // gradient scratch
  std::vector<double> d_f1, d_h2, d_h1, d_cat, d_g2, d_g1, d_l2, d_l1, d_m, d_m2, d_t_in, d_a4, d_a3, d_a2, d_a1;

  Workspace();
};

/// 7x7x50 normalised patch -> 64x50 features (channel-major).
void spatial_forward(const ModelParams& m, std::span<const double> signal, Workspace& ws);

/// Features in ws.a4 -> three normalised outputs. `rng` non-null enables dropout.
std::array<double, 3> temporal_forward(const ModelParams& m, double baseline_channel,
                                       std::span<const double> aif_channel, Workspace& ws,
                                       std::mt19937_64* rng = nullptr);

/// Full forward in network units.
std::array<double, 3> forward(const ModelParams& m, const NetInput& input, Workspace& ws,
                              std::mt19937_64* rng = nullptr);

/// Accumulates dLoss/dparam into the parameter gradients given dLoss/dout
/// for the forward pass recorded in `ws`.
void backward(ModelParams& m, Workspace& ws, const std::array<double, 3>& grad_out);

/// Physical-unit (cbv, cbf, tmax) prediction, unclamped, dropout off.
std::array<double, 3> predict_physical(const ModelParams& m, const NetInput& input, Workspace& ws);

}  // namespace perfquant::stnet
