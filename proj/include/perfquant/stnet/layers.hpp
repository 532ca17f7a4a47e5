#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "perfquant/stnet/tensor.hpp"

// Building blocks of the spatiotemporal network. Each layer owns its
// weight and bias tensors; forward() is const, backward() accumulates into
// the parameter gradients and overwrites the input gradient if requested.
namespace perfquant::stnet {

/// Convolution with a (k, k, 1) kernel over activations laid out as
/// [channel][x][y][t]; the time axis is never mixed.
class SpatialConv {
 public:
  SpatialConv(int in_channels, int out_channels, int kernel, int pad, int in_extent, int time);

  int out_extent() const { return in_extent_ + 2 * pad_ - kernel_ + 1; }
  std::size_t in_size() const;
  std::size_t out_size() const;

  void forward(std::span<const double> in, std::span<double> out) const;
  void backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in);

  Tensor weight;  // [out][in][k][k]
  Tensor bias;    // [out]

 private:
  int in_ch_, out_ch_, kernel_, pad_, in_extent_, time_;
};

/// 1-D convolution over [channel][t] with zero padding, stride 1.
class Conv1d {
 public:
  Conv1d(int in_channels, int out_channels, int kernel, int pad, int length);

  std::size_t in_size() const { return static_cast<std::size_t>(in_ch_) * static_cast<std::size_t>(length_); }
  std::size_t out_size() const { return static_cast<std::size_t>(out_ch_) * static_cast<std::size_t>(out_length()); }
  int out_length() const { return length_ + 2 * pad_ - kernel_ + 1; }

  void forward(std::span<const double> in, std::span<double> out) const;
  void backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in);

  Tensor weight;  // [out][in][k]
  Tensor bias;    // [out]

 private:
  int in_ch_, out_ch_, kernel_, pad_, length_;
};

class Linear {
 public:
  Linear(int in_features, int out_features);

  std::size_t in_size() const { return static_cast<std::size_t>(in_); }
  std::size_t out_size() const { return static_cast<std::size_t>(out_); }

  void forward(std::span<const double> in, std::span<double> out) const;
  void backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in);

  Tensor weight;  // [out][in]
  Tensor bias;    // [out]

 private:
  int in_, out_;
};

/// In-place activations. The backward variants read the activation output
/// and mask the incoming gradient in place.
void relu_forward(std::span<double> x);
void relu_backward(std::span<const double> out, std::span<double> grad);
void leaky_relu_forward(std::span<double> x, double slope);
void leaky_relu_backward(std::span<const double> out, std::span<double> grad, double slope);

/// Inverted dropout: kept units are scaled by 1/(1-p); `mask` receives the
/// per-unit multiplier so backward can replay it.
void dropout_forward(std::span<double> x, std::span<double> mask, double p, std::mt19937_64& rng);
void dropout_backward(std::span<const double> mask, std::span<double> grad);

/// Glorot-uniform weights, zero biases.
void glorot_init(Tensor& weight, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace perfquant::stnet
