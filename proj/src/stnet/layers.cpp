#include "perfquant/stnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

namespace {

inline void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

std::size_t to_size(int v) { return static_cast<std::size_t>(v); }

}  // namespace

SpatialConv::SpatialConv(int in_channels, int out_channels, int kernel, int pad, int in_extent, int time)
    : weight({to_size(out_channels), to_size(in_channels), to_size(kernel), to_size(kernel)}),
      bias({to_size(out_channels)}),
      in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      pad_(pad),
      in_extent_(in_extent),
      time_(time) {
  require(out_extent() >= 1, ErrorKind::precondition, "spatial convolution output would be empty");
}

std::size_t SpatialConv::in_size() const {
  return to_size(in_ch_) * to_size(in_extent_) * to_size(in_extent_) * to_size(time_);
}

std::size_t SpatialConv::out_size() const {
  return to_size(out_ch_) * to_size(out_extent()) * to_size(out_extent()) * to_size(time_);
}

void SpatialConv::forward(std::span<const double> in, std::span<double> out) const {
  const std::size_t T = to_size(time_), X = to_size(in_extent_);
  const int O = out_extent();
  const std::size_t in_plane = X * X * T, out_plane = to_size(O) * to_size(O) * T;
  for (int co = 0; co < out_ch_; ++co) {
    double* o = out.data() + to_size(co) * out_plane;
    std::fill(o, o + out_plane, bias[to_size(co)]);
    for (int ci = 0; ci < in_ch_; ++ci) {
      const double* src = in.data() + to_size(ci) * in_plane;
      for (int dx = 0; dx < kernel_; ++dx)
        for (int dy = 0; dy < kernel_; ++dy) {
          const double w = weight[((to_size(co) * to_size(in_ch_) + to_size(ci)) * to_size(kernel_) + to_size(dx)) *
                                      to_size(kernel_) + to_size(dy)];
          for (int x = 0; x < O; ++x) {
            const int xi = x + dx - pad_;
            if (xi < 0 || xi >= in_extent_) continue;
            for (int y = 0; y < O; ++y) {
              const int yi = y + dy - pad_;
              if (yi < 0 || yi >= in_extent_) continue;
              axpy(T, w, src + (to_size(xi) * X + to_size(yi)) * T, o + (to_size(x) * to_size(O) + to_size(y)) * T);
            }
          }
        }
    }
  }
}

void SpatialConv::backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in) {
  weight.enable_grad();
  bias.enable_grad();
  const std::size_t T = to_size(time_), X = to_size(in_extent_);
  const int O = out_extent();
  const std::size_t in_plane = X * X * T, out_plane = to_size(O) * to_size(O) * T;
  const bool want_input = !grad_in.empty();
  if (want_input) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  auto gw = weight.grad();
  auto gb = bias.grad();
  for (int co = 0; co < out_ch_; ++co) {
    const double* g = grad_out.data() + to_size(co) * out_plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) bsum += g[i];
    gb[to_size(co)] += bsum;
    for (int ci = 0; ci < in_ch_; ++ci) {
      const double* src = in.data() + to_size(ci) * in_plane;
      double* gsrc = want_input ? grad_in.data() + to_size(ci) * in_plane : nullptr;
      for (int dx = 0; dx < kernel_; ++dx)
        for (int dy = 0; dy < kernel_; ++dy) {
          const std::size_t widx =
              ((to_size(co) * to_size(in_ch_) + to_size(ci)) * to_size(kernel_) + to_size(dx)) * to_size(kernel_) +
              to_size(dy);
          const double w = weight[widx];
          double acc = 0.0;
          for (int x = 0; x < O; ++x) {
            const int xi = x + dx - pad_;
            if (xi < 0 || xi >= in_extent_) continue;
            for (int y = 0; y < O; ++y) {
              const int yi = y + dy - pad_;
              if (yi < 0 || yi >= in_extent_) continue;
              const double* go = g + (to_size(x) * to_size(O) + to_size(y)) * T;
              const std::size_t src_off = (to_size(xi) * X + to_size(yi)) * T;
              acc += dot(T, go, src + src_off);
              if (gsrc) axpy(T, w, go, gsrc + src_off);
            }
          }
          gw[widx] += acc;
        }
    }
  }
}

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int pad, int length)
    : weight({to_size(out_channels), to_size(in_channels), to_size(kernel)}),
      bias({to_size(out_channels)}),
      in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      pad_(pad),
      length_(length) {
  require(out_length() >= 1, ErrorKind::precondition, "1-D convolution output would be empty");
}

void Conv1d::forward(std::span<const double> in, std::span<double> out) const {
  const int L = length_, OL = out_length();
  for (int co = 0; co < out_ch_; ++co) {
    double* o = out.data() + to_size(co) * to_size(OL);
    std::fill(o, o + OL, bias[to_size(co)]);
    for (int ci = 0; ci < in_ch_; ++ci) {
      const double* src = in.data() + to_size(ci) * to_size(L);
      for (int k = 0; k < kernel_; ++k) {
        const double w = weight[(to_size(co) * to_size(in_ch_) + to_size(ci)) * to_size(kernel_) + to_size(k)];
        const int shift = k - pad_;
        const int t0 = std::max(0, -shift), t1 = std::min(OL, L - shift);
        if (t1 > t0) axpy(to_size(t1 - t0), w, src + t0 + shift, o + t0);
      }
    }
  }
}

void Conv1d::backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in) {
  weight.enable_grad();
  bias.enable_grad();
  const int L = length_, OL = out_length();
  const bool want_input = !grad_in.empty();
  if (want_input) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  auto gw = weight.grad();
  auto gb = bias.grad();
  for (int co = 0; co < out_ch_; ++co) {
    const double* g = grad_out.data() + to_size(co) * to_size(OL);
    double bsum = 0.0;
    for (int t = 0; t < OL; ++t) bsum += g[t];
    gb[to_size(co)] += bsum;
    for (int ci = 0; ci < in_ch_; ++ci) {
      const double* src = in.data() + to_size(ci) * to_size(L);
      double* gsrc = want_input ? grad_in.data() + to_size(ci) * to_size(L) : nullptr;
      for (int k = 0; k < kernel_; ++k) {
        const std::size_t widx = (to_size(co) * to_size(in_ch_) + to_size(ci)) * to_size(kernel_) + to_size(k);
        const int shift = k - pad_;
        const int t0 = std::max(0, -shift), t1 = std::min(OL, L - shift);
        if (t1 <= t0) continue;
        gw[widx] += dot(to_size(t1 - t0), g + t0, src + t0 + shift);
        if (gsrc) axpy(to_size(t1 - t0), weight[widx], g + t0, gsrc + t0 + shift);
      }
    }
  }
}

Linear::Linear(int in_features, int out_features)
    : weight({to_size(out_features), to_size(in_features)}), bias({to_size(out_features)}), in_(in_features), out_(out_features) {}

void Linear::forward(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = to_size(in_);
  for (std::size_t o = 0; o < to_size(out_); ++o)
    out[o] = bias[o] + dot(n, weight.values().data() + o * n, in.data());
}

void Linear::backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in) {
  weight.enable_grad();
  bias.enable_grad();
  const std::size_t n = to_size(in_);
  const bool want_input = !grad_in.empty();
  if (want_input) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  auto gw = weight.grad();
  auto gb = bias.grad();
  for (std::size_t o = 0; o < to_size(out_); ++o) {
    const double g = grad_out[o];
    gb[o] += g;
    if (g == 0.0) continue;
    axpy(n, g, in.data(), gw.data() + o * n);
    if (want_input) axpy(n, g, weight.values().data() + o * n, grad_in.data());
  }
}

void relu_forward(std::span<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

void relu_backward(std::span<const double> out, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(out[i] > 0.0)) grad[i] = 0.0;
}

void leaky_relu_forward(std::span<double> x, double slope) {
  for (double& v : x) v = v > 0.0 ? v : slope * v;
}

void leaky_relu_backward(std::span<const double> out, std::span<double> grad, double slope) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(out[i] > 0.0)) grad[i] *= slope;
}

void dropout_forward(std::span<double> x, std::span<double> mask, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = keep(rng) ? scale : 0.0;
    x[i] *= mask[i];
  }
}

void dropout_backward(std::span<const double> mask, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
}

void glorot_init(Tensor& weight, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : weight.values()) w = dist(rng);
}

}  // namespace perfquant::stnet
