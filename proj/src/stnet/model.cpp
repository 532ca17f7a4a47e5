#include "perfquant/stnet/model.hpp"

#include <algorithm>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

namespace {

constexpr int T = kTimeLength;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void init_conv(Tensor& w, std::size_t in_ch, std::size_t out_ch, std::size_t taps, std::mt19937_64& rng) {
  glorot_init(w, in_ch * taps, out_ch * taps, rng);
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

ModelParams::ModelParams(std::uint64_t seed, double dropout)
    : conv1(1, 8, 3, 1, kPatchExtent, T),
      conv2(8, 16, 3, 0, 7, T),
      conv3(16, 32, 3, 0, 5, T),
      conv4(32, 64, 3, 0, 3, T),
      merge(kTemporalChannels, 64, 3, 1, T),
      global1(64, 32, 11, 5, T),
      global2(32, 32, 11, 5, T),
      local1(64, 32, 3, 1, T),
      local2(32, 32, 3, 1, T),
      head1(64, 32, 3, 1, T),
      head2(32, 16, 3, 1, T),
      fc1(16 * T, kFcHidden),
      fc2(kFcHidden, 3),
      dropout_p(dropout) {
  require(dropout_p >= 0.0 && dropout_p < 1.0, ErrorKind::precondition, "dropout_p must be in [0,1)");
  std::mt19937_64 rng(seed);
  init_conv(conv1.weight, 1, 8, 9, rng);
  init_conv(conv2.weight, 8, 16, 9, rng);
  init_conv(conv3.weight, 16, 32, 9, rng);
  init_conv(conv4.weight, 32, 64, 9, rng);
  init_conv(merge.weight, kTemporalChannels, 64, 3, rng);
  init_conv(global1.weight, 64, 32, 11, rng);
  init_conv(global2.weight, 32, 32, 11, rng);
  init_conv(local1.weight, 64, 32, 3, rng);
  init_conv(local2.weight, 32, 32, 3, rng);
  init_conv(head1.weight, 64, 32, 3, rng);
  init_conv(head2.weight, 32, 16, 3, rng);
  glorot_init(fc1.weight, 16 * T, kFcHidden, rng);
  glorot_init(fc2.weight, kFcHidden, 3, rng);
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::parameters() {
  return {{"spatial.conv1.weight", &conv1.weight}, {"spatial.conv1.bias", &conv1.bias},
          {"spatial.conv2.weight", &conv2.weight}, {"spatial.conv2.bias", &conv2.bias},
          {"spatial.conv3.weight", &conv3.weight}, {"spatial.conv3.bias", &conv3.bias},
          {"spatial.conv4.weight", &conv4.weight}, {"spatial.conv4.bias", &conv4.bias},
          {"temporal.merge.weight", &merge.weight}, {"temporal.merge.bias", &merge.bias},
          {"temporal.global1.weight", &global1.weight}, {"temporal.global1.bias", &global1.bias},
          {"temporal.global2.weight", &global2.weight}, {"temporal.global2.bias", &global2.bias},
          {"temporal.local1.weight", &local1.weight}, {"temporal.local1.bias", &local1.bias},
          {"temporal.local2.weight", &local2.weight}, {"temporal.local2.bias", &local2.bias},
          {"temporal.head1.weight", &head1.weight}, {"temporal.head1.bias", &head1.bias},
          {"temporal.head2.weight", &head2.weight}, {"temporal.head2.bias", &head2.bias},
          {"fc1.weight", &fc1.weight}, {"fc1.bias", &fc1.bias},
          {"fc2.weight", &fc2.weight}, {"fc2.bias", &fc2.bias}};
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->parameters()) out.emplace_back(name, t);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.second->size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& p : parameters()) p.second->zero_grad();
}

Workspace::Workspace()
    : in(kPatchValues),
      a1(sz(8 * 7 * 7 * T)),
      a2(sz(16 * 5 * 5 * T)),
      a3(sz(32 * 3 * 3 * T)),
      a4(sz(64 * T)),
      t_in(sz(kTemporalChannels * T)),
      m(sz(64 * T)),
      g1(sz(32 * T)),
      g2(sz(32 * T)),
      l1(sz(32 * T)),
      l2(sz(32 * T)),
      cat(sz(64 * T)),
      h1(sz(32 * T)),
      h2(sz(16 * T)),
      f1_act(kFcHidden),
      f1(kFcHidden),
      drop_mask(kFcHidden),
      d_f1(kFcHidden),
      d_h2(h2.size()),
      d_h1(h1.size()),
      d_cat(cat.size()),
      d_g2(g2.size()),
      d_g1(g1.size()),
      d_l2(l2.size()),
      d_l1(l1.size()),
      d_m(m.size()),
      d_m2(m.size()),
      d_t_in(t_in.size()),
      d_a4(a4.size()),
      d_a3(a3.size()),
      d_a2(a2.size()),
      d_a1(a1.size()) {}

void spatial_forward(const ModelParams& m, std::span<const double> signal, Workspace& ws) {
  require(signal.size() == kPatchValues, ErrorKind::precondition, "patch must be 7x7x50");
  std::copy(signal.begin(), signal.end(), ws.in.begin());
  m.conv1.forward(ws.in, ws.a1);
  relu_forward(ws.a1);
  m.conv2.forward(ws.a1, ws.a2);
  relu_forward(ws.a2);
  m.conv3.forward(ws.a2, ws.a3);
  relu_forward(ws.a3);
  m.conv4.forward(ws.a3, ws.a4);
  relu_forward(ws.a4);
}

std::array<double, 3> temporal_forward(const ModelParams& m, double baseline_channel,
                                       std::span<const double> aif_channel, Workspace& ws, std::mt19937_64* rng) {
  require(aif_channel.size() == sz(T), ErrorKind::precondition, "AIF channel must have 50 samples");
  std::copy(ws.a4.begin(), ws.a4.end(), ws.t_in.begin());
  std::fill(ws.t_in.begin() + 64 * T, ws.t_in.begin() + 65 * T, baseline_channel);
  std::copy(aif_channel.begin(), aif_channel.end(), ws.t_in.begin() + 65 * T);

  m.merge.forward(ws.t_in, ws.m);
  relu_forward(ws.m);
  m.global1.forward(ws.m, ws.g1);
  relu_forward(ws.g1);
  m.global2.forward(ws.g1, ws.g2);
  relu_forward(ws.g2);
  m.local1.forward(ws.m, ws.l1);
  relu_forward(ws.l1);
  m.local2.forward(ws.l1, ws.l2);
  relu_forward(ws.l2);

  const auto& first = m.local_first ? ws.l2 : ws.g2;
  const auto& second = m.local_first ? ws.g2 : ws.l2;
  std::copy(first.begin(), first.end(), ws.cat.begin());
  std::copy(second.begin(), second.end(), ws.cat.begin() + 32 * T);

  m.head1.forward(ws.cat, ws.h1);
  relu_forward(ws.h1);
  m.head2.forward(ws.h1, ws.h2);
  relu_forward(ws.h2);
  m.fc1.forward(ws.h2, ws.f1_act);
  leaky_relu_forward(ws.f1_act, kLeakySlope);
  ws.f1 = ws.f1_act;
  ws.dropout_applied = rng != nullptr && m.dropout_p > 0.0;
  if (ws.dropout_applied) dropout_forward(ws.f1, ws.drop_mask, m.dropout_p, *rng);
  m.fc2.forward(ws.f1, ws.out);
  ws.has_forward = true;
  return ws.out;
}

std::array<double, 3> forward(const ModelParams& m, const NetInput& input, Workspace& ws, std::mt19937_64* rng) {
  spatial_forward(m, input.signal, ws);
  return temporal_forward(m, input.baseline_channel, input.aif_channel, ws, rng);
}

void backward(ModelParams& m, Workspace& ws, const std::array<double, 3>& grad_out) {
  require(ws.has_forward, ErrorKind::precondition, "backward called before forward");
  m.fc2.backward(ws.f1, grad_out, ws.d_f1);
  if (ws.dropout_applied) dropout_backward(ws.drop_mask, ws.d_f1);
  leaky_relu_backward(ws.f1_act, ws.d_f1, kLeakySlope);
  m.fc1.backward(ws.h2, ws.d_f1, ws.d_h2);
  relu_backward(ws.h2, ws.d_h2);
  m.head2.backward(ws.h1, ws.d_h2, ws.d_h1);
  relu_backward(ws.h1, ws.d_h1);
  m.head1.backward(ws.cat, ws.d_h1, ws.d_cat);

  const std::span<const double> d_cat(ws.d_cat);
  const auto d_first = d_cat.subspan(0, sz(32 * T));
  const auto d_second = d_cat.subspan(sz(32 * T));
  const auto d_global = m.local_first ? d_second : d_first;
  const auto d_local = m.local_first ? d_first : d_second;
  std::copy(d_global.begin(), d_global.end(), ws.d_g2.begin());
  std::copy(d_local.begin(), d_local.end(), ws.d_l2.begin());

  relu_backward(ws.g2, ws.d_g2);
  m.global2.backward(ws.g1, ws.d_g2, ws.d_g1);
  relu_backward(ws.g1, ws.d_g1);
  m.global1.backward(ws.m, ws.d_g1, ws.d_m);
  relu_backward(ws.l2, ws.d_l2);
  m.local2.backward(ws.l1, ws.d_l2, ws.d_l1);
  relu_backward(ws.l1, ws.d_l1);
  m.local1.backward(ws.m, ws.d_l1, ws.d_m2);
  add_into(ws.d_m, ws.d_m2);
  relu_backward(ws.m, ws.d_m);
  m.merge.backward(ws.t_in, ws.d_m, ws.d_t_in);

  std::copy(ws.d_t_in.begin(), ws.d_t_in.begin() + 64 * T, ws.d_a4.begin());
  relu_backward(ws.a4, ws.d_a4);
  m.conv4.backward(ws.a3, ws.d_a4, ws.d_a3);
  relu_backward(ws.a3, ws.d_a3);
  m.conv3.backward(ws.a2, ws.d_a3, ws.d_a2);
  relu_backward(ws.a2, ws.d_a2);
  m.conv2.backward(ws.a1, ws.d_a2, ws.d_a1);
  relu_backward(ws.a1, ws.d_a1);
  m.conv1.backward(ws.in, ws.d_a1, {});
}

std::array<double, 3> predict_physical(const ModelParams& m, const NetInput& input, Workspace& ws) {
  const auto z = forward(m, input, ws, nullptr);
  return {m.norm.to_physical(0, z[0]), m.norm.to_physical(1, z[1]), m.norm.to_physical(2, z[2])};
}

}  // namespace perfquant::stnet
