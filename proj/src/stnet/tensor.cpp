#include "perfquant/stnet/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) require(d > 0, ErrorKind::precondition, "tensor dimensions must be positive");
  values_.assign(shape_size(shape_), fill);
}

void Tensor::enable_grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
}

void Tensor::zero_grad() {
  enable_grad();
  std::fill(grad_.begin(), grad_.end(), 0.0);
}

}  // namespace perfquant::stnet
