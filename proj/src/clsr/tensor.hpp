#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "clsr/error.hpp"

namespace clsr {

/// Dense row-major array with an optional gradient slot.
template <typename Real>
struct BasicTensor {
  std::vector<std::size_t> shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty when absent

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> shape_, Real fill = Real(0))
      : shape(std::move(shape_)), data(element_count(shape), fill) {}
  BasicTensor(std::vector<std::size_t> shape_, std::vector<Real> data_)
      : shape(std::move(shape_)), data(std::move(data_)) {
    require(element_count(shape) == data.size(), ErrorKind::Shape,
            "tensor data length does not match its shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() { grad.assign(data.size(), Real(0)); }
};

using Tensor = BasicTensor<float>;

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace clsr
