#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "blurscope/error.hpp"

namespace blurscope::cnn {

/// Dense row-major tensor of up to four dimensions. Activations use [C, H, W].
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0) : shape(std::move(dims)) {
    validate_shape(shape);
    data.assign(element_count(shape), fill);
  }

  Tensor(std::vector<std::size_t> dims, std::vector<double> values) : shape(std::move(dims)), data(std::move(values)) {
    validate_shape(shape);
    if (data.size() != element_count(shape)) {
      throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                                " does not match shape " + shape_string(shape));
    }
  }

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool operator==(const Tensor&) const = default;

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  static std::string shape_string(const std::vector<std::size_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s + "]";
  }

 private:
  static void validate_shape(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 4) {
      throw Error(ErrorCode::ShapeMismatch, "tensor rank must be 1..4, got " + std::to_string(dims.size()));
    }
    for (auto d : dims) {
      if (d == 0) throw Error(ErrorCode::ShapeMismatch, "zero extent in shape " + shape_string(dims));
    }
  }
};

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& expected, const char* what) {
  if (t.shape != expected) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected " + Tensor::shape_string(expected) +
                                              ", got " + Tensor::shape_string(t.shape));
  }
}

}  // namespace blurscope::cnn
